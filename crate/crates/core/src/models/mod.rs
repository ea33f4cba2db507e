//! Non-stationary process families, density tilts and observables.

mod chain;
mod map;
mod observable;
mod sampling;
mod tilt;

use std::borrow::Cow;

use serde::Serialize;

pub use chain::{IidModel, InhomogeneousMarkovChain};
pub use map::{unit_from_bits, SequentialExpandingMap};
pub(crate) use observable::harmonic_bits;
pub use observable::{IntervalObservableFn, MomentBound, ObservableKind, ObservableSequence};
pub use sampling::{sample_trajectories, Measure, MeasureTag, TrajectoryBatch, TrajectoryStates};
pub(crate) use sampling::{Sampler, Visit};
pub use tilt::{lp_norm, DensityTilt, IntervalFn, NormClass, TiltFunction, ValidationStamp};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StateSpace {
    /// The unit interval with Lebesgue measure.
    Interval,
    /// States `0..n`.
    Discrete(usize),
}

/// A process family with a sampling contract.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ProcessModel {
    Map(SequentialExpandingMap),
    Chain(InhomogeneousMarkovChain),
    Iid(IidModel),
}

impl ProcessModel {
    pub fn state_space(&self) -> StateSpace {
        match self {
            ProcessModel::Map(_) => StateSpace::Interval,
            ProcessModel::Chain(c) => StateSpace::Discrete(c.state_count()),
            ProcessModel::Iid(m) => StateSpace::Discrete(m.weights().len()),
        }
    }

    /// Law of `X_0` for finite-state models; `None` for maps (Lebesgue).
    pub fn initial_law(&self) -> Option<Vec<f64>> {
        match self {
            ProcessModel::Map(_) => None,
            ProcessModel::Chain(c) => Some(c.initial().to_vec()),
            ProcessModel::Iid(m) => Some(m.weights().to_vec()),
        }
    }

    /// Chain view for exact computations; `None` for maps.
    pub fn as_chain(&self) -> Option<Cow<'_, InhomogeneousMarkovChain>> {
        match self {
            ProcessModel::Map(_) => None,
            ProcessModel::Chain(c) => Some(Cow::Borrowed(c)),
            ProcessModel::Iid(m) => Some(Cow::Owned(m.as_chain())),
        }
    }

    /// Errors when a path of `length` states exceeds a finite horizon.
    pub fn check_length(&self, length: usize) -> Result<()> {
        match self {
            ProcessModel::Map(m) => m.check_length(length),
            ProcessModel::Chain(c) => c.check_length(length),
            ProcessModel::Iid(_) => Ok(()),
        }
    }
}
