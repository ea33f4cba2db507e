use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::chain::{categorical, cumulative_row};
use crate::models::{
    unit_from_bits, DensityTilt, InhomogeneousMarkovChain, ProcessModel, SequentialExpandingMap,
    TiltFunction,
};
use crate::rng::{self, StreamRng, LANE_INIT, LANE_STEP};

/// Cap on rejection proposals for one interval starting point.
const MAX_PROPOSALS: usize = 10_000_000;

/// Measure the starting point is drawn from.
#[derive(Debug, Clone, Copy)]
pub enum Measure<'a> {
    /// `μ`: Lebesgue for maps, `μ_0` for chains.
    Base,
    /// `ν = r dμ`; the tilt must have passed validation.
    Tilted(&'a DensityTilt),
}

impl Measure<'_> {
    pub fn tag(&self) -> MeasureTag {
        match self {
            Measure::Base => MeasureTag::Base,
            Measure::Tilted(_) => MeasureTag::Tilted,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MeasureTag {
    #[serde(rename = "mu")]
    Base,
    #[serde(rename = "nu")]
    Tilted,
}

/// Materialized states, row-major `count × length`.
#[derive(Debug, Clone, PartialEq)]
pub enum TrajectoryStates {
    /// Fixed-point interval states (`x = bits / 2^64`).
    Interval(Vec<u64>),
    Discrete(Vec<u32>),
}

/// `count` trajectories `X_0, …, X_{length-1}` under one measure.
#[derive(Debug, Clone)]
pub struct TrajectoryBatch {
    pub states: TrajectoryStates,
    pub count: usize,
    pub length: usize,
    pub measure: MeasureTag,
    pub master_seed: u64,
    pub model: ProcessModel,
}

impl TrajectoryBatch {
    /// State `X_j` of trajectory `i` as a real number (interval point or state index).
    pub fn value(&self, i: usize, j: usize) -> f64 {
        let k = i * self.length + j;
        match &self.states {
            TrajectoryStates::Interval(v) => unit_from_bits(v[k]),
            TrajectoryStates::Discrete(v) => v[k] as f64,
        }
    }

    pub fn initial_values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.value(i, 0)).collect()
    }
}

/// One visited state, handed to per-step callbacks.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Visit {
    /// Fixed-point interval state `bits / 2^64`.
    Point(u64),
    State(usize),
}

/// Per-trajectory starting-law tables for finite-state models.
pub(crate) struct DiscreteInit {
    pub(crate) cumulative: Vec<f64>,
}

pub(crate) enum Kernel<'a> {
    Chain(&'a InhomogeneousMarkovChain),
    Iid(Vec<f64>),
}

/// Shared, immutable sampling plan for one (model, measure) pair.
pub(crate) enum Sampler<'a> {
    Map {
        map: &'a SequentialExpandingMap,
        tilt: Option<(&'a DensityTilt, f64)>,
    },
    Discrete {
        kernel: Kernel<'a>,
        init: DiscreteInit,
    },
}

pub(crate) fn init_map(tilt: Option<(&DensityTilt, f64)>, rng: &mut StreamRng) -> Result<u64> {
    use rand::RngCore;
    match tilt {
        None => Ok(rng.next_u64()),
        Some((t, sup)) => {
            // The first proposal equals the base-measure draw, which couples
            // μ- and ν-batches sharing a seed.
            for _ in 0..MAX_PROPOSALS {
                let bits = rng.next_u64();
                let u = rng::unit_f64(rng);
                let r = t.at_point(unit_from_bits(bits)).unwrap_or(0.0);
                if u * sup < r {
                    return Ok(bits);
                }
            }
            Err(Error::Numerical(
                "rejection sampler exhausted its proposal budget".into(),
            ))
        }
    }
}

pub(crate) fn init_discrete(init: &DiscreteInit, rng: &mut StreamRng) -> usize {
    categorical(&init.cumulative, rng::unit_f64(rng))
}

impl<'a> Sampler<'a> {
    pub(crate) fn new(model: &'a ProcessModel, measure: Measure<'a>) -> Result<Self> {
        let tilt = match measure {
            Measure::Base => None,
            Measure::Tilted(t) => {
                if !t.is_validated() {
                    return Err(Error::InvalidInput("tilt has not been validated".into()));
                }
                Some(t)
            }
        };
        match model {
            ProcessModel::Map(map) => {
                let tilt = match tilt {
                    None => None,
                    Some(t) => {
                        if !matches!(t.function(), TiltFunction::Interval { .. }) {
                            return Err(Error::InvalidInput(
                                "interval map needs an interval density".into(),
                            ));
                        }
                        let sup = t
                            .sup_bound()
                            .filter(|s| s.is_finite() && *s > 0.0)
                            .ok_or_else(|| {
                                Error::InvalidInput(
                                    "rejection sampling needs a finite sup bound".into(),
                                )
                            })?;
                        Some((t, sup))
                    }
                };
                Ok(Sampler::Map { map, tilt })
            }
            ProcessModel::Chain(_) | ProcessModel::Iid(_) => {
                let law = model.initial_law().expect("finite-state model");
                let start: Vec<f64> = match tilt {
                    None => law,
                    Some(t) => {
                        let TiltFunction::States(r) = t.function() else {
                            return Err(Error::InvalidInput(
                                "finite-state model needs a state density".into(),
                            ));
                        };
                        if r.len() != law.len() {
                            return Err(Error::InvalidInput("density length mismatch".into()));
                        }
                        law.iter().zip(r).map(|(m, r)| m * r).collect()
                    }
                };
                let kernel = match model {
                    ProcessModel::Chain(c) => Kernel::Chain(c),
                    ProcessModel::Iid(m) => Kernel::Iid(cumulative_row(m.weights())),
                    ProcessModel::Map(_) => unreachable!(),
                };
                Ok(Sampler::Discrete {
                    kernel,
                    init: DiscreteInit {
                        cumulative: cumulative_row(&start),
                    },
                })
            }
        }
    }

    /// Visits `X_0, …, X_{length-1}` of trajectory `index`.
    #[inline]
    pub(crate) fn walk<F: FnMut(usize, Visit)>(
        &self,
        seed: u64,
        index: u64,
        length: usize,
        mut visit: F,
    ) -> Result<()> {
        let mut init_rng = rng::stream(seed, index, LANE_INIT);
        let mut step_rng = rng::stream(seed, index, LANE_STEP);
        match self {
            Sampler::Map { map, tilt } => {
                let mut x = init_map(*tilt, &mut init_rng)?;
                let mut slopes = map.cursor();
                for j in 0..length {
                    if j > 0 {
                        let k = slopes.advance();
                        x = SequentialExpandingMap::step(x, k, rng::digit(&mut step_rng, k));
                    }
                    visit(j, Visit::Point(x));
                }
            }
            Sampler::Discrete { kernel, init } => {
                let mut s = init_discrete(init, &mut init_rng);
                for j in 0..length {
                    if j > 0 {
                        let u = rng::unit_f64(&mut step_rng);
                        s = match kernel {
                            Kernel::Chain(c) => categorical(c.cumulative_row(j - 1, s), u),
                            Kernel::Iid(cum) => categorical(cum, u),
                        };
                    }
                    visit(j, Visit::State(s));
                }
            }
        }
        Ok(())
    }

    /// Like [`walk`](Self::walk) but keeps raw fixed-point map states.
    fn walk_raw(&self, seed: u64, index: u64, row: &mut RawRow<'_>) -> Result<()> {
        let mut init_rng = rng::stream(seed, index, LANE_INIT);
        let mut step_rng = rng::stream(seed, index, LANE_STEP);
        match (self, row) {
            (Sampler::Map { map, tilt }, RawRow::Interval(out)) => {
                let mut x = init_map(*tilt, &mut init_rng)?;
                let mut slopes = map.cursor();
                for (j, o) in out.iter_mut().enumerate() {
                    if j > 0 {
                        let k = slopes.advance();
                        x = SequentialExpandingMap::step(x, k, rng::digit(&mut step_rng, k));
                    }
                    *o = x;
                }
            }
            (Sampler::Discrete { .. }, RawRow::Discrete(out)) => {
                let mut j = 0;
                let n = out.len();
                self.walk(seed, index, n, |_, v| {
                    if let Visit::State(s) = v {
                        out[j] = s as u32;
                    }
                    j += 1;
                })?;
            }
            _ => unreachable!("row kind follows the sampler"),
        }
        Ok(())
    }
}

enum RawRow<'a> {
    Interval(&'a mut [u64]),
    Discrete(&'a mut [u32]),
}

/// Samples `count` trajectories of `length` states. Trajectory `i` depends
/// only on `(seed, i)`; rows are produced in parallel.
pub fn sample_trajectories(
    model: &ProcessModel,
    length: usize,
    count: usize,
    seed: u64,
    measure: Measure<'_>,
) -> Result<TrajectoryBatch> {
    if length == 0 || count == 0 {
        return Err(Error::InvalidInput(
            "length and count must be at least 1".into(),
        ));
    }
    model.check_length(length)?;
    let sampler = Sampler::new(model, measure)?;
    let states = match model {
        ProcessModel::Map(_) => {
            let mut buf = vec![0u64; count * length];
            buf.par_chunks_mut(length)
                .enumerate()
                .try_for_each(|(i, row)| {
                    sampler.walk_raw(seed, i as u64, &mut RawRow::Interval(row))
                })?;
            TrajectoryStates::Interval(buf)
        }
        _ => {
            let mut buf = vec![0u32; count * length];
            buf.par_chunks_mut(length)
                .enumerate()
                .try_for_each(|(i, row)| {
                    sampler.walk_raw(seed, i as u64, &mut RawRow::Discrete(row))
                })?;
            TrajectoryStates::Discrete(buf)
        }
    };
    Ok(TrajectoryBatch {
        states,
        count,
        length,
        measure: measure.tag(),
        master_seed: seed,
        model: model.clone(),
    })
}
