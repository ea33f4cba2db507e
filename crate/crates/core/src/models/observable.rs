use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::models::{unit_from_bits, ProcessModel, StateSpace};
use crate::numeric;

/// `g_j(x)` written into an output slice of length `dim`.
pub type IntervalObservableFn = Arc<dyn Fn(usize, f64, &mut [f64]) + Send + Sync>;

#[derive(Clone)]
pub enum ObservableKind {
    Interval(IntervalObservableFn),
    /// `cos(2π m x)` or `sin(2π m x)`, evaluated from the fixed-point state.
    Harmonic {
        frequency: u32,
        sine: bool,
    },
    /// Per-index tables, each `states × dim` row-major.
    States {
        states: usize,
        tables: Vec<Vec<f64>>,
        periodic: bool,
    },
}

/// Declared bound `‖g_j‖_p ≤ bound` for every `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentBound {
    pub p: f64,
    pub bound: f64,
}

/// The functions `g_j` summed along a trajectory (window width one: `g_j`
/// reads `X_j` only).
#[derive(Clone)]
pub struct ObservableSequence {
    dim: usize,
    kind: ObservableKind,
    /// Per-index `‖g_j‖_∞`, repeating with the list length.
    sup_norms: Option<Vec<f64>>,
    moment_bounds: Vec<MomentBound>,
}

impl fmt::Debug for ObservableSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            ObservableKind::Interval(_) => "interval".to_string(),
            ObservableKind::Harmonic { frequency, sine } => {
                format!("{}(2π·{frequency}·x)", if *sine { "sin" } else { "cos" })
            }
            ObservableKind::States {
                states,
                tables,
                periodic,
            } => {
                format!(
                    "states({states}, {} tables, periodic={periodic})",
                    tables.len()
                )
            }
        };
        f.debug_struct("ObservableSequence")
            .field("dim", &self.dim)
            .field("kind", &kind)
            .field("sup_norms", &self.sup_norms)
            .finish()
    }
}

impl ObservableSequence {
    /// `g_j(x) = cos(2π m x)` for every `j`.
    pub fn cosine(frequency: u32) -> Self {
        Self::harmonic(frequency, false)
    }

    /// `g_j(x) = sin(2π m x)` for every `j`.
    pub fn sine(frequency: u32) -> Self {
        Self::harmonic(frequency, true)
    }

    fn harmonic(frequency: u32, sine: bool) -> Self {
        Self {
            dim: 1,
            kind: ObservableKind::Harmonic { frequency, sine },
            sup_norms: Some(vec![1.0]),
            moment_bounds: Vec::new(),
        }
    }

    pub fn interval_scalar<F>(f: F, sup_norm: Option<f64>) -> Self
    where
        F: Fn(usize, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            dim: 1,
            kind: ObservableKind::Interval(Arc::new(move |j, x, out: &mut [f64]| out[0] = f(j, x))),
            sup_norms: sup_norm.map(|s| vec![s]),
            moment_bounds: Vec::new(),
        }
    }

    pub fn interval_vector(
        dim: usize,
        f: IntervalObservableFn,
        sup_norms: Option<Vec<f64>>,
    ) -> Self {
        Self {
            dim,
            kind: ObservableKind::Interval(f),
            sup_norms,
            moment_bounds: Vec::new(),
        }
    }

    /// State-indexed observable; `tables[j mod len]` (or `tables[j]` when not
    /// periodic) holds `g_j` as `states × dim` values.
    pub fn state_values(
        states: usize,
        dim: usize,
        tables: Vec<Vec<f64>>,
        periodic: bool,
    ) -> Result<Self> {
        if dim == 0 || states == 0 || tables.is_empty() {
            return Err(Error::InvalidInput(
                "observable needs states, dimension and tables".into(),
            ));
        }
        if let Some((j, t)) = tables
            .iter()
            .enumerate()
            .find(|(_, t)| t.len() != states * dim)
        {
            return Err(Error::InvalidInput(format!(
                "observable table {j} has {} entries, expected {}",
                t.len(),
                states * dim
            )));
        }
        if tables.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "observable tables must be finite".into(),
            ));
        }
        let sups = tables
            .iter()
            .map(|t| t.iter().fold(0.0f64, |m, v| m.max(v.abs())))
            .collect();
        Ok(Self {
            dim,
            kind: ObservableKind::States {
                states,
                tables,
                periodic,
            },
            sup_norms: Some(sups),
            moment_bounds: Vec::new(),
        })
    }

    /// Scalar state observable, the same for every index.
    pub fn state_scalar(values: Vec<f64>) -> Result<Self> {
        Self::state_values(values.len(), 1, vec![values], true)
    }

    /// `g ≡ 0` of dimension `dim` on the given state space.
    pub fn zero(space: StateSpace, dim: usize) -> Self {
        match space {
            StateSpace::Interval => Self::interval_vector(
                dim,
                Arc::new(|_, _, out: &mut [f64]| out.fill(0.0)),
                Some(vec![0.0]),
            ),
            StateSpace::Discrete(s) => Self::state_values(s, dim, vec![vec![0.0; s * dim]], true)
                .expect("valid zero table"),
        }
    }

    /// Identity on an iid model's support values.
    pub fn iid_support(model: &crate::models::IidModel) -> Self {
        Self::state_scalar(model.support().to_vec()).expect("support is finite")
    }

    pub fn with_moment_bound(mut self, p: f64, bound: f64) -> Self {
        self.moment_bounds.push(MomentBound { p, bound });
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &ObservableKind {
        &self.kind
    }

    pub fn moment_bounds(&self) -> &[MomentBound] {
        &self.moment_bounds
    }

    /// Declared or computed `‖g_j‖_∞`.
    pub fn sup_norm(&self, j: usize) -> Option<f64> {
        let s = self.sup_norms.as_ref()?;
        match &self.kind {
            ObservableKind::States {
                periodic: false, ..
            } => s.get(j).copied(),
            _ => Some(s[j % s.len()]),
        }
    }

    pub fn space(&self) -> StateSpace {
        match &self.kind {
            ObservableKind::Interval(_) | ObservableKind::Harmonic { .. } => StateSpace::Interval,
            ObservableKind::States { states, .. } => StateSpace::Discrete(*states),
        }
    }

    /// Errors unless the observable reads the model's state space and covers
    /// indices `0..length`.
    pub fn check_model(&self, model: &ProcessModel, length: usize) -> Result<()> {
        if self.space() != model.state_space() {
            return Err(Error::InvalidInput(format!(
                "observable is defined on {:?}, model state space is {:?}",
                self.space(),
                model.state_space()
            )));
        }
        if let ObservableKind::States {
            tables,
            periodic: false,
            ..
        } = &self.kind
        {
            if length > tables.len() {
                return Err(Error::Index {
                    index: length - 1,
                    available: tables.len(),
                });
            }
        }
        Ok(())
    }

    #[inline]
    pub fn eval_interval(&self, j: usize, x: f64, out: &mut [f64]) {
        match &self.kind {
            ObservableKind::Interval(f) => f(j, x, out),
            ObservableKind::Harmonic { frequency, sine } => {
                let (c, s) = numeric::sincos_2pi(*frequency as f64 * x);
                out[0] = if *sine { s } else { c };
            }
            ObservableKind::States { .. } => {
                unreachable!("interval evaluation of a state observable")
            }
        }
    }

    /// Evaluation at the fixed-point state `x = bits / 2^64`.
    #[inline]
    pub fn eval_bits(&self, j: usize, bits: u64, out: &mut [f64]) {
        match &self.kind {
            ObservableKind::Harmonic { frequency, sine } => {
                out[0] = harmonic_bits(*frequency, *sine, bits);
            }
            _ => self.eval_interval(j, unit_from_bits(bits), out),
        }
    }

    /// Row of `g_j` at state `s`.
    #[inline]
    pub fn state_row(&self, j: usize, s: usize) -> &[f64] {
        match &self.kind {
            ObservableKind::States {
                tables, periodic, ..
            } => {
                let t = if *periodic {
                    &tables[j % tables.len()]
                } else {
                    &tables[j]
                };
                &t[s * self.dim..(s + 1) * self.dim]
            }
            _ => unreachable!("state evaluation of an interval observable"),
        }
    }
}

/// `m·x mod 1` is exact in fixed point, so the phase carries no rounding.
#[inline]
pub(crate) fn harmonic_bits(frequency: u32, sine: bool, bits: u64) -> f64 {
    let (c, s) = numeric::sincos_turns(bits.wrapping_mul(frequency as u64));
    if sine {
        s
    } else {
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_values_and_sup() {
        let g = ObservableSequence::cosine(1);
        let mut out = [0.0];
        g.eval_interval(7, 0.5, &mut out);
        assert!((out[0] + 1.0).abs() < 1e-15);
        ObservableSequence::cosine(3).eval_bits(0, 1 << 62, &mut out);
        assert!((out[0] - (1.5 * std::f64::consts::PI).cos()).abs() < 1e-15);
        assert_eq!(g.sup_norm(123), Some(1.0));
    }

    #[test]
    fn state_tables_compute_sup_norms() {
        let g =
            ObservableSequence::state_values(2, 1, vec![vec![-3.0, 1.0], vec![0.5, 0.25]], true)
                .unwrap();
        assert_eq!(g.sup_norm(0), Some(3.0));
        assert_eq!(g.sup_norm(3), Some(0.5));
        assert_eq!(g.state_row(2, 0), &[-3.0]);
        let bad = ObservableSequence::state_values(2, 1, vec![vec![1.0]], true);
        assert!(bad.is_err());
    }

    #[test]
    fn non_periodic_tables_bound_the_horizon() {
        let g = ObservableSequence::state_values(2, 1, vec![vec![1.0, 2.0]; 3], false).unwrap();
        let model = ProcessModel::Iid(crate::models::IidModel::rademacher());
        assert!(g.check_model(&model, 3).is_ok());
        assert!(g.check_model(&model, 4).is_err());
        assert_eq!(g.sup_norm(5), None);
    }
}
