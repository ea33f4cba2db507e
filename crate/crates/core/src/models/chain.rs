use serde::Serialize;

use crate::error::{Error, Result};

const STOCHASTIC_TOL: f64 = 1e-12;

/// Finite-state Markov chain with time-dependent transition matrices.
///
/// Matrices are row-major `states × states`; `P_j` drives the step from
/// `X_j` to `X_{j+1}`. With `periodic` set the list repeats indefinitely.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InhomogeneousMarkovChain {
    states: usize,
    matrices: Vec<Vec<f64>>,
    periodic: bool,
    initial: Vec<f64>,
    #[serde(skip)]
    cumulative: Vec<Vec<f64>>,
}

fn check_probability_vector(v: &[f64], what: &str) -> Result<()> {
    if let Some((i, x)) = v
        .iter()
        .enumerate()
        .find(|(_, x)| !(x.is_finite() && **x >= 0.0))
    {
        return Err(Error::InvalidModel(format!(
            "{what}: entry {i} = {x} is not a probability"
        )));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::InvalidModel(format!(
            "{what}: sums to {s}, expected 1"
        )));
    }
    Ok(())
}

pub(crate) fn cumulative_row(row: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out: Vec<f64> = row
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    // Guard the last bucket against rounding so every uniform in [0,1) lands.
    if let Some(last) = out.last_mut() {
        *last = f64::INFINITY;
    }
    out
}

/// Index of the first cumulative bucket exceeding `u`, skipping zero-mass states.
#[inline]
pub(crate) fn categorical(cumulative: &[f64], u: f64) -> usize {
    cumulative
        .iter()
        .position(|&c| u < c)
        .unwrap_or(cumulative.len() - 1)
}

impl InhomogeneousMarkovChain {
    pub fn new(
        states: usize,
        matrices: Vec<Vec<f64>>,
        periodic: bool,
        initial: Vec<f64>,
    ) -> Result<Self> {
        if states == 0 {
            return Err(Error::InvalidModel("state count must be positive".into()));
        }
        if matrices.is_empty() {
            return Err(Error::InvalidModel("no transition matrices".into()));
        }
        if initial.len() != states {
            return Err(Error::InvalidModel(format!(
                "initial distribution has {} entries for {states} states",
                initial.len()
            )));
        }
        check_probability_vector(&initial, "initial distribution")?;
        for (j, m) in matrices.iter().enumerate() {
            if m.len() != states * states {
                return Err(Error::InvalidModel(format!(
                    "P_{j} has {} entries, expected {}",
                    m.len(),
                    states * states
                )));
            }
            for (x, row) in m.chunks(states).enumerate() {
                check_probability_vector(row, &format!("P_{j} row {x}"))?;
            }
        }
        let mut chain = Self {
            states,
            matrices,
            periodic,
            initial,
            cumulative: Vec::new(),
        };
        chain.rebuild_cumulative();
        Ok(chain)
    }

    /// Homogeneous chain with a single matrix.
    pub fn homogeneous(states: usize, matrix: Vec<f64>, initial: Vec<f64>) -> Result<Self> {
        Self::new(states, vec![matrix], true, initial)
    }

    fn rebuild_cumulative(&mut self) {
        self.cumulative = self
            .matrices
            .iter()
            .flat_map(|m| {
                m.chunks(self.states)
                    .map(cumulative_row)
                    .collect::<Vec<_>>()
            })
            .collect();
    }

    pub fn state_count(&self) -> usize {
        self.states
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn period(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrices(&self) -> &[Vec<f64>] {
        &self.matrices
    }

    pub fn horizon(&self) -> Option<usize> {
        (!self.periodic).then_some(self.matrices.len())
    }

    pub fn matrix(&self, j: usize) -> Result<&[f64]> {
        if self.periodic {
            Ok(&self.matrices[j % self.matrices.len()])
        } else {
            self.matrices.get(j).map(Vec::as_slice).ok_or(Error::Index {
                index: j,
                available: self.matrices.len(),
            })
        }
    }

    pub(crate) fn check_length(&self, length: usize) -> Result<()> {
        match self.horizon() {
            Some(h) if length > h + 1 => Err(Error::Index {
                index: length - 1,
                available: h,
            }),
            _ => Ok(()),
        }
    }

    #[inline]
    pub(crate) fn cumulative_row(&self, j: usize, from: usize) -> &[f64] {
        let m = if self.periodic {
            j % self.matrices.len()
        } else {
            j
        };
        &self.cumulative[m * self.states + from]
    }

    /// Left-multiplies a row vector by `P_j`.
    pub fn push_forward(&self, v: &[f64], j: usize) -> Result<Vec<f64>> {
        let m = self.matrix(j)?;
        let s = self.states;
        let mut out = vec![0.0; s];
        for (x, &w) in v.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (o, p) in out.iter_mut().zip(&m[x * s..(x + 1) * s]) {
                *o += w * p;
            }
        }
        Ok(out)
    }

    /// Marginal law `μ_j = μ_0 · P_0 ⋯ P_{j-1}`.
    pub fn marginal(&self, j: usize) -> Result<Vec<f64>> {
        let mut v = self.initial.clone();
        for step in 0..j {
            v = self.push_forward(&v, step)?;
        }
        Ok(v)
    }
}

/// Baseline of independent identically distributed draws from a finite support.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IidModel {
    weights: Vec<f64>,
    support: Vec<f64>,
}

impl IidModel {
    pub fn new(weights: Vec<f64>, support: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.len() != support.len() {
            return Err(Error::InvalidModel(format!(
                "iid model needs matching non-empty weights ({}) and support ({})",
                weights.len(),
                support.len()
            )));
        }
        check_probability_vector(&weights, "iid weights")?;
        Ok(Self { weights, support })
    }

    /// Fair coin on `{-1, +1}`.
    pub fn rademacher() -> Self {
        Self {
            weights: vec![0.5, 0.5],
            support: vec![-1.0, 1.0],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    /// The equivalent chain whose every row equals the weight vector.
    pub fn as_chain(&self) -> InhomogeneousMarkovChain {
        let s = self.weights.len();
        let matrix: Vec<f64> = (0..s).flat_map(|_| self.weights.iter().copied()).collect();
        InhomogeneousMarkovChain::homogeneous(s, matrix, self.weights.clone())
            .expect("weights were validated")
    }
}
