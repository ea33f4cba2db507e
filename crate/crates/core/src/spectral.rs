//! Characteristic functions: empirical estimates with confidence radii,
//! exact values and moments for finite chains through Fourier transfer
//! matrices, and operator-norm envelopes of those products.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{
    DensityTilt, InhomogeneousMarkovChain, ObservableSequence, ProcessModel, TiltFunction,
};
use crate::sums::PartialSumSample;

/// Rows per chunk in fixed-order empirical reductions.
const REDUCTION_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CfKind {
    Empirical {
        count: usize,
    },
    ExactChain,
    /// Closed-form or user-supplied.
    Analytic,
}

type CfEval = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

/// `t ↦ E e^{i⟨t, X⟩}` on `ℝ^dim`.
#[derive(Clone)]
pub struct CharacteristicFunction {
    kind: CfKind,
    dim: usize,
    eval: CfEval,
}

impl fmt::Debug for CharacteristicFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CharacteristicFunction")
            .field("kind", &self.kind)
            .field("dim", &self.dim)
            .finish()
    }
}

impl CharacteristicFunction {
    pub fn analytic<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            kind: CfKind::Analytic,
            dim,
            eval: Arc::new(f),
        }
    }

    /// `e^{-t²/2}`.
    pub fn standard_normal() -> Self {
        Self::analytic(1, |t| Complex64::new((-0.5 * t[0] * t[0]).exp(), 0.0))
    }

    pub fn kind(&self) -> CfKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, t: &[f64]) -> Complex64 {
        (self.eval)(t)
    }

    pub fn at_scalar(&self, t: f64) -> Complex64 {
        (self.eval)(&[t])
    }

    /// Uniform radius `4/√N` for empirical estimates, 0 otherwise.
    pub fn confidence_radius(&self) -> f64 {
        match self.kind {
            CfKind::Empirical { count } => 4.0 / (count as f64).sqrt(),
            _ => 0.0,
        }
    }

    pub fn on_grid(&self, grid: &[Vec<f64>]) -> Vec<Complex64> {
        grid.iter().map(|t| self.at(t)).collect()
    }
}

/// `Σ_i e^{i⟨t, row_i⟩}` over rows of `values` (`dim` columns), summed in
/// fixed chunks so the result does not depend on the worker count.
pub(crate) fn phase_mean(values: &[f64], dim: usize, t: &[f64]) -> Complex64 {
    let rows = values.len() / dim;
    let partial: Vec<Complex64> = values
        .par_chunks(REDUCTION_CHUNK * dim)
        .map(|chunk| {
            chunk
                .chunks_exact(dim)
                .map(|row| {
                    let phase: f64 = row.iter().zip(t).map(|(s, t)| s * t).sum();
                    let (s, c) = phase.sin_cos();
                    Complex64::new(c, s)
                })
                .sum()
        })
        .collect();
    partial.into_iter().sum::<Complex64>() / rows as f64
}

/// `φ̂(t) = (1/N) Σ e^{i⟨t, S⟩}` with radius `4/√N`.
pub fn empirical_cf(sample: &PartialSumSample) -> Result<CharacteristicFunction> {
    if sample.count == 0 || sample.values.is_empty() {
        return Err(Error::InvalidInput(
            "empirical characteristic function of an empty sample".into(),
        ));
    }
    let values = Arc::new(sample.values.clone());
    let dim = sample.dim;
    Ok(CharacteristicFunction {
        kind: CfKind::Empirical {
            count: sample.count,
        },
        dim,
        eval: Arc::new(move |t| phase_mean(&values, dim, t)),
    })
}

fn tilt_vector(chain: &InhomogeneousMarkovChain, tilt: Option<&DensityTilt>) -> Result<Vec<f64>> {
    let s = chain.state_count();
    match tilt {
        None => Ok(vec![1.0; s]),
        Some(t) => match t.function() {
            TiltFunction::States(v) if v.len() == s => Ok(v.clone()),
            TiltFunction::States(v) => Err(Error::InvalidInput(format!(
                "tilt has {} states, chain has {s}",
                v.len()
            ))),
            TiltFunction::Interval { .. } => Err(Error::InvalidInput(
                "chain computations need a state density".into(),
            )),
        },
    }
}

fn check_chain_obs(
    chain: &InhomogeneousMarkovChain,
    obs: &ObservableSequence,
    n: usize,
) -> Result<()> {
    if n > 0 {
        chain.check_length(n)?;
    }
    obs.check_model(&ProcessModel::Chain(chain.clone()), n)
}

fn phases(obs: &ObservableSequence, j: usize, states: usize, t: &[f64]) -> Vec<Complex64> {
    (0..states)
        .map(|x| {
            let phase: f64 = obs.state_row(j, x).iter().zip(t).map(|(g, t)| g * t).sum();
            Complex64::from_polar(1.0, phase)
        })
        .collect()
}

/// `μ(r·e^{i⟨t, S_n⟩}) = (μ_0 ⊙ r)·D_0P_0 ⋯ D_{n-1}P_{n-1}·𝟙`, the phase at step
/// `j` using `g_j` at the source state.
pub fn exact_cf_chain(
    chain: &InhomogeneousMarkovChain,
    obs: &ObservableSequence,
    tilt: Option<&DensityTilt>,
    n: usize,
    t: &[f64],
) -> Result<Complex64> {
    if t.len() != obs.dim() {
        return Err(Error::InvalidInput(format!(
            "frequency has {} entries, observable dimension {}",
            t.len(),
            obs.dim()
        )));
    }
    check_chain_obs(chain, obs, n)?;
    let s = chain.state_count();
    let r = tilt_vector(chain, tilt)?;
    let mut v: Vec<Complex64> = chain
        .initial()
        .iter()
        .zip(&r)
        .map(|(m, r)| Complex64::new(m * r, 0.0))
        .collect();
    for j in 0..n {
        let d = phases(obs, j, s, t);
        v.iter_mut().zip(&d).for_each(|(v, d)| *v *= d);
        if j + 1 < n {
            let m = chain.matrix(j)?;
            let mut next = vec![Complex64::new(0.0, 0.0); s];
            for (x, vx) in v.iter().enumerate() {
                for (y, nv) in next.iter_mut().enumerate() {
                    *nv += vx * m[x * s + y];
                }
            }
            v = next;
        }
    }
    // The last transition is stochastic, so it leaves the total unchanged.
    Ok(v.iter().sum())
}

/// Exact characteristic function of `S_n` as a [`CharacteristicFunction`].
pub fn exact_cf(
    chain: &InhomogeneousMarkovChain,
    obs: &ObservableSequence,
    tilt: Option<&DensityTilt>,
    n: usize,
) -> Result<CharacteristicFunction> {
    check_chain_obs(chain, obs, n)?;
    tilt_vector(chain, tilt)?;
    let (chain, obs, tilt) = (chain.clone(), obs.clone(), tilt.cloned());
    Ok(CharacteristicFunction {
        kind: CfKind::ExactChain,
        dim: obs.dim(),
        eval: Arc::new(move |t| {
            exact_cf_chain(&chain, &obs, tilt.as_ref(), n, t).expect("checked at construction")
        }),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainMoments {
    /// `μ(r·S_n)`.
    pub mean: f64,
    /// `μ(r·S_n²)`; `None` when only the first order was requested.
    pub second: Option<f64>,
    pub variance: Option<f64>,
}

/// Mean and variance of a scalar `S_n` under `r dμ` by forward dynamic
/// programming over (mass, `E[S; X_j = x]`, `E[S²; X_j = x]`).
pub fn exact_moments_chain(
    chain: &InhomogeneousMarkovChain,
    obs: &ObservableSequence,
    tilt: Option<&DensityTilt>,
    n: usize,
    order: u32,
) -> Result<ChainMoments> {
    if order > 2 {
        return Err(Error::Unsupported(format!("moments of order {order}")));
    }
    if order == 0 {
        return Err(Error::InvalidInput("moment order must be 1 or 2".into()));
    }
    if obs.dim() != 1 {
        return Err(Error::InvalidInput(
            "exact moments need a scalar observable".into(),
        ));
    }
    check_chain_obs(chain, obs, n)?;
    let s = chain.state_count();
    let r = tilt_vector(chain, tilt)?;
    let mut mass: Vec<f64> = chain.initial().iter().zip(&r).map(|(m, r)| m * r).collect();
    let mut first = vec![0.0; s];
    let mut second = vec![0.0; s];
    for j in 0..n {
        for x in 0..s {
            let g = obs.state_row(j, x)[0];
            second[x] += 2.0 * g * first[x] + g * g * mass[x];
            first[x] += g * mass[x];
        }
        if j + 1 < n {
            mass = chain.push_forward(&mass, j)?;
            first = chain.push_forward(&first, j)?;
            second = chain.push_forward(&second, j)?;
        }
    }
    let total: f64 = mass.iter().sum();
    let mean = first.iter().sum::<f64>() / total;
    let m2 = second.iter().sum::<f64>() / total;
    Ok(ChainMoments {
        mean,
        second: (order == 2).then_some(m2),
        variance: (order == 2).then_some(m2 - mean * mean),
    })
}

type CMatrix = DMatrix<Complex64>;

/// Per-step factors `D_j(t)P_j` with a cache of prefix products keyed by
/// `(t, n)`.
pub struct FourierTransferOperator {
    chain: InhomogeneousMarkovChain,
    obs: ObservableSequence,
    cache: RwLock<HashMap<(Vec<u64>, usize), Arc<CMatrix>>>,
}

impl FourierTransferOperator {
    pub fn new(chain: &InhomogeneousMarkovChain, obs: &ObservableSequence) -> Result<Self> {
        obs.check_model(&ProcessModel::Chain(chain.clone()), 0)?;
        Ok(Self {
            chain: chain.clone(),
            obs: obs.clone(),
            cache: RwLock::new(HashMap::new()),
        })
    }

    /// `D_j(t)·P_j`: row `x` of `P_j` scaled by `e^{i⟨t, g_j(x)⟩}`.
    pub fn factor(&self, j: usize, t: &[f64]) -> Result<CMatrix> {
        let s = self.chain.state_count();
        let m = self.chain.matrix(j)?;
        let d = phases(&self.obs, j, s, t);
        Ok(CMatrix::from_fn(s, s, |x, y| d[x] * m[x * s + y]))
    }

    /// `D_0P_0 ⋯ D_{n-1}P_{n-1}`, multiplied left to right.
    pub fn product(&self, t: &[f64], n: usize) -> Result<Arc<CMatrix>> {
        let key = (t.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), n);
        if let Some(p) = self.cache.read().expect("cache lock").get(&key) {
            return Ok(p.clone());
        }
        // Start from the longest cached prefix for this t.
        let (mut start, mut acc) = {
            let cache = self.cache.read().expect("cache lock");
            (0..n)
                .rev()
                .find_map(|m| cache.get(&(key.0.clone(), m)).map(|p| (m, (**p).clone())))
                .unwrap_or((
                    0,
                    CMatrix::identity(self.chain.state_count(), self.chain.state_count()),
                ))
        };
        while start < n {
            acc = acc * self.factor(start, t)?;
            start += 1;
            // Entries stay bounded by 1 in row-sum norm; checked every 16 steps.
            if start % 16 == 0 && acc.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Numerical("transfer product overflowed".into()));
            }
        }
        let acc = Arc::new(acc);
        self.cache
            .write()
            .expect("cache lock")
            .insert(key, acc.clone());
        Ok(acc)
    }

    /// Norm of `s ↦ 𝓛^{(n)}_{it}s` from mean-zero `s ∈ L²(μ_0)` to `L²(μ_n)`.
    pub fn projected_norm(&self, t: &[f64], n: usize) -> Result<f64> {
        let p = self.product(t, n)?;
        let mu0 = self.chain.initial();
        let mun = self.chain.marginal(n)?;
        let s = mu0.len();
        let v: Vec<f64> = mu0.iter().map(|m| m.sqrt()).collect();
        // B[y, x] = √μ_0(x)·Π(x, y)/√μ_n(y), zero on unreachable y.
        let b = CMatrix::from_fn(s, s, |y, x| {
            if mun[y] > 0.0 {
                p[(x, y)] * (v[x] / mun[y].sqrt())
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let proj = CMatrix::from_fn(s, s, |a, c| {
            let id = if a == c { 1.0 } else { 0.0 };
            Complex64::new(id - v[a] * v[c], 0.0)
        });
        let sv = (b * proj).singular_values();
        Ok(sv.iter().fold(0.0, |m: f64, v| m.max(*v)))
    }

    /// Norm of `m ↦ m·𝓛^{(n)}_{it}` on real zero-mass measures in total
    /// variation: `max_{x,y} ‖Π(x,·) − Π(y,·)‖₁/2`. At `t = 0` this is the
    /// Dobrushin coefficient of the `n`-step kernel.
    pub fn total_variation_norm(&self, t: &[f64], n: usize) -> Result<f64> {
        let p = self.product(t, n)?;
        let s = p.nrows();
        let mut worst = 0.0f64;
        for x in 0..s {
            for y in x + 1..s {
                let d: f64 = (0..s).map(|z| (p[(x, z)] - p[(y, z)]).norm()).sum();
                worst = worst.max(0.5 * d);
            }
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeRow {
    pub t: f64,
    pub n: usize,
    /// Weighted `L²(μ_0) → L²(μ_n)` norm on mean-zero functions.
    pub norm: f64,
    /// Total-variation norm on real zero-mass measures.
    pub tv_norm: f64,
}

/// Projected operator norms for every `(t, n)`, ordered by `t` then `n`.
pub fn operator_norm_envelope(
    chain: &InhomogeneousMarkovChain,
    obs: &ObservableSequence,
    t_grid: &[f64],
    n_list: &[usize],
) -> Result<Vec<EnvelopeRow>> {
    if obs.dim() != 1 {
        return Err(Error::InvalidInput(
            "envelopes use a scalar frequency".into(),
        ));
    }
    let op = FourierTransferOperator::new(chain, obs)?;
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    let rows: Vec<Result<Vec<EnvelopeRow>>> = t_grid
        .par_iter()
        .map(|&t| {
            ns.iter()
                .map(|&n| {
                    Ok(EnvelopeRow {
                        t,
                        n,
                        norm: op.projected_norm(&[t], n)?,
                        tv_norm: op.total_variation_norm(&[t], n)?,
                    })
                })
                .collect()
        })
        .collect();
    Ok(rows
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect())
}
