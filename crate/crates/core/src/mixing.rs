//! Decay sequences `δ_n` for the correlation condition, and α-mixing
//! coefficients of finite inhomogeneous chains.
//!
//! For expanding maps the transfer operator of `x ↦ k·x mod 1` divides the
//! total variation of a density by `k`, and a zero-mean function of variation
//! `V` is bounded by `V`, which gives
//! `|∫ s·f∘T_0^n dμ − ∫s ∫f∘T_0^n dμ| ≤ Var(s)·sup|f|·∏_{j<n} 1/k_j`.
//!
//! For chains `δ_n` is synthesized from α-coefficients and the approximation
//! rates `γ_n` as `6·α_{⌊n/2⌋}^{1-1/p} + 2·γ_{⌊n/2⌋}` with the `L^p` norm.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{DensityTilt, InhomogeneousMarkovChain, NormClass, SequentialExpandingMap};

/// Largest number of atoms whose subsets are enumerated exactly.
pub const ENUMERATION_ATOM_CAP: usize = 14;
/// Analytic range of any α coefficient.
pub const ALPHA_MAX: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Provenance {
    Analytic,
    Synthesized,
    Measured,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ProfileForm {
    /// `δ_n = values[n]` for `n < values.len()`.
    ExactArray(Vec<f64>),
    /// `δ_n = scale · rate^n`.
    Geometric { scale: f64, rate: f64 },
    /// `δ_n = scale · (1 + n)^{-exponent}`.
    Polynomial { scale: f64, exponent: f64 },
}

/// Outcome of [`MixingProfile::certify_decay`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DecayCheck {
    /// Closed form with `rate < 1` or `exponent > 0`.
    Certified,
    /// Array whose second half is nonincreasing and ends below its first value.
    SpotChecked,
    NotDecaying,
}

/// The sequence `δ_n` paired with the norm class of the densities it controls.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixingProfile {
    pub form: ProfileForm,
    pub provenance: Provenance,
    pub norm_class: NormClass,
}

impl MixingProfile {
    pub fn exact_array(
        values: Vec<f64>,
        provenance: Provenance,
        norm_class: NormClass,
    ) -> Result<Self> {
        if let Some((n, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::InvalidProfile(format!(
                "δ_{n} = {v} is not a nonnegative number"
            )));
        }
        Ok(Self {
            form: ProfileForm::ExactArray(values),
            provenance,
            norm_class,
        })
    }

    pub fn geometric(scale: f64, rate: f64, norm_class: NormClass) -> Result<Self> {
        if !(scale >= 0.0 && rate >= 0.0 && scale.is_finite() && rate.is_finite()) {
            return Err(Error::InvalidProfile(format!("geometric({scale}, {rate})")));
        }
        Ok(Self {
            form: ProfileForm::Geometric { scale, rate },
            provenance: Provenance::Analytic,
            norm_class,
        })
    }

    pub fn polynomial(scale: f64, exponent: f64, norm_class: NormClass) -> Result<Self> {
        if !(scale >= 0.0 && scale.is_finite() && exponent.is_finite()) {
            return Err(Error::InvalidProfile(format!(
                "polynomial({scale}, {exponent})"
            )));
        }
        Ok(Self {
            form: ProfileForm::Polynomial { scale, exponent },
            provenance: Provenance::Analytic,
            norm_class,
        })
    }

    pub fn value(&self, n: usize) -> Result<f64> {
        match &self.form {
            ProfileForm::ExactArray(v) => v.get(n).copied().ok_or(Error::Index {
                index: n,
                available: v.len(),
            }),
            ProfileForm::Geometric { scale, rate } => Ok(scale * rate.powf(n as f64)),
            ProfileForm::Polynomial { scale, exponent } => {
                Ok(scale * (1.0 + n as f64).powf(-exponent))
            }
        }
    }

    /// `δ_0, …, δ_{n-1}`.
    pub fn values(&self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|j| self.value(j)).collect()
    }

    /// Number of available terms, `None` for closed forms.
    pub fn len(&self) -> Option<usize> {
        match &self.form {
            ProfileForm::ExactArray(v) => Some(v.len()),
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    pub fn certify_decay(&self) -> DecayCheck {
        match &self.form {
            ProfileForm::Geometric { scale, rate } => {
                if *rate < 1.0 || *scale == 0.0 {
                    DecayCheck::Certified
                } else {
                    DecayCheck::NotDecaying
                }
            }
            ProfileForm::Polynomial { scale, exponent } => {
                if *exponent > 0.0 || *scale == 0.0 {
                    DecayCheck::Certified
                } else {
                    DecayCheck::NotDecaying
                }
            }
            ProfileForm::ExactArray(v) => {
                if v.is_empty() {
                    return DecayCheck::NotDecaying;
                }
                let tail = &v[v.len() / 2..];
                let monotone = tail.windows(2).all(|w| w[1] <= w[0]);
                let last = *v.last().unwrap();
                if monotone && (last < v[0] || last == 0.0) {
                    DecayCheck::SpotChecked
                } else {
                    DecayCheck::NotDecaying
                }
            }
        }
    }

    /// The density norm to pair with this profile; rejects a class mismatch.
    pub fn paired_norm(&self, tilt: &DensityTilt) -> Result<f64> {
        if self.norm_class != tilt.norm_class() {
            return Err(Error::NormMismatch {
                profile: self.norm_class.to_string(),
                tilt: tilt.norm_class().to_string(),
            });
        }
        Ok(tilt.norm_value())
    }
}

/// `δ_n = ∏_{j<n} 1/k_j` for `n = 0..=n_max` with the total-variation norm.
pub fn delta_profile_expanding(
    map: &SequentialExpandingMap,
    n_max: usize,
) -> Result<MixingProfile> {
    let mut values = Vec::with_capacity(n_max + 1);
    let mut acc = 1.0;
    values.push(acc);
    for j in 0..n_max {
        acc /= map.slope(j)? as f64;
        values.push(acc);
    }
    MixingProfile::exact_array(values, Provenance::Analytic, NormClass::TotalVariation)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AlphaKind {
    /// Exact at a finite future depth (a lower bound for the infinite future).
    Exact { depth: usize },
    /// Certified lower bound from the fixed-point search.
    LowerBound { depth: usize },
    /// Upper bound from Dobrushin contraction.
    UpperBound,
}

/// `α_n` indexed from `n = 0` (where `α_0 = 1/4` by convention).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaProfile {
    pub values: Vec<f64>,
    pub kind: AlphaKind,
}

impl AlphaProfile {
    pub fn new(values: Vec<f64>, kind: AlphaKind) -> Result<Self> {
        if let Some((n, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= 0.0 && **v <= ALPHA_MAX))
        {
            return Err(Error::InvalidProfile(format!(
                "α_{n} = {v} outside [0, 1/4]"
            )));
        }
        Ok(Self { values, kind })
    }

    pub fn constant(value: f64, len: usize, kind: AlphaKind) -> Result<Self> {
        Self::new(vec![value; len], kind)
    }
}

/// Bounds `γ_n ≥ ‖r − E[r | X_0..X_n]‖_{L¹(μ)}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ApproximationProfile {
    /// Densities of `X_0` alone: `γ_n = 0`.
    Zero,
    Array(Vec<f64>),
}

impl ApproximationProfile {
    pub fn value(&self, n: usize) -> Result<f64> {
        match self {
            ApproximationProfile::Zero => Ok(0.0),
            ApproximationProfile::Array(v) => v.get(n).copied().ok_or(Error::Index {
                index: n,
                available: v.len(),
            }),
        }
    }

    fn len(&self) -> Option<usize> {
        match self {
            ApproximationProfile::Zero => None,
            ApproximationProfile::Array(v) => Some(v.len()),
        }
    }
}

/// `δ_n = 6·α_{⌊n/2⌋}^{1-1/p} + 2·γ_{⌊n/2⌋}` (with `1/∞ = 0`), paired with `L^p`.
pub fn delta_from_alpha(
    alpha: &AlphaProfile,
    gamma: &ApproximationProfile,
    p: f64,
) -> Result<MixingProfile> {
    if !(p >= 1.0) {
        return Err(Error::InvalidInput(format!(
            "exponent p = {p} must be >= 1"
        )));
    }
    if let ApproximationProfile::Array(v) = gamma {
        if let Some(g) = v.iter().find(|g| !(**g >= 0.0)) {
            return Err(Error::InvalidProfile(format!("γ value {g} is negative")));
        }
    }
    let power = 1.0 - if p.is_infinite() { 0.0 } else { 1.0 / p };
    let half_len = gamma
        .len()
        .map_or(alpha.values.len(), |g| g.min(alpha.values.len()));
    let values = (0..2 * half_len)
        .map(|n| {
            let h = n / 2;
            Ok(6.0 * alpha.values[h].powf(power) + 2.0 * gamma.value(h)?)
        })
        .collect::<Result<Vec<_>>>()?;
    MixingProfile::exact_array(values, Provenance::Synthesized, NormClass::Lp(p))
}

/// Dobrushin coefficient `½·max_{x,y} Σ_z |P(x,z) − P(y,z)|` of a row-major matrix.
pub fn dobrushin_coefficient(matrix: &[f64], states: usize) -> f64 {
    let mut worst = 0.0f64;
    for x in 0..states {
        for y in x + 1..states {
            let rx = &matrix[x * states..(x + 1) * states];
            let ry = &matrix[y * states..(y + 1) * states];
            let d: f64 = rx.iter().zip(ry).map(|(a, b)| (a - b).abs()).sum();
            worst = worst.max(0.5 * d);
        }
    }
    worst
}

/// Upper bound `¼·max_w ∏_{j=w}^{w+n-1} δ(P_j)` on `α_n`, the window start
/// ranging over one period (or every admissible start for finite horizons).
pub fn alpha_upper_dobrushin(chain: &InhomogeneousMarkovChain, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidInput("α_n is defined for n >= 1".into()));
    }
    let s = chain.state_count();
    let coeffs: Vec<f64> = chain
        .matrices()
        .iter()
        .map(|m| dobrushin_coefficient(m, s))
        .collect();
    let starts = match chain.horizon() {
        None => coeffs.len(),
        Some(h) if n <= h => h - n + 1,
        Some(h) => {
            return Err(Error::Index {
                index: n,
                available: h,
            })
        }
    };
    let period = coeffs.len();
    let best = (0..starts)
        .map(|w| (w..w + n).map(|j| coeffs[j % period]).product::<f64>())
        .fold(0.0, f64::max);
    Ok(ALPHA_MAX * best)
}

/// Dobrushin upper bounds `α_0 = 1/4, α_1, …, α_{n_max}`.
pub fn alpha_profile_dobrushin(
    chain: &InhomogeneousMarkovChain,
    n_max: usize,
) -> Result<AlphaProfile> {
    let mut values = vec![ALPHA_MAX];
    for n in 1..=n_max {
        values.push(alpha_upper_dobrushin(chain, n)?);
    }
    AlphaProfile::new(values, AlphaKind::UpperBound)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EnumeratedSide {
    /// Subsets of future cylinders were enumerated.
    Future,
    /// Subsets of the states of `X_k` were enumerated.
    Past,
    /// Neither side fits the cap; alternating best responses were iterated.
    FixedPoint,
}

/// Result of [`alpha_bruteforce`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaEstimate {
    pub value: f64,
    /// `false` when the fixed-point fallback produced a lower bound.
    pub exact: bool,
    pub side: EnumeratedSide,
    /// Bitmask of the optimal event on the enumerated side.
    pub witness: u64,
    /// Set when rounding pushed the value above 1/4 and it was clamped.
    pub clamped: bool,
    pub depth: usize,
}

/// Future-side tables: `q[x][b] = P(future cylinder b | X_k = x)`.
struct FutureTables {
    marginal: Vec<f64>,
    q: Vec<Vec<f64>>,
    atom_probs: Vec<f64>,
}

fn future_tables(
    chain: &InhomogeneousMarkovChain,
    k: usize,
    n: usize,
    depth: usize,
) -> Result<FutureTables> {
    let s = chain.state_count();
    let marginal = chain.marginal(k)?;
    // Gap transition Q = P_k ⋯ P_{k+n-1}, row by row.
    let mut gap = Vec::with_capacity(s);
    for x in 0..s {
        let mut row = vec![0.0; s];
        row[x] = 1.0;
        for j in k..k + n {
            row = chain.push_forward(&row, j)?;
        }
        gap.push(row);
    }
    let atoms = s
        .checked_pow(depth as u32 + 1)
        .ok_or(Error::EnumerationCap {
            required: usize::MAX,
            cap: ENUMERATION_ATOM_CAP,
        })?;
    let mut path_prob = vec![0.0; atoms];
    let mut first = vec![0usize; atoms];
    for (b, pp) in path_prob.iter_mut().enumerate() {
        // Most significant base-s digit is the earliest future state.
        let digits: Vec<usize> = (0..=depth)
            .map(|i| (b / s.pow((depth - i) as u32)) % s)
            .collect();
        first[b] = digits[0];
        let mut p = 1.0;
        for i in 0..depth {
            let m = chain.matrix(k + n + i)?;
            p *= m[digits[i] * s + digits[i + 1]];
        }
        *pp = p;
    }
    let q: Vec<Vec<f64>> = gap
        .iter()
        .map(|row| (0..atoms).map(|b| row[first[b]] * path_prob[b]).collect())
        .collect();
    let atom_probs = (0..atoms)
        .map(|b| (0..s).map(|x| marginal[x] * q[x][b]).sum())
        .collect();
    Ok(FutureTables {
        marginal,
        q,
        atom_probs,
    })
}

impl FutureTables {
    /// `sup_A P(A∩B) − P(A)P(B)` for the future event with mask `mask`.
    fn value_for_future(&self, mask: u64) -> f64 {
        let pb: f64 = self.selected(mask).map(|b| self.atom_probs[b]).sum();
        self.marginal
            .iter()
            .zip(&self.q)
            .map(|(m, row)| {
                let h: f64 = self.selected(mask).map(|b| row[b]).sum();
                (m * (h - pb)).max(0.0)
            })
            .sum()
    }

    /// `sup_B P(A∩B) − P(A)P(B)` for `A = {X_k ∈ mask}`.
    fn value_for_past(&self, mask: u64) -> f64 {
        let states: Vec<usize> = (0..self.marginal.len())
            .filter(|x| mask >> x & 1 == 1)
            .collect();
        let pa: f64 = states.iter().map(|&x| self.marginal[x]).sum();
        (0..self.atom_probs.len())
            .map(|b| {
                let joint: f64 = states
                    .iter()
                    .map(|&x| self.marginal[x] * self.q[x][b])
                    .sum();
                (joint - pa * self.atom_probs[b]).max(0.0)
            })
            .sum()
    }

    fn selected(&self, mask: u64) -> impl Iterator<Item = usize> + '_ {
        (0..self.atom_probs.len()).filter(move |b| mask >> b & 1 == 1)
    }
}

fn enumerate_max<F: Fn(u64) -> f64 + Sync>(width: usize, f: F) -> (f64, u64) {
    (0u64..(1u64 << width))
        .into_par_iter()
        .map(|mask| (f(mask), mask))
        .reduce(
            || (f64::NEG_INFINITY, u64::MAX),
            |a, b| {
                // Larger value wins; ties go to the smaller mask.
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        )
}

/// α between `σ(X_0, …, X_k)` and `σ(X_{k+n}, …, X_{k+n+depth})`.
///
/// For a fixed future event `B` the optimal past event is
/// `{X_k = x : P(B | X_k = x) > P(B)}`, so the past σ-algebra reduces to the
/// states of `X_k`. The supremum is exact when either side has at most
/// [`ENUMERATION_ATOM_CAP`] atoms, whose subsets are then enumerated;
/// otherwise `allow_fallback` runs alternating best responses from both sides
/// and reports a lower bound.
pub fn alpha_bruteforce(
    chain: &InhomogeneousMarkovChain,
    k: usize,
    n: usize,
    depth: usize,
    allow_fallback: bool,
) -> Result<AlphaEstimate> {
    if n == 0 {
        return Err(Error::InvalidInput("gap n must be at least 1".into()));
    }
    let s = chain.state_count();
    let future_atoms = s.checked_pow(depth as u32 + 1).unwrap_or(usize::MAX);
    if future_atoms > ENUMERATION_ATOM_CAP && s > ENUMERATION_ATOM_CAP && !allow_fallback {
        return Err(Error::EnumerationCap {
            required: future_atoms.min(s),
            cap: ENUMERATION_ATOM_CAP,
        });
    }
    if future_atoms > 1 << 20 {
        return Err(Error::EnumerationCap {
            required: future_atoms,
            cap: 1 << 20,
        });
    }
    let tables = future_tables(chain, k, n, depth)?;
    let (raw, witness, side) = if future_atoms <= s.min(ENUMERATION_ATOM_CAP)
        || s > ENUMERATION_ATOM_CAP && future_atoms <= ENUMERATION_ATOM_CAP
    {
        let (v, m) = enumerate_max(future_atoms, |mask| tables.value_for_future(mask));
        (v, m, EnumeratedSide::Future)
    } else if s <= ENUMERATION_ATOM_CAP {
        let (v, m) = enumerate_max(s, |mask| tables.value_for_past(mask));
        (v, m, EnumeratedSide::Past)
    } else {
        let (v, m) = fixed_point_search(&tables);
        (v, m, EnumeratedSide::FixedPoint)
    };
    let clamped = raw > ALPHA_MAX;
    Ok(AlphaEstimate {
        value: raw.clamp(0.0, ALPHA_MAX),
        exact: side != EnumeratedSide::FixedPoint,
        side,
        witness,
        clamped,
        depth,
    })
}

fn fixed_point_search(t: &FutureTables) -> (f64, u64) {
    let s = t.marginal.len();
    let best_past_for = |fmask: &[bool]| -> Vec<bool> {
        let pb: f64 = (0..fmask.len())
            .filter(|&b| fmask[b])
            .map(|b| t.atom_probs[b])
            .sum();
        (0..s)
            .map(|x| {
                (0..fmask.len())
                    .filter(|&b| fmask[b])
                    .map(|b| t.q[x][b])
                    .sum::<f64>()
                    > pb
            })
            .collect()
    };
    let best_future_for = |pmask: &[bool]| -> Vec<bool> {
        let pa: f64 = (0..s).filter(|&x| pmask[x]).map(|x| t.marginal[x]).sum();
        (0..t.atom_probs.len())
            .map(|b| {
                let joint: f64 = (0..s)
                    .filter(|&x| pmask[x])
                    .map(|x| t.marginal[x] * t.q[x][b])
                    .sum();
                joint > pa * t.atom_probs[b]
            })
            .collect()
    };
    let score = |pmask: &[bool], fmask: &[bool]| -> f64 {
        let pa: f64 = (0..s).filter(|&x| pmask[x]).map(|x| t.marginal[x]).sum();
        let pb: f64 = (0..fmask.len())
            .filter(|&b| fmask[b])
            .map(|b| t.atom_probs[b])
            .sum();
        let joint: f64 = (0..s)
            .filter(|&x| pmask[x])
            .map(|x| {
                t.marginal[x]
                    * (0..fmask.len())
                        .filter(|&b| fmask[b])
                        .map(|b| t.q[x][b])
                        .sum::<f64>()
            })
            .sum();
        (joint - pa * pb).abs()
    };
    let top = (0..s)
        .max_by(|&a, &b| t.marginal[a].total_cmp(&t.marginal[b]))
        .unwrap_or(0);
    let mut best = 0.0f64;
    // Start once from the past side ({X_k = top}) and once from the future side.
    let mut starts = vec![{
        let mut p = vec![false; s];
        p[top] = true;
        p
    }];
    let fut0: Vec<bool> = (0..t.atom_probs.len())
        .map(|b| t.q[top][b] > t.atom_probs[b])
        .collect();
    starts.push(best_past_for(&fut0));
    for mut past in starts {
        for _ in 0..100 {
            let fut = best_future_for(&past);
            let next = best_past_for(&fut);
            best = best.max(score(&past, &fut)).max(score(&next, &fut));
            if next == past {
                break;
            }
            past = next;
        }
    }
    (best, 0)
}

/// Continuous piecewise-linear function on `[0, 1]` given by its knots.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseLinear {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(Error::InvalidInput(
                "need at least two knots with values".into(),
            ));
        }
        if knots[0] != 0.0
            || *knots.last().unwrap() != 1.0
            || knots.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidInput(
                "knots must increase from 0 to 1".into(),
            ));
        }
        Ok(Self { knots, values })
    }

    pub fn integral(&self) -> f64 {
        self.segments()
            .map(|(a, b, va, vb)| 0.5 * (va + vb) * (b - a))
            .sum()
    }

    pub fn variation(&self) -> f64 {
        self.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self
            .knots
            .partition_point(|&k| k <= x)
            .clamp(1, self.knots.len() - 1);
        let (a, b) = (self.knots[i - 1], self.knots[i]);
        let (va, vb) = (self.values[i - 1], self.values[i]);
        va + (vb - va) * (x - a) / (b - a)
    }

    /// Rescales so that the integral is 1.
    pub fn normalized(mut self) -> Result<Self> {
        let i = self.integral();
        if i == 0.0 {
            return Err(Error::InvalidInput("integral is zero".into()));
        }
        self.values.iter_mut().for_each(|v| *v /= i);
        Ok(self)
    }

    fn segments(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        self.knots
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(k, v)| (k[0], k[1], v[0], v[1]))
    }

    /// `∫_0^1 s(x)·cos(ω x + φ) dx` in closed form.
    pub fn cosine_moment(&self, omega: f64, phase: f64) -> f64 {
        if omega == 0.0 {
            return phase.cos() * self.integral();
        }
        // Antiderivative of (α + βx)cos(ωx+φ): (α+βx) sin(ωx+φ)/ω + β cos(ωx+φ)/ω².
        self.segments()
            .map(|(a, b, va, vb)| {
                let slope = (vb - va) / (b - a);
                let prim = |x: f64, v: f64| {
                    v * (omega * x + phase).sin() / omega
                        + slope * (omega * x + phase).cos() / (omega * omega)
                };
                prim(b, vb) - prim(a, va)
            })
            .sum()
    }
}

/// `f(y) = mean + Σ_m a_m cos(2π m y + φ_m)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrigPolynomial {
    pub mean: f64,
    /// `(frequency m ≥ 1, amplitude a_m, phase φ_m)`.
    pub terms: Vec<(u32, f64, f64)>,
}

impl TrigPolynomial {
    pub fn eval(&self, y: f64) -> f64 {
        self.mean
            + self
                .terms
                .iter()
                .map(|&(m, a, ph)| a * (2.0 * PI * m as f64 * y + ph).cos())
                .sum::<f64>()
    }

    /// `|mean| + Σ|a_m|`, an upper bound on `sup|f|`.
    pub fn sup_bound(&self) -> f64 {
        self.mean.abs() + self.terms.iter().map(|t| t.1.abs()).sum::<f64>()
    }
}

/// Exact `∫ s·f∘T_0^n dμ − ∫ s dμ·∫ f dμ` for expanding maps, using
/// `T_0^n x = (∏_{j<n} k_j)·x mod 1`.
pub fn map_covariance_exact(
    map: &SequentialExpandingMap,
    s: &PiecewiseLinear,
    f: &TrigPolynomial,
    n: usize,
) -> Result<f64> {
    let mut product = 1.0f64;
    for j in 0..n {
        product *= map.slope(j)? as f64;
    }
    if product > 2f64.powi(52) {
        return Err(Error::Unsupported(format!(
            "composed slope {product} exceeds exact double range"
        )));
    }
    Ok(f.terms
        .iter()
        .map(|&(m, a, ph)| a * s.cosine_moment(2.0 * PI * m as f64 * product, ph))
        .sum())
}
