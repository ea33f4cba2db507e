//! Partial sums `S_n = Σ_{j<n} g_j(X_j)` under `μ` and `ν`, the centering and
//! variance certificates `𝓜_n` and `𝓥_n`, and plug-in gap estimates.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mixing::MixingProfile;
use crate::models::{
    harmonic_bits, unit_from_bits, InhomogeneousMarkovChain, Measure, MeasureTag, ObservableKind,
    ObservableSequence, ProcessModel, Sampler, TrajectoryBatch, TrajectoryStates, Visit,
};
use crate::numeric;

/// Variances below this multiple of the squared scale count as zero.
pub const DEGENERATE_VARIANCE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Centering {
    None,
    /// Subtracted the mean under the given measure.
    Mean(MeasureTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Normalizer {
    None,
    Explicit(f64),
    /// Divided by the sample's own standard deviation.
    SelfNormalized(f64),
}

/// `S_n` for each trajectory, `count × dim` row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartialSumSample {
    pub values: Vec<f64>,
    pub count: usize,
    pub dim: usize,
    pub n: usize,
    pub measure: MeasureTag,
    /// Master seed of the trajectories, when known.
    pub master_seed: Option<u64>,
    pub centering: Centering,
    pub normalizer: Normalizer,
}

impl PartialSumSample {
    pub fn from_values(
        values: Vec<f64>,
        dim: usize,
        n: usize,
        measure: MeasureTag,
    ) -> Result<Self> {
        if dim == 0 || values.is_empty() || !values.len().is_multiple_of(dim) {
            return Err(Error::InvalidInput(
                "sample must hold whole rows of length dim".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("sample values must be finite".into()));
        }
        Ok(Self {
            count: values.len() / dim,
            values,
            dim,
            n,
            measure,
            master_seed: None,
            centering: Centering::None,
            normalizer: Normalizer::None,
        })
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.values
            .iter()
            .skip(c)
            .step_by(self.dim)
            .copied()
            .collect()
    }

    pub fn mean(&self, c: usize) -> f64 {
        self.values.iter().skip(c).step_by(self.dim).sum::<f64>() / self.count as f64
    }

    /// Unbiased sample variance of column `c` (0 for a single row).
    pub fn variance(&self, c: usize) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let m = self.mean(c);
        let ss: f64 = self
            .values
            .iter()
            .skip(c)
            .step_by(self.dim)
            .map(|v| (v - m) * (v - m))
            .sum();
        ss / (self.count - 1) as f64
    }

    pub fn std_dev(&self, c: usize) -> f64 {
        self.variance(c).sqrt()
    }

    /// Whether column `c` has variance below `1e-14·(1 + mean²)`.
    pub fn is_degenerate(&self, c: usize) -> bool {
        let m = self.mean(c);
        self.variance(c) < DEGENERATE_VARIANCE * (1.0 + m * m)
    }
}

fn check_n_list(n_list: &[usize], length: usize) -> Result<()> {
    if let Some(&n) = n_list.iter().find(|&&n| n > length) {
        return Err(Error::Index {
            index: n,
            available: length,
        });
    }
    Ok(())
}

fn visit_value(obs: &ObservableSequence, j: usize, v: Visit, out: &mut [f64]) {
    match v {
        Visit::Point(bits) => obs.eval_bits(j, bits, out),
        Visit::State(s) => out.copy_from_slice(obs.state_row(j, s)),
    }
}

/// Slices prefix sums of a materialized batch at each `n` in `n_list`.
pub fn partial_sums(
    batch: &TrajectoryBatch,
    obs: &ObservableSequence,
    n_list: &[usize],
) -> Result<Vec<PartialSumSample>> {
    check_n_list(n_list, batch.length)?;
    let max_n = n_list.iter().copied().max().unwrap_or(0);
    obs.check_model(&batch.model, max_n)?;
    let d = obs.dim();
    let k = n_list.len();
    let mut table = vec![0.0; batch.count * k * d];
    table
        .par_chunks_mut(k * d)
        .enumerate()
        .for_each(|(i, row)| {
            let mut acc = vec![0.0; d];
            let mut g = vec![0.0; d];
            let mut prefix = vec![vec![0.0; d]; max_n + 1];
            for j in 0..max_n {
                let v = match &batch.states {
                    TrajectoryStates::Interval(s) => Visit::Point(s[i * batch.length + j]),
                    TrajectoryStates::Discrete(s) => Visit::State(s[i * batch.length + j] as usize),
                };
                visit_value(obs, j, v, &mut g);
                acc.iter_mut().zip(&g).for_each(|(a, x)| *a += x);
                prefix[j + 1].copy_from_slice(&acc);
            }
            for (c, &n) in n_list.iter().enumerate() {
                row[c * d..(c + 1) * d].copy_from_slice(&prefix[n]);
            }
        });
    Ok(n_list
        .iter()
        .enumerate()
        .map(|(c, &n)| PartialSumSample {
            values: (0..batch.count)
                .flat_map(|i| table[(i * k + c) * d..(i * k + c + 1) * d].iter().copied())
                .collect(),
            count: batch.count,
            dim: d,
            n,
            measure: batch.measure,
            master_seed: Some(batch.master_seed),
            centering: Centering::None,
            normalizer: Normalizer::None,
        })
        .collect())
}

/// Partial sums recorded at checkpoints while streaming trajectories, so that
/// long paths never need to be stored.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointedSums {
    pub checkpoints: Vec<usize>,
    pub dim: usize,
    pub count: usize,
    /// `count × checkpoints × dim`.
    values: Vec<f64>,
    /// `X_0` per trajectory (interval point or state index).
    pub initial: Vec<f64>,
    pub measure: MeasureTag,
    pub master_seed: u64,
}

impl CheckpointedSums {
    fn position(&self, n: usize) -> Result<usize> {
        self.checkpoints
            .binary_search(&n)
            .map_err(|_| Error::InvalidInput(format!("n = {n} is not a recorded checkpoint")))
    }

    pub fn sample_at(&self, n: usize) -> Result<PartialSumSample> {
        let c = self.position(n)?;
        let (k, d) = (self.checkpoints.len(), self.dim);
        let values = (0..self.count)
            .flat_map(|i| {
                self.values[(i * k + c) * d..(i * k + c + 1) * d]
                    .iter()
                    .copied()
            })
            .collect();
        Ok(PartialSumSample {
            values,
            count: self.count,
            dim: d,
            n,
            measure: self.measure,
            master_seed: Some(self.master_seed),
            centering: Centering::None,
            normalizer: Normalizer::None,
        })
    }

    /// `S_m` of trajectory `i` for a recorded `m`.
    pub fn value(&self, i: usize, m: usize) -> Result<&[f64]> {
        let c = self.position(m)?;
        let (k, d) = (self.checkpoints.len(), self.dim);
        Ok(&self.values[(i * k + c) * d..(i * k + c + 1) * d])
    }
}

/// Streams `count` trajectories of `max(checkpoints)` states and records
/// `S_m` at each checkpoint `m`. Trajectory `i` matches row `i` of
/// [`sample_trajectories`](crate::models::sample_trajectories) with the same
/// seed and measure.
pub fn sample_checkpointed_sums(
    model: &ProcessModel,
    obs: &ObservableSequence,
    measure: Measure<'_>,
    seed: u64,
    count: usize,
    checkpoints: &[usize],
) -> Result<CheckpointedSums> {
    if count == 0 || checkpoints.is_empty() {
        return Err(Error::InvalidInput(
            "count and checkpoints must be nonempty".into(),
        ));
    }
    let mut cps = checkpoints.to_vec();
    cps.sort_unstable();
    cps.dedup();
    let length = *cps.last().unwrap();
    model.check_length(length.max(1))?;
    obs.check_model(model, length)?;
    let sampler = Sampler::new(model, measure)?;
    let (d, k) = (obs.dim(), cps.len());
    let mut values = vec![0.0; count * k * d];
    let mut initial = vec![0.0; count];
    let harmonic = match obs.kind() {
        ObservableKind::Harmonic { frequency, sine } => Some((*frequency, *sine)),
        _ => None,
    };
    values
        .par_chunks_mut(k * d)
        .zip(initial.par_iter_mut())
        .enumerate()
        .try_for_each(|(i, (row, x0))| -> Result<()> {
            let mut acc = vec![0.0; d];
            let mut g = vec![0.0; d];
            let mut next = cps.iter().take_while(|&&c| c == 0).count();
            let mut next_cp = cps.get(next).copied().unwrap_or(usize::MAX);
            let mut scalar = 0.0;
            sampler.walk(seed, i as u64, length.max(1), |j, v| {
                if j == 0 {
                    *x0 = match v {
                        Visit::Point(bits) => unit_from_bits(bits),
                        Visit::State(s) => s as f64,
                    };
                }
                if j >= length {
                    return;
                }
                match (harmonic, v) {
                    (Some((m, sine)), Visit::Point(bits)) => scalar += harmonic_bits(m, sine, bits),
                    _ => {
                        visit_value(obs, j, v, &mut g);
                        acc.iter_mut().zip(&g).for_each(|(a, x)| *a += x);
                    }
                }
                if j + 1 == next_cp {
                    if harmonic.is_some() {
                        acc[0] = scalar;
                    }
                    row[next * d..(next + 1) * d].copy_from_slice(&acc);
                    next += 1;
                    next_cp = cps.get(next).copied().unwrap_or(usize::MAX);
                }
            })?;
            Ok(())
        })?;
    Ok(CheckpointedSums {
        checkpoints: cps,
        dim: d,
        count,
        values,
        initial,
        measure: measure.tag(),
        master_seed: seed,
    })
}

/// `(values − centering)/b`, column-wise.
pub fn center_and_normalize(
    sample: &PartialSumSample,
    centering_values: &[f64],
    centering: Centering,
    b: f64,
) -> Result<PartialSumSample> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::InvalidNormalizer(b));
    }
    if centering_values.len() != sample.dim || centering_values.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "need {} finite centering values, got {:?}",
            sample.dim, centering_values
        )));
    }
    let d = sample.dim;
    let values = sample
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| (v - centering_values[k % d]) / b)
        .collect();
    let normalizer = match sample.normalizer {
        Normalizer::SelfNormalized(_) => Normalizer::SelfNormalized(b),
        _ if b == 1.0 => sample.normalizer,
        _ => Normalizer::Explicit(b),
    };
    Ok(PartialSumSample {
        values,
        centering,
        normalizer,
        ..sample.clone()
    })
}

/// Centers by the sample's own column means and divides by the standard
/// deviation of column 0; errors on a degenerate variance.
pub fn self_normalize(sample: &PartialSumSample) -> Result<PartialSumSample> {
    if sample.is_degenerate(0) {
        return Err(Error::InvalidNormalizer(sample.std_dev(0)));
    }
    let means: Vec<f64> = (0..sample.dim).map(|c| sample.mean(c)).collect();
    let mut out = center_and_normalize(
        sample,
        &means,
        Centering::Mean(sample.measure),
        sample.std_dev(0),
    )?;
    out.normalizer = Normalizer::SelfNormalized(sample.std_dev(0));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GapQuantity {
    /// `𝓜_n`, bounding the centering gap.
    Centering,
    /// `𝓥_n`, bounding the variance gap.
    Variance,
}

/// Truncation level `M`; `Infinite` is the limit taken when `δ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Level {
    Finite(f64),
    Infinite,
}

pub enum Levels<'a> {
    Optimize,
    /// `M_{k,j}` (`M_j` is read as `M_{j,j}`).
    Given(&'a (dyn Fn(usize, usize) -> f64 + Sync)),
}

/// Norm prefactors multiplying the truncation and tail sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prefactors {
    /// `‖r‖` in the profile's norm class.
    pub truncation: f64,
    /// `‖r + 1‖_{p₁}` (or `_{s₁}`).
    pub tail: f64,
}

impl Prefactors {
    pub const UNIT: Prefactors = Prefactors {
        truncation: 1.0,
        tail: 1.0,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateTerm {
    pub k: usize,
    /// Range `j_first..=j_last` aggregated in this row.
    pub j_first: usize,
    pub j_last: usize,
    /// `None` when several pairs with different levels are aggregated.
    pub level: Option<Level>,
    pub truncation: f64,
    pub tail: f64,
}

/// Pair breakdowns beyond this many terms are aggregated per `k`.
pub const PAIR_DETAIL_LIMIT: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapCertificate {
    pub quantity: GapQuantity,
    pub exponents: [f64; 3],
    pub prefactors: Prefactors,
    pub n: usize,
    pub terms: Vec<CertificateTerm>,
    pub truncation_total: f64,
    pub tail_total: f64,
    pub total: f64,
    /// Number of terms whose optimal level is infinite.
    pub limiting_levels: usize,
    /// Comparison scale (`b_n` for `𝓜_n`, `b_{n,μ}²` for `𝓥_n`) and `total/scale`.
    pub scale: Option<f64>,
    pub relative: Option<f64>,
}

impl GapCertificate {
    pub fn compare_to(mut self, scale: f64) -> Self {
        self.scale = Some(scale);
        self.relative = Some(self.total / scale);
        self
    }
}

/// `β = p₂/p₃` after checking `Σ 1/p_i = 1` (with `1/∞ = 0`).
pub fn tail_exponent(exponents: [f64; 3]) -> Result<f64> {
    let inv = |p: f64| if p.is_infinite() { 0.0 } else { 1.0 / p };
    let sum: f64 = exponents.iter().map(|&p| inv(p)).sum();
    if exponents.iter().any(|&p| !(p >= 1.0)) || (sum - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidExponents { sum });
    }
    let [_, p2, p3] = exponents;
    Ok(if p2.is_infinite() {
        f64::INFINITY
    } else {
        p2 / p3
    })
}

/// Minimizes `a·M + c·m^{1+β}·M^{-β}` over `M > 0`; returns (level, truncation, tail).
fn optimize_term(a: f64, c: f64, m: f64, beta: f64) -> (Level, f64, f64) {
    if m == 0.0 || c == 0.0 {
        return (Level::Finite(0.0), 0.0, 0.0);
    }
    if beta.is_infinite() {
        // The tail vanishes for any level above ‖g‖_∞ = m.
        return (Level::Finite(m), a * m, 0.0);
    }
    if beta == 0.0 {
        return (Level::Finite(0.0), 0.0, c * m);
    }
    if a == 0.0 {
        return (Level::Infinite, 0.0, 0.0);
    }
    let ln_m = (c.ln() + (1.0 + beta) * m.ln() + beta.ln() - a.ln()) / (1.0 + beta);
    let level = ln_m.exp();
    // At the optimum the tail equals a·M/β.
    (Level::Finite(level), a * level, a * level / beta)
}

fn given_term(a: f64, c: f64, m: f64, beta: f64, level: f64) -> Result<(Level, f64, f64)> {
    if !(level >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "truncation level {level} is negative"
        )));
    }
    if level.is_infinite() {
        let tail = if beta == 0.0 { c * m } else { 0.0 };
        if a > 0.0 {
            return Err(Error::InvalidInput(
                "infinite level with a positive δ".into(),
            ));
        }
        return Ok((Level::Infinite, 0.0, tail));
    }
    let tail = if m == 0.0 {
        0.0
    } else if beta.is_infinite() {
        if level >= m {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        c * m * (m / level).powf(beta)
    };
    if !tail.is_finite() {
        return Err(Error::InvalidInput(format!(
            "level {level} makes the tail term infinite"
        )));
    }
    Ok((Level::Finite(level), a * level, tail))
}

fn check_delta(delta: &MixingProfile, n: usize) -> Result<Vec<f64>> {
    let d = delta.values(n)?;
    if let Some(v) = d.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::InvalidProfile(format!("δ value {v} is negative")));
    }
    Ok(d)
}

fn term(
    a: f64,
    c: f64,
    m: f64,
    beta: f64,
    levels: &Levels<'_>,
    k: usize,
    j: usize,
) -> Result<(Level, f64, f64)> {
    match levels {
        Levels::Optimize => Ok(optimize_term(a, c, m, beta)),
        Levels::Given(f) => given_term(a, c, m, beta, f(k, j)),
    }
}

/// `‖r‖·Σ_j M_jδ_j + ‖r+1‖_{p₁}·Σ_j ‖g_j‖_{p₂}^{1+β} M_j^{-β}`, `β = p₂/p₃`.
/// With unit prefactors the total is `𝓜_n`.
pub fn centering_gap_certificate(
    delta: &MixingProfile,
    moment_norms: &[f64],
    exponents: [f64; 3],
    prefactors: Prefactors,
    n: usize,
    levels: Levels<'_>,
) -> Result<GapCertificate> {
    let beta = tail_exponent(exponents)?;
    let d = check_delta(delta, n)?;
    if moment_norms.len() < n
        || moment_norms[..n]
            .iter()
            .any(|m| !(m.is_finite() && *m >= 0.0))
    {
        return Err(Error::InvalidInput(format!(
            "need {n} finite nonnegative moment norms"
        )));
    }
    let mut terms = Vec::with_capacity(n);
    for j in 0..n {
        let (level, t, tail) = term(
            prefactors.truncation * d[j],
            prefactors.tail,
            moment_norms[j],
            beta,
            &levels,
            j,
            j,
        )?;
        terms.push(CertificateTerm {
            k: j,
            j_first: j,
            j_last: j,
            level: Some(level),
            truncation: t,
            tail,
        });
    }
    Ok(finish(
        GapQuantity::Centering,
        exponents,
        prefactors,
        n,
        terms,
        None,
    ))
}

/// `‖r‖·Σ_{k≤j<n} δ_k M_{k,j} + ‖r+1‖_{s₁}·Σ_{k≤j<n} ‖G_jG_k‖_{s₂}^{1+β} M_{k,j}^{-β}`.
pub fn variance_gap_certificate(
    delta: &MixingProfile,
    pair_norms: &(dyn Fn(usize, usize) -> f64 + Sync),
    exponents: [f64; 3],
    prefactors: Prefactors,
    n: usize,
    levels: Levels<'_>,
) -> Result<GapCertificate> {
    let beta = tail_exponent(exponents)?;
    let d = check_delta(delta, n)?;
    let detailed = n * (n + 1) / 2 <= PAIR_DETAIL_LIMIT;
    let rows: Vec<Result<(Vec<CertificateTerm>, usize)>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut out = Vec::new();
            let (mut tr, mut tl, mut limiting) = (0.0, 0.0, 0usize);
            for j in k..n {
                let m = pair_norms(k, j);
                if !(m.is_finite() && m >= 0.0) {
                    return Err(Error::InvalidInput(format!("pair norm ({k}, {j}) = {m}")));
                }
                let (level, t, tail) = term(
                    prefactors.truncation * d[k],
                    prefactors.tail,
                    m,
                    beta,
                    &levels,
                    k,
                    j,
                )?;
                limiting += usize::from(level == Level::Infinite);
                if detailed {
                    out.push(CertificateTerm {
                        k,
                        j_first: j,
                        j_last: j,
                        level: Some(level),
                        truncation: t,
                        tail,
                    });
                } else {
                    tr += t;
                    tl += tail;
                }
            }
            if !detailed {
                out.push(CertificateTerm {
                    k,
                    j_first: k,
                    j_last: n - 1,
                    level: None,
                    truncation: tr,
                    tail: tl,
                });
            }
            Ok((out, limiting))
        })
        .collect();
    let mut terms = Vec::new();
    let mut limiting = 0;
    for r in rows {
        let (t, l) = r?;
        terms.extend(t);
        limiting += l;
    }
    Ok(finish(
        GapQuantity::Variance,
        exponents,
        prefactors,
        n,
        terms,
        Some(limiting),
    ))
}

fn finish(
    quantity: GapQuantity,
    exponents: [f64; 3],
    prefactors: Prefactors,
    n: usize,
    terms: Vec<CertificateTerm>,
    limiting: Option<usize>,
) -> GapCertificate {
    let truncation_total: f64 = terms.iter().map(|t| t.truncation).sum();
    let tail_total: f64 = terms.iter().map(|t| t.tail).sum();
    let limiting_levels = limiting.unwrap_or_else(|| {
        terms
            .iter()
            .filter(|t| t.level == Some(Level::Infinite))
            .count()
    });
    GapCertificate {
        quantity,
        exponents,
        prefactors,
        n,
        terms,
        truncation_total,
        tail_total,
        total: truncation_total + tail_total,
        limiting_levels,
        scale: None,
        relative: None,
    }
}

/// `‖g_j(X_j)‖_p` under `μ` for `j < n`, exact sums against `μ_j`
/// (Euclidean norm for vector observables).
pub fn chain_moment_norms(
    chain: &InhomogeneousMarkovChain,
    obs: &ObservableSequence,
    n: usize,
    p: f64,
) -> Result<Vec<f64>> {
    obs.check_model(&ProcessModel::Chain(chain.clone()), n)?;
    let mut law = chain.initial().to_vec();
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let vals: Vec<f64> = (0..law.len())
            .map(|s| euclid(obs.state_row(j, s)))
            .collect();
        out.push(crate::models::lp_norm(&vals, &law, p));
        if j + 1 < n {
            law = chain.push_forward(&law, j)?;
        }
    }
    Ok(out)
}

/// `‖g_j(X_j)‖_p` under `μ` for interval maps. Every `X_j` is uniform, so
/// the norm is a quadrature over `[0, 1]`.
pub fn map_moment_norms(obs: &ObservableSequence, n: usize, p: f64) -> Result<Vec<f64>> {
    if obs.space() != crate::models::StateSpace::Interval {
        return Err(Error::InvalidInput(
            "map moments need an interval observable".into(),
        ));
    }
    let d = obs.dim();
    let panels: Vec<f64> = (0..=256).map(|i| i as f64 / 256.0).collect();
    (0..n)
        .map(|j| {
            let norm_at = |x: f64| {
                let mut g = vec![0.0; d];
                obs.eval_interval(j, x, &mut g);
                euclid(&g)
            };
            if p.is_infinite() {
                if let Some(s) = obs.sup_norm(j) {
                    return Ok(s);
                }
                return Ok((0..=1 << 16)
                    .map(|i| norm_at(i as f64 / 65536.0))
                    .fold(0.0, f64::max));
            }
            let q = numeric::integrate_panels(|x| norm_at(x).powf(p), &panels, 1e-12);
            Ok(q.value.powf(1.0 / p))
        })
        .collect()
}

/// `‖G_jG_k‖_s` under `μ` for a scalar chain observable, with
/// `G_j = g_j(X_j) − E_μ g_j(X_j)`, `k ≤ j`.
pub fn chain_pair_norm(
    chain: &InhomogeneousMarkovChain,
    obs: &ObservableSequence,
    k: usize,
    j: usize,
    s: f64,
) -> Result<f64> {
    if k > j || obs.dim() != 1 {
        return Err(Error::InvalidInput(
            "need k ≤ j and a scalar observable".into(),
        ));
    }
    let law_k = chain.marginal(k)?;
    let states = law_k.len();
    let g = |t: usize, x: usize| obs.state_row(t, x)[0];
    let mean = |t: usize, law: &[f64]| (0..states).map(|x| law[x] * g(t, x)).sum::<f64>();
    let law_j = chain.marginal(j)?;
    let (mk, mj) = (mean(k, &law_k), mean(j, &law_j));
    let mut values = Vec::with_capacity(states * states);
    let mut weights = Vec::with_capacity(states * states);
    for x in 0..states {
        let mut row = vec![0.0; states];
        row[x] = 1.0;
        for t in k..j {
            row = chain.push_forward(&row, t)?;
        }
        for y in 0..states {
            weights.push(law_k[x] * row[y]);
            values.push((g(k, x) - mk) * (g(j, y) - mj));
        }
    }
    Ok(crate::models::lp_norm(&values, &weights, s))
}

fn euclid(v: &[f64]) -> f64 {
    if v.len() == 1 {
        v[0].abs()
    } else {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Per-column comparison of a `μ` and a `ν` sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnGap {
    /// `Ê S_ν − Ê S_μ`.
    pub signed_gap: f64,
    pub mean_gap: f64,
    pub mean_gap_se: f64,
    /// `b̂_ν / b̂_μ`; `None` when either variance is degenerate.
    pub std_ratio: Option<f64>,
    pub std_ratio_se: Option<f64>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalGap {
    pub n: usize,
    /// Rows were paired by trajectory index (shared seed and count).
    pub paired: bool,
    pub columns: Vec<ColumnGap>,
}

/// Leave-one-out means and standard deviations of one column.
fn leave_one_out(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let q: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    let means = x.iter().map(|v| mean - (v - mean) / (n - 1.0)).collect();
    let sds = x
        .iter()
        .map(|v| {
            let y = v - mean;
            ((q - y * y * n / (n - 1.0)).max(0.0) / (n - 2.0)).sqrt()
        })
        .collect();
    (means, sds)
}

fn jackknife_se(stats: &[f64]) -> f64 {
    let n = stats.len() as f64;
    let m = stats.iter().sum::<f64>() / n;
    ((n - 1.0) / n * stats.iter().map(|s| (s - m) * (s - m)).sum::<f64>()).sqrt()
}

/// Plug-in mean gap and standard-deviation ratio with jackknife errors.
/// Samples sharing a seed and count are paired row by row.
pub fn empirical_gap(mu: &PartialSumSample, nu: &PartialSumSample) -> Result<EmpiricalGap> {
    if mu.n != nu.n || mu.dim != nu.dim {
        return Err(Error::InvalidPairing(format!(
            "μ sample has n = {}, d = {}; ν sample has n = {}, d = {}",
            mu.n, mu.dim, nu.n, nu.dim
        )));
    }
    if mu.count < 3 || nu.count < 3 {
        return Err(Error::InvalidInput(
            "jackknife needs at least 3 rows per sample".into(),
        ));
    }
    let paired =
        mu.master_seed.is_some() && mu.master_seed == nu.master_seed && mu.count == nu.count;
    let columns = (0..mu.dim)
        .map(|c| {
            let (a, b) = (mu.column(c), nu.column(c));
            let (ma, mb) = (mu.mean(c), nu.mean(c));
            let degenerate = mu.is_degenerate(c) || nu.is_degenerate(c);
            let (sa, sb) = (mu.std_dev(c), nu.std_dev(c));
            let ratio = (!degenerate).then(|| sb / sa);
            let (la_m, la_s) = leave_one_out(&a);
            let (lb_m, lb_s) = leave_one_out(&b);
            let (gap_se, ratio_se) = if paired {
                let gaps: Vec<f64> = la_m.iter().zip(&lb_m).map(|(x, y)| y - x).collect();
                let ratios: Vec<f64> = la_s.iter().zip(&lb_s).map(|(x, y)| y / x).collect();
                (
                    jackknife_se(&gaps),
                    (!degenerate).then(|| jackknife_se(&ratios)),
                )
            } else {
                let (ea, eb) = (jackknife_se(&la_m), jackknife_se(&lb_m));
                let (da, db) = (jackknife_se(&la_s), jackknife_se(&lb_s));
                (
                    (ea * ea + eb * eb).sqrt(),
                    ratio.map(|r| r * ((da / sa).powi(2) + (db / sb).powi(2)).sqrt()),
                )
            };
            ColumnGap {
                signed_gap: mb - ma,
                mean_gap: (mb - ma).abs(),
                mean_gap_se: gap_se,
                std_ratio: ratio,
                std_ratio_se: ratio_se,
                degenerate,
            }
        })
        .collect();
    Ok(EmpiricalGap {
        n: mu.n,
        paired,
        columns,
    })
}

/// Mean and standard error of `|S|·w(X_0)` over a sample, e.g.
/// `I(ρ) = ∫|S_ρ|(2 + r) dμ` with `w = 2 + r`.
pub fn weighted_abs_mean(
    sample: &PartialSumSample,
    initial: &[f64],
    weight: impl Fn(f64) -> f64,
) -> Result<(f64, f64)> {
    if initial.len() != sample.count || sample.dim != 1 {
        return Err(Error::InvalidInput(
            "need a scalar sample and one X_0 per row".into(),
        ));
    }
    let v: Vec<f64> = sample
        .values
        .iter()
        .zip(initial)
        .map(|(s, x)| s.abs() * weight(*x))
        .collect();
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok((m, (var / n).sqrt()))
}
