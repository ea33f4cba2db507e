//! One pipeline per experiment kind. Each returns its CSV rows and a JSON
//! report; the runner owns file output.

use std::f64::consts::PI;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use tilt_core::esseen::{
    esseen_constant, kolmogorov_to_cdf, kolmogorov_two_sample, mixing_inputs, quant_eagleson_bound,
    select_T, QuantBoundInputs, ReferenceLaw,
};
use tilt_core::mixing::{
    alpha_bruteforce, alpha_profile_dobrushin, alpha_upper_dobrushin, delta_from_alpha,
    delta_profile_expanding, map_covariance_exact, ApproximationProfile, MixingProfile,
    PiecewiseLinear, TrigPolynomial,
};
use tilt_core::models::{
    DensityTilt, Measure, MeasureTag, NormClass, ObservableKind, ObservableSequence, ProcessModel,
};
use tilt_core::spectral::exact_moments_chain;
use tilt_core::sums::{
    center_and_normalize, centering_gap_certificate, empirical_gap, sample_checkpointed_sums,
    variance_gap_certificate, weighted_abs_mean, Centering, CheckpointedSums, Levels,
    PartialSumSample, Prefactors,
};
use tilt_core::wip::{
    fdd_distance, nu_tightness_transfer, path_from_checkpoints, tightness_diagnostic, uniform_grid,
    FddVector,
};

use crate::config::{ExperimentConfig, Kind, NormalizerRule, Selection};

/// Errors raised while running a resolved config.
#[derive(Debug)]
pub enum RunError {
    /// The run would exceed the configured memory budget.
    Resource(String),
    Core(tilt_core::Error),
    Io(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Resource(m) => write!(f, "resource limit: {m}"),
            RunError::Core(e) => write!(f, "{e}"),
            RunError::Io(m) => write!(f, "output: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<tilt_core::Error> for RunError {
    fn from(e: tilt_core::Error) -> Self {
        RunError::Core(e)
    }
}

type Result<T> = std::result::Result<T, RunError>;

/// A CSV table: header and string-rendered rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn from_rows<T: Serialize>(name: &str, header: &[&str], rows: &[T]) -> Result<Self> {
        let rows = rows
            .iter()
            .map(|r| {
                let v = serde_json::to_value(r).map_err(|e| RunError::Io(e.to_string()))?;
                Ok(header.iter().map(|h| render(&v[*h])).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Table {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows,
        })
    }
}

fn render(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Everything a pipeline produces.
pub struct Outcome {
    pub tables: Vec<Table>,
    /// Kind-specific report fields, written to the JSON lines file.
    pub report: Value,
    /// Some embedded dominance check failed.
    pub check_failed: bool,
    pub sampling_seconds: f64,
}

/// Column schemas per experiment kind.
pub fn schema(kind: Kind) -> &'static [&'static str] {
    match kind {
        Kind::EaglesonConvergence => &[
            "n",
            "b_n",
            "dk_two_sample",
            "dk_mu_normal",
            "dk_nu_normal",
            "mean_mu",
            "mean_nu",
        ],
        Kind::QuantBound => &[
            "n",
            "b_n",
            "rho",
            "t",
            "dk_mu",
            "dk_nu",
            "main",
            "translation",
            "mixing",
            "smoothing",
            "total",
            "uncertainty",
            "dominated",
        ],
        Kind::Centering => &[
            "n",
            "mean_gap",
            "mean_gap_se",
            "exact_gap",
            "certificate",
            "dominated",
        ],
        Kind::Variance => &[
            "n",
            "std_ratio",
            "std_ratio_se",
            "exact_ratio",
            "measured",
            "certificate_relative",
            "dominated",
        ],
        Kind::Wip => &[
            "n",
            "b_n",
            "fdd_distance",
            "fdd_radius",
            "exceedance_mu",
            "exceedance_mu_se",
            "exceedance_nu",
            "exceedance_nu_se",
            "transfer_c",
            "transfer_eta",
            "transfer_bound",
            "dominated",
        ],
        Kind::MixingAudit => &[
            "n",
            "alpha_exact",
            "alpha_upper",
            "delta",
            "covariance",
            "bound",
            "dominated",
        ],
        Kind::Constant => &["c", "residual"],
    }
}

/// Bytes held by the checkpointed sums of both measures.
pub fn memory_estimate(samples: usize, checkpoints: usize) -> f64 {
    2.0 * samples as f64 * (checkpoints as f64 + 1.0) * 8.0
}

fn log(kind: Kind, message: String) {
    eprintln!("[{kind}] {message}");
}

struct Sampled {
    mu: CheckpointedSums,
    nu: CheckpointedSums,
    seconds: f64,
}

fn sample_both(cfg: &ExperimentConfig, checkpoints: &[usize]) -> Result<Sampled> {
    let mut cps = checkpoints.to_vec();
    cps.sort_unstable();
    cps.dedup();
    let bytes = memory_estimate(cfg.samples, cps.len());
    let limit = cfg.memory_limit_mb * 1024.0 * 1024.0;
    if bytes > limit {
        return Err(RunError::Resource(format!(
            "{} samples × {} checkpoints need about {:.0} MiB, limit is {:.0} MiB",
            cfg.samples,
            cps.len(),
            bytes / 1048576.0,
            cfg.memory_limit_mb
        )));
    }
    let (model, obs, tilt) = parts(cfg);
    let start = Instant::now();
    let mu = sample_checkpointed_sums(model, obs, Measure::Base, cfg.seed, cfg.samples, &cps)?;
    let nu = sample_checkpointed_sums(
        model,
        obs,
        Measure::Tilted(tilt),
        cfg.seed,
        cfg.samples,
        &cps,
    )?;
    Ok(Sampled {
        mu,
        nu,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn parts(cfg: &ExperimentConfig) -> (&ProcessModel, &ObservableSequence, &DensityTilt) {
    (
        cfg.model.as_ref().expect("resolved model"),
        cfg.observable.as_ref().expect("resolved observable"),
        cfg.tilt.as_ref().expect("resolved tilt"),
    )
}

fn normalizer(cfg: &ExperimentConfig, k: usize, mu: &PartialSumSample) -> Result<f64> {
    let n = cfg.n_list[k];
    let b = match &cfg.normalizer {
        NormalizerRule::SqrtN => (n as f64).sqrt(),
        NormalizerRule::SelfNormalized => mu.std_dev(0),
        NormalizerRule::Explicit(v) => v[k],
    };
    if !(b > 0.0 && b.is_finite()) {
        return Err(tilt_core::Error::InvalidNormalizer(b).into());
    }
    Ok(b)
}

/// Both samples shifted by the `μ` sample mean and divided by `b`.
fn centered_pair(
    mu: &PartialSumSample,
    nu: &PartialSumSample,
    b: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = [mu.mean(0)];
    let a = center_and_normalize(mu, &m, Centering::Mean(MeasureTag::Base), b)?;
    let c = center_and_normalize(nu, &m, Centering::Mean(MeasureTag::Base), b)?;
    Ok((a.values, c.values))
}

fn require_scalar(obs: &ObservableSequence) -> Result<()> {
    if obs.dim() != 1 {
        return Err(
            tilt_core::Error::Unsupported("experiments use scalar observables".into()).into(),
        );
    }
    Ok(())
}

/// `δ` profile of length at least `len + 1`, paired with the tilt's norm:
/// the exact expanding-map profile, or `6·α^{1−1/p}` from Dobrushin bounds on chains.
fn delta_profile(model: &ProcessModel, tilt: &DensityTilt, len: usize) -> Result<MixingProfile> {
    match model {
        ProcessModel::Map(map) => Ok(delta_profile_expanding(map, len)?),
        _ => {
            let chain = model.as_chain().expect("finite-state model");
            let p = match tilt.norm_class() {
                NormClass::Lp(p) => p,
                NormClass::TotalVariation => 1.0,
            };
            let alpha = alpha_profile_dobrushin(&chain, len / 2 + 1)?;
            Ok(delta_from_alpha(&alpha, &ApproximationProfile::Zero, p)?)
        }
    }
}

fn tilt_weight<'a>(tilt: &'a DensityTilt, model: &ProcessModel) -> impl Fn(f64) -> f64 + 'a {
    let interval = matches!(model, ProcessModel::Map(_));
    move |x| {
        let r = if interval {
            tilt.at_point(x)
        } else {
            tilt.at_state(x as usize)
        };
        2.0 + r.expect("initial point lies in the state space")
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    match cfg.kind {
        Kind::EaglesonConvergence => eagleson(cfg),
        Kind::QuantBound => quant_bound(cfg),
        Kind::Centering => centering(cfg),
        Kind::Variance => variance(cfg),
        Kind::Wip => wip(cfg),
        Kind::MixingAudit => mixing_audit(cfg),
        Kind::Constant => run_constant(),
    }
}

#[derive(Serialize)]
struct EaglesonRow {
    n: usize,
    b_n: f64,
    dk_two_sample: f64,
    dk_mu_normal: f64,
    dk_nu_normal: f64,
    mean_mu: f64,
    mean_nu: f64,
}

fn eagleson(cfg: &ExperimentConfig) -> Result<Outcome> {
    require_scalar(parts(cfg).1)?;
    let s = sample_both(cfg, &cfg.n_list)?;
    let law = ReferenceLaw::standard_normal();
    let mut rows = Vec::new();
    for (k, &n) in cfg.n_list.iter().enumerate() {
        let (mu, nu) = (s.mu.sample_at(n)?, s.nu.sample_at(n)?);
        let b = normalizer(cfg, k, &mu)?;
        let (a, c) = centered_pair(&mu, &nu, b)?;
        let row = EaglesonRow {
            n,
            b_n: b,
            dk_two_sample: kolmogorov_two_sample(&a, &c)?,
            dk_mu_normal: kolmogorov_to_cdf(&a, &law)?,
            dk_nu_normal: kolmogorov_to_cdf(&c, &law)?,
            mean_mu: mu.mean(0),
            mean_nu: nu.mean(0),
        };
        log(
            cfg.kind,
            format!("n = {n}: two-sample d_K = {:.5}", row.dk_two_sample),
        );
        rows.push(row);
    }
    Ok(Outcome {
        tables: vec![Table::from_rows(cfg.kind.name(), schema(cfg.kind), &rows)?],
        report: json!({ "rows": rows }),
        check_failed: false,
        sampling_seconds: s.seconds,
    })
}

#[derive(Serialize)]
struct QuantRow {
    n: usize,
    b_n: f64,
    rho: usize,
    t: f64,
    dk_mu: f64,
    dk_nu: f64,
    main: f64,
    translation: f64,
    mixing: f64,
    smoothing: f64,
    total: f64,
    uncertainty: f64,
    dominated: bool,
}

/// `ρ = 2⌈log₂ n⌉`, kept below `n`.
pub fn auto_rho(n: usize) -> usize {
    (2 * (n as f64).log2().ceil() as usize).clamp(1, n.saturating_sub(1).max(1))
}

fn quant_bound(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (model, obs, tilt) = parts(cfg);
    require_scalar(obs)?;
    let rhos: Vec<usize> = cfg
        .n_list
        .iter()
        .map(|&n| match cfg.bound.rho {
            Selection::Auto => auto_rho(n),
            Selection::Explicit(r) => r as usize,
        })
        .collect();
    let mut cps = cfg.n_list.clone();
    cps.extend(&rhos);
    let s = sample_both(cfg, &cps)?;
    let law = ReferenceLaw::standard_normal();
    let c = esseen_constant()?;
    let ks_se = 0.5 / (cfg.samples as f64).sqrt();
    let profile = delta_profile(model, tilt, rhos.iter().copied().max().unwrap_or(1))?;
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for (k, (&n, &rho)) in cfg.n_list.iter().zip(&rhos).enumerate() {
        let (mu, nu) = (s.mu.sample_at(n)?, s.nu.sample_at(n)?);
        let b = normalizer(cfg, k, &mu)?;
        let (a, v) = centered_pair(&mu, &nu, b)?;
        let dk_mu = kolmogorov_to_cdf(&a, &law)?;
        let dk_nu = kolmogorov_to_cdf(&v, &law)?;
        let (delta_rho, norm_r) = mixing_inputs(&profile, tilt, rho)?;
        let short = s.mu.sample_at(rho)?;
        let short = center_and_normalize(
            &short,
            &[short.mean(0)],
            Centering::Mean(MeasureTag::Base),
            1.0,
        )?;
        let (i_rho, i_rho_se) = weighted_abs_mean(&short, &s.mu.initial, tilt_weight(tilt, model))?;
        let t = match cfg.bound.t {
            Selection::Explicit(t) => t,
            Selection::Auto => {
                select_T(
                    2.0 * i_rho / b,
                    2.0 * law.density_sup * c.c * c.c,
                    cfg.bound.t_max,
                )?
                .t
            }
        };
        let report = quant_eagleson_bound(
            QuantBoundInputs {
                n,
                dk_mu,
                dk_mu_se: ks_se,
                rho,
                i_rho,
                i_rho_se,
                delta_rho,
                norm_r,
                b_n: b,
                t,
            },
            &law,
            &c,
        )?;
        let combined = report.uncertainty.hypot(ks_se);
        let dominated = dk_nu <= report.total + 3.0 * combined;
        log(
            cfg.kind,
            format!(
                "n = {n}: d_K(ν) = {dk_nu:.5}, bound {:.4}, dominated {dominated}",
                report.total
            ),
        );
        rows.push(QuantRow {
            n,
            b_n: b,
            rho,
            t,
            dk_mu,
            dk_nu,
            main: report.terms.main,
            translation: report.terms.translation,
            mixing: report.terms.mixing,
            smoothing: report.terms.smoothing,
            total: report.total,
            uncertainty: report.uncertainty,
            dominated,
        });
        reports.push(report);
    }
    let check_failed = rows.iter().any(|r| !r.dominated);
    Ok(Outcome {
        tables: vec![Table::from_rows(cfg.kind.name(), schema(cfg.kind), &rows)?],
        report: json!({ "rows": rows, "bounds": reports, "esseen_constant": c }),
        check_failed,
        sampling_seconds: s.seconds,
    })
}

fn exact_pair(
    model: &ProcessModel,
    obs: &ObservableSequence,
    tilt: &DensityTilt,
    n: usize,
    order: u32,
) -> Result<
    Option<(
        tilt_core::spectral::ChainMoments,
        tilt_core::spectral::ChainMoments,
    )>,
> {
    match model.as_chain() {
        None => Ok(None),
        Some(chain) => Ok(Some((
            exact_moments_chain(&chain, obs, None, n, order)?,
            exact_moments_chain(&chain, obs, Some(tilt), n, order)?,
        ))),
    }
}

#[derive(Serialize)]
struct CenteringRow {
    n: usize,
    mean_gap: f64,
    mean_gap_se: f64,
    exact_gap: Option<f64>,
    certificate: f64,
    dominated: bool,
}

fn centering(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (model, obs, tilt) = parts(cfg);
    require_scalar(obs)?;
    let s = sample_both(cfg, &cfg.n_list)?;
    let n_max = *cfg.n_list.last().expect("nonempty");
    let profile = delta_profile(model, tilt, n_max)?;
    let norm_r = profile.paired_norm(tilt)?;
    let sups = (0..n_max)
        .map(|j| {
            obs.sup_norm(j)
                .ok_or_else(|| tilt_core::Error::InvalidInput(format!("no sup norm for g_{j}")))
        })
        .collect::<std::result::Result<Vec<f64>, _>>()?;
    let mut rows = Vec::new();
    for &n in &cfg.n_list {
        let gap = empirical_gap(&s.mu.sample_at(n)?, &s.nu.sample_at(n)?)?
            .columns
            .remove(0);
        let exact = exact_pair(model, obs, tilt, n, 1)?.map(|(m, v)| (v.mean - m.mean).abs());
        let cert = centering_gap_certificate(
            &profile,
            &sups[..n],
            [1.0, f64::INFINITY, f64::INFINITY],
            Prefactors {
                truncation: norm_r,
                tail: 2.0,
            },
            n,
            Levels::Optimize,
        )?;
        let dominated = gap.mean_gap <= cert.total + 3.0 * gap.mean_gap_se
            && exact.is_none_or(|e| e <= cert.total);
        log(
            cfg.kind,
            format!(
                "n = {n}: gap {:.4} ± {:.1e}, certificate {:.4}",
                gap.mean_gap, gap.mean_gap_se, cert.total
            ),
        );
        rows.push(CenteringRow {
            n,
            mean_gap: gap.mean_gap,
            mean_gap_se: gap.mean_gap_se,
            exact_gap: exact,
            certificate: cert.total,
            dominated,
        });
    }
    let check_failed = rows.iter().any(|r| !r.dominated);
    Ok(Outcome {
        tables: vec![Table::from_rows(cfg.kind.name(), schema(cfg.kind), &rows)?],
        report: json!({ "rows": rows, "norm_r": norm_r }),
        check_failed,
        sampling_seconds: s.seconds,
    })
}

#[derive(Serialize)]
struct VarianceRow {
    n: usize,
    std_ratio: Option<f64>,
    std_ratio_se: Option<f64>,
    exact_ratio: Option<f64>,
    measured: Option<f64>,
    certificate_relative: Option<f64>,
    dominated: Option<bool>,
}

fn variance(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (model, obs, tilt) = parts(cfg);
    require_scalar(obs)?;
    let s = sample_both(cfg, &cfg.n_list)?;
    let n_max = *cfg.n_list.last().expect("nonempty");
    let profile = delta_profile(model, tilt, n_max)?;
    let norm_r = profile.paired_norm(tilt)?;
    let sups = (0..n_max)
        .map(|j| {
            obs.sup_norm(j)
                .ok_or_else(|| tilt_core::Error::InvalidInput(format!("no sup norm for g_{j}")))
        })
        .collect::<std::result::Result<Vec<f64>, _>>()?;
    let pair = |k: usize, j: usize| sups[k] * sups[j];
    let mut rows = Vec::new();
    for &n in &cfg.n_list {
        let mu = s.mu.sample_at(n)?;
        let gap = empirical_gap(&mu, &s.nu.sample_at(n)?)?.columns.remove(0);
        let exact = exact_pair(model, obs, tilt, n, 2)?
            .and_then(|(m, v)| Some((v.variance? / m.variance?).sqrt()).filter(|r| r.is_finite()));
        let row = match (gap.std_ratio, gap.std_ratio_se) {
            (Some(ratio), Some(se)) => {
                let cert = variance_gap_certificate(
                    &profile,
                    &pair,
                    [1.0, f64::INFINITY, f64::INFINITY],
                    Prefactors {
                        truncation: norm_r,
                        tail: 2.0,
                    },
                    n,
                    Levels::Optimize,
                )?
                .compare_to(mu.variance(0));
                let measured = (ratio * ratio - 1.0).abs();
                let relative = cert.relative.expect("compared");
                VarianceRow {
                    n,
                    std_ratio: Some(ratio),
                    std_ratio_se: Some(se),
                    exact_ratio: exact,
                    measured: Some(measured),
                    certificate_relative: Some(relative),
                    dominated: Some(measured <= relative + 3.0 * 2.0 * ratio * se),
                }
            }
            _ => VarianceRow {
                n,
                std_ratio: None,
                std_ratio_se: None,
                exact_ratio: exact,
                measured: None,
                certificate_relative: None,
                dominated: None,
            },
        };
        log(
            cfg.kind,
            format!(
                "n = {n}: ratio {:?}, certificate {:?}",
                row.std_ratio, row.certificate_relative
            ),
        );
        rows.push(row);
    }
    let check_failed = rows.iter().any(|r| r.dominated == Some(false));
    Ok(Outcome {
        tables: vec![Table::from_rows(cfg.kind.name(), schema(cfg.kind), &rows)?],
        report: json!({ "rows": rows, "norm_r": norm_r }),
        check_failed,
        sampling_seconds: s.seconds,
    })
}

#[derive(Serialize)]
struct WipRow {
    n: usize,
    b_n: f64,
    fdd_distance: f64,
    fdd_radius: f64,
    exceedance_mu: f64,
    exceedance_mu_se: f64,
    exceedance_nu: f64,
    exceedance_nu_se: f64,
    transfer_c: f64,
    transfer_eta: f64,
    transfer_bound: f64,
    dominated: bool,
}

/// Every point of the product grid `F^m`.
fn product_grid(freqs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|p| freqs.iter().map(move |&f| [p.clone(), vec![f]].concat()))
            .collect();
    }
    out
}

fn wip(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (model, obs, tilt) = parts(cfg);
    require_scalar(obs)?;
    let w = &cfg.wip;
    let k = w.grid;
    let cps: Vec<usize> = cfg
        .n_list
        .iter()
        .flat_map(|&n| (1..=k).map(move |i| n * i / k))
        .filter(|&m| m > 0)
        .collect();
    let s = sample_both(cfg, &cps)?;
    let grid = uniform_grid(k);
    let fdd = FddVector::new(w.fdd_times.clone())?;
    let freqs = product_grid(&w.frequencies, w.fdd_times.len());
    let mut rows = Vec::new();
    let mut fan = Table {
        name: format!("{}-fan", cfg.kind.name()),
        header: ["n", "measure", "t"]
            .iter()
            .map(|h| h.to_string())
            .chain(w.fan.iter().map(|p| format!("q{p}")))
            .collect(),
        rows: Vec::new(),
    };
    for (idx, &n) in cfg.n_list.iter().enumerate() {
        let b = normalizer(cfg, idx, &s.mu.sample_at(n)?)?;
        let pm = path_from_checkpoints(&s.mu, n, b, &grid)?;
        let pn = path_from_checkpoints(&s.nu, n, b, &grid)?;
        let d = fdd_distance(&pm, &pn, &fdd, &freqs)?;
        let tm = tightness_diagnostic(&pm, w.eps, w.delta)?;
        let tn = tightness_diagnostic(&pn, w.eps, w.delta)?;
        let transfer = nu_tightness_transfer(tm.exceedance, tilt, model, &w.c_grid)?;
        let dominated = tn.exceedance <= transfer.best.bound + 3.0 * tn.standard_error;
        log(
            cfg.kind,
            format!(
                "n = {n}: fdd {:.4} (radius {:.4}), ν exceedance {:.4} vs {:.4}",
                d.distance, d.radius, tn.exceedance, transfer.best.bound
            ),
        );
        for (tag, paths) in [("mu", &pm), ("nu", &pn)] {
            for r in paths.quantile_fan(&w.fan)? {
                let mut row = vec![n.to_string(), tag.to_string(), render(&json!(r.t))];
                row.extend(r.quantiles.iter().map(|q| render(&json!(q))));
                fan.rows.push(row);
            }
        }
        rows.push(WipRow {
            n,
            b_n: b,
            fdd_distance: d.distance,
            fdd_radius: d.radius,
            exceedance_mu: tm.exceedance,
            exceedance_mu_se: tm.standard_error,
            exceedance_nu: tn.exceedance,
            exceedance_nu_se: tn.standard_error,
            transfer_c: transfer.best.c,
            transfer_eta: transfer.best.eta,
            transfer_bound: transfer.best.bound,
            dominated,
        });
    }
    let check_failed = rows.iter().any(|r| !r.dominated);
    Ok(Outcome {
        tables: vec![
            Table::from_rows(cfg.kind.name(), schema(cfg.kind), &rows)?,
            fan,
        ],
        report: json!({ "rows": rows }),
        check_failed,
        sampling_seconds: s.seconds,
    })
}

#[derive(Serialize)]
struct AuditRow {
    n: usize,
    alpha_exact: Option<f64>,
    alpha_upper: Option<f64>,
    delta: f64,
    covariance: Option<f64>,
    bound: Option<f64>,
    dominated: bool,
}

fn harmonic_of(obs: Option<&ObservableSequence>) -> Result<TrigPolynomial> {
    match obs.map(ObservableSequence::kind) {
        None => Ok(TrigPolynomial {
            mean: 0.0,
            terms: vec![(1, 1.0, 0.0)],
        }),
        Some(ObservableKind::Harmonic { frequency, sine }) => Ok(TrigPolynomial {
            mean: 0.0,
            terms: vec![(*frequency, 1.0, if *sine { -PI / 2.0 } else { 0.0 })],
        }),
        Some(_) => Err(tilt_core::Error::Unsupported(
            "map audits need a cosine or sine observable".into(),
        )
        .into()),
    }
}

fn mixing_audit(cfg: &ExperimentConfig) -> Result<Outcome> {
    let model = cfg.model.as_ref().expect("resolved model");
    let n_max = *cfg.n_list.last().expect("nonempty");
    let mut rows = Vec::new();
    match model {
        ProcessModel::Map(map) => {
            let profile = delta_profile_expanding(map, n_max)?;
            let s = PiecewiseLinear::new(cfg.audit.knots.clone(), cfg.audit.values.clone())?
                .normalized()?;
            let f = harmonic_of(cfg.observable.as_ref())?;
            for &n in &cfg.n_list {
                let delta = profile.value(n)?;
                let cov = map_covariance_exact(map, &s, &f, n)?;
                let bound = s.variation() * f.sup_bound() * delta;
                rows.push(AuditRow {
                    n,
                    alpha_exact: None,
                    alpha_upper: None,
                    delta,
                    covariance: Some(cov),
                    bound: Some(bound),
                    dominated: cov.abs() <= bound,
                });
            }
        }
        _ => {
            let chain = model.as_chain().expect("finite-state model");
            let p = match cfg.tilt.as_ref().map(DensityTilt::norm_class) {
                Some(NormClass::Lp(p)) => p,
                _ => 2.0,
            };
            let alpha = alpha_profile_dobrushin(&chain, n_max / 2 + 1)?;
            let delta = delta_from_alpha(&alpha, &ApproximationProfile::Zero, p)?;
            for &n in &cfg.n_list {
                let exact = match alpha_bruteforce(&chain, 0, n, cfg.audit.depth, false) {
                    Ok(a) => Some(a.value),
                    Err(tilt_core::Error::EnumerationCap { .. }) => None,
                    Err(e) => return Err(e.into()),
                };
                let upper = alpha_upper_dobrushin(&chain, n)?;
                rows.push(AuditRow {
                    n,
                    alpha_exact: exact,
                    alpha_upper: Some(upper),
                    delta: delta.value(n)?,
                    covariance: None,
                    bound: None,
                    dominated: exact.is_none_or(|a| a <= upper),
                });
            }
        }
    }
    for r in &rows {
        log(
            cfg.kind,
            format!(
                "n = {}: δ = {:.3e}, dominated {}",
                r.n, r.delta, r.dominated
            ),
        );
    }
    let check_failed = rows.iter().any(|r| !r.dominated);
    Ok(Outcome {
        tables: vec![Table::from_rows(cfg.kind.name(), schema(cfg.kind), &rows)?],
        report: json!({ "rows": rows }),
        check_failed,
        sampling_seconds: 0.0,
    })
}

pub fn run_constant() -> Result<Outcome> {
    let c = esseen_constant()?;
    Ok(Outcome {
        tables: vec![Table::from_rows("constant", schema(Kind::Constant), &[c])?],
        report: json!({ "esseen_constant": c }),
        check_failed: false,
        sampling_seconds: 0.0,
    })
}
