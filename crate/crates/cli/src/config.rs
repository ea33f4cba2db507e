//! Experiment configuration: TOML grammar, resolution into core types and
//! exhaustive validation.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tilt_core::models::{
    DensityTilt, IidModel, InhomogeneousMarkovChain, ObservableSequence, ProcessModel,
    SequentialExpandingMap, StateSpace,
};

/// The only grammar version understood by this build.
pub const FORMAT_VERSION: i64 = 1;
pub const MIN_SAMPLES: i64 = 100;
const DEFAULT_MEMORY_LIMIT_MB: f64 = 4096.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    EaglesonConvergence,
    QuantBound,
    Centering,
    Variance,
    Wip,
    MixingAudit,
    Constant,
}

impl Kind {
    pub const ALL: [Kind; 7] = [
        Kind::EaglesonConvergence,
        Kind::QuantBound,
        Kind::Centering,
        Kind::Variance,
        Kind::Wip,
        Kind::MixingAudit,
        Kind::Constant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::EaglesonConvergence => "eagleson-convergence",
            Kind::QuantBound => "quant-bound",
            Kind::Centering => "centering",
            Kind::Variance => "variance",
            Kind::Wip => "wip",
            Kind::MixingAudit => "mixing-audit",
            Kind::Constant => "constant",
        }
    }

    fn parse(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Kinds that sample partial sums under both measures.
    pub fn samples(self) -> bool {
        !matches!(self, Kind::MixingAudit | Kind::Constant)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A number or the string `"auto"`.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum AutoOr {
    Value(f64),
    Word(String),
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawModel {
    #[serde(rename = "type")]
    pub kind: Option<String>,
    pub slopes: Option<Vec<i64>>,
    pub states: Option<i64>,
    /// Row-major transition matrices, one per period step.
    pub matrices: Option<Vec<Vec<f64>>>,
    pub initial: Option<Vec<f64>>,
    pub weights: Option<Vec<f64>>,
    pub support: Option<Vec<f64>>,
    pub periodic: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawObservable {
    #[serde(rename = "type")]
    pub kind: Option<String>,
    pub frequency: Option<i64>,
    pub tables: Option<Vec<Vec<f64>>>,
    pub periodic: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawTilt {
    #[serde(rename = "type")]
    pub kind: Option<String>,
    pub amplitude: Option<f64>,
    pub frequency: Option<i64>,
    pub breaks: Option<Vec<f64>>,
    pub values: Option<Vec<f64>>,
    pub weights: Option<Vec<f64>>,
    pub p: Option<f64>,
    pub normalize: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawNormalizer {
    pub rule: Option<String>,
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawBound {
    pub t: Option<AutoOr>,
    pub rho: Option<AutoOr>,
    pub t_max: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawWip {
    pub grid: Option<i64>,
    pub fdd_times: Option<Vec<f64>>,
    pub frequencies: Option<Vec<f64>>,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub c_grid: Option<Vec<f64>>,
    pub fan: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawAudit {
    pub depth: Option<i64>,
    pub knots: Option<Vec<f64>>,
    pub values: Option<Vec<f64>>,
}

/// The document as written; every field optional so that validation can
/// report all problems at once.
#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub format_version: Option<i64>,
    pub kind: Option<String>,
    pub samples: Option<i64>,
    pub seed: Option<u64>,
    pub n_list: Option<Vec<i64>>,
    pub output: Option<String>,
    pub memory_limit_mb: Option<f64>,
    pub model: Option<RawModel>,
    pub observable: Option<RawObservable>,
    pub tilt: Option<RawTilt>,
    pub normalizer: Option<RawNormalizer>,
    pub bound: Option<RawBound>,
    pub wip: Option<RawWip>,
    pub audit: Option<RawAudit>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NormalizerRule {
    SqrtN,
    SelfNormalized,
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Selection {
    Auto,
    Explicit(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundSettings {
    pub t: Selection,
    pub rho: Selection,
    pub t_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WipSettings {
    pub grid: usize,
    pub fdd_times: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub eps: f64,
    pub delta: f64,
    pub c_grid: Vec<f64>,
    pub fan: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditSettings {
    pub depth: usize,
    /// Piecewise-linear test density for map covariance audits.
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
}

/// A fully resolved experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub raw: RawConfig,
    pub kind: Kind,
    pub samples: usize,
    pub seed: u64,
    pub n_list: Vec<usize>,
    pub output: PathBuf,
    pub memory_limit_mb: f64,
    pub model: Option<ProcessModel>,
    pub observable: Option<ObservableSequence>,
    pub tilt: Option<DensityTilt>,
    pub normalizer: NormalizerRule,
    pub bound: BoundSettings,
    pub wip: WipSettings,
    pub audit: AuditSettings,
}

/// One validation problem. `path` is the dotted field path, or `None` for
/// syntax errors, which carry a position instead.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigIssue {
    pub path: Option<String>,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.path, self.line, self.column) {
            (Some(p), _, _) => write!(f, "{p}: {}", self.message),
            (None, Some(l), Some(c)) => write!(f, "line {l}, column {c}: {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Io(String),
    Invalid(Vec<ConfigIssue>),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(m) => write!(f, "cannot read config: {m}"),
            ConfigError::Invalid(issues) => {
                for (k, i) in issues.iter().enumerate() {
                    if k > 0 {
                        writeln!(f)?;
                    }
                    write!(f, "{i}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ConfigError {}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

pub fn parse(text: &str) -> Result<RawConfig, ConfigError> {
    toml::from_str(text).map_err(|e| {
        let (line, column) = match e.span() {
            Some(s) => {
                let (l, c) = line_column(text, s.start);
                (Some(l), Some(c))
            }
            None => (None, None),
        };
        ConfigError::Invalid(vec![ConfigIssue {
            path: None,
            line,
            column,
            message: e.message().trim().to_string(),
        }])
    })
}

pub fn load(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    resolve(parse(&text)?)
}

#[derive(Default)]
struct Issues(Vec<ConfigIssue>);

impl Issues {
    fn push(&mut self, path: &str, message: impl Into<String>) {
        self.0.push(ConfigIssue {
            path: Some(path.to_string()),
            line: None,
            column: None,
            message: message.into(),
        });
    }

    fn require<'a, T>(&mut self, value: &'a Option<T>, path: &str) -> Option<&'a T> {
        if value.is_none() {
            self.push(path, "missing required field");
        }
        value.as_ref()
    }
}

fn positive_usize(issues: &mut Issues, v: i64, path: &str) -> Option<usize> {
    if v <= 0 {
        issues.push(path, format!("must be positive (got {v})"));
        None
    } else {
        Some(v as usize)
    }
}

fn resolve_model(raw: &RawModel, issues: &mut Issues) -> Option<ProcessModel> {
    let kind = issues.require(&raw.kind, "model.type")?;
    let periodic = raw.periodic.unwrap_or(true);
    match kind.as_str() {
        "map" => {
            let slopes = issues.require(&raw.slopes, "model.slopes")?;
            if let Some(s) = slopes.iter().find(|s| !(2..=u32::MAX as i64).contains(*s)) {
                issues.push(
                    "model.slopes",
                    format!("slopes must be integers ≥ 2 (got {s})"),
                );
                return None;
            }
            let slopes = slopes.iter().map(|&s| s as u32).collect();
            SequentialExpandingMap::new(slopes, periodic)
                .map(ProcessModel::Map)
                .map_err(|e| issues.push("model.slopes", e.to_string()))
                .ok()
        }
        "chain" => {
            let states = issues.require(&raw.states, "model.states").copied();
            let matrices = issues.require(&raw.matrices, "model.matrices");
            let initial = issues.require(&raw.initial, "model.initial");
            let states = positive_usize(issues, states?, "model.states")?;
            InhomogeneousMarkovChain::new(states, matrices?.clone(), periodic, initial?.clone())
                .map(ProcessModel::Chain)
                .map_err(|e| issues.push("model.matrices", e.to_string()))
                .ok()
        }
        "iid" => {
            let weights = issues.require(&raw.weights, "model.weights");
            let support = issues.require(&raw.support, "model.support");
            IidModel::new(weights?.clone(), support?.clone())
                .map(ProcessModel::Iid)
                .map_err(|e| issues.push("model.weights", e.to_string()))
                .ok()
        }
        other => {
            issues.push(
                "model.type",
                format!("unknown model type `{other}` (expected one of: map, chain, iid)"),
            );
            None
        }
    }
}

fn resolve_observable(
    raw: &RawObservable,
    model: Option<&ProcessModel>,
    issues: &mut Issues,
) -> Option<ObservableSequence> {
    let kind = issues.require(&raw.kind, "observable.type")?;
    let obs = match kind.as_str() {
        "cosine" | "sine" => {
            let m = *issues.require(&raw.frequency, "observable.frequency")?;
            if !(1..=u32::MAX as i64).contains(&m) {
                issues.push(
                    "observable.frequency",
                    format!("must be a positive integer (got {m})"),
                );
                return None;
            }
            if kind == "cosine" {
                ObservableSequence::cosine(m as u32)
            } else {
                ObservableSequence::sine(m as u32)
            }
        }
        "states" => {
            let tables = issues.require(&raw.tables, "observable.tables")?;
            let states = tables.first().map_or(0, Vec::len);
            match ObservableSequence::state_values(
                states,
                1,
                tables.clone(),
                raw.periodic.unwrap_or(true),
            ) {
                Ok(o) => o,
                Err(e) => {
                    issues.push("observable.tables", e.to_string());
                    return None;
                }
            }
        }
        "iid-support" => match model {
            Some(ProcessModel::Iid(m)) => ObservableSequence::iid_support(m),
            Some(_) => {
                issues.push("observable.type", "`iid-support` needs an iid model");
                return None;
            }
            None => return None,
        },
        other => {
            issues.push(
                "observable.type",
                format!("unknown observable type `{other}` (expected one of: cosine, sine, states, iid-support)"),
            );
            return None;
        }
    };
    if let Some(m) = model {
        if let Err(e) = obs.check_model(m, 0) {
            issues.push("observable", e.to_string());
            return None;
        }
    }
    Some(obs)
}

fn resolve_tilt(
    raw: &RawTilt,
    model: Option<&ProcessModel>,
    issues: &mut Issues,
) -> Option<DensityTilt> {
    let kind = issues.require(&raw.kind, "tilt.type")?;
    let model = model?;
    let p = raw.p.unwrap_or(2.0);
    let states = |issues: &mut Issues, values: Vec<f64>, normalize: bool| {
        let Some(law) = model.initial_law() else {
            issues.push("tilt.type", "state densities need a finite-state model");
            return None;
        };
        let built = if normalize {
            DensityTilt::states_normalized(values, p, &law)
        } else {
            DensityTilt::states(values, p, &law)
        };
        built.map_err(|e| issues.push("tilt", e.to_string())).ok()
    };
    let tilt = match kind.as_str() {
        "uniform" => match model.state_space() {
            StateSpace::Interval => DensityTilt::uniform(),
            StateSpace::Discrete(s) => states(issues, vec![1.0; s], false)?,
        },
        "cosine" => {
            let a = issues.require(&raw.amplitude, "tilt.amplitude").copied();
            let m = issues.require(&raw.frequency, "tilt.frequency").copied();
            let (a, m) = (a?, m?);
            if !(1..=u32::MAX as i64).contains(&m) {
                issues.push(
                    "tilt.frequency",
                    format!("must be a positive integer (got {m})"),
                );
                return None;
            }
            DensityTilt::cosine(a, m as u32)
        }
        "step" => {
            let breaks = issues.require(&raw.breaks, "tilt.breaks");
            let values = issues.require(&raw.values, "tilt.values");
            DensityTilt::step(breaks?.clone(), values?.clone())
                .map_err(|e| issues.push("tilt", e.to_string()))
                .ok()?
        }
        "states" => {
            let w = issues.require(&raw.weights, "tilt.weights")?.clone();
            states(issues, w, raw.normalize.unwrap_or(true))?
        }
        other => {
            issues.push(
                "tilt.type",
                format!(
                    "unknown tilt type `{other}` (expected one of: uniform, cosine, step, states)"
                ),
            );
            return None;
        }
    };
    tilt.validate(model)
        .map_err(|e| issues.push("tilt", e.to_string()))
        .ok()
}

fn selection(issues: &mut Issues, value: &Option<AutoOr>, path: &str, integer: bool) -> Selection {
    match value {
        None => Selection::Auto,
        Some(AutoOr::Word(w)) if w == "auto" => Selection::Auto,
        Some(AutoOr::Word(w)) => {
            issues.push(path, format!("expected \"auto\" or a number (got \"{w}\")"));
            Selection::Auto
        }
        Some(AutoOr::Value(v)) => {
            if integer && (v.fract() != 0.0 || *v < 1.0) {
                issues.push(path, format!("expected a positive integer (got {v})"));
            }
            Selection::Explicit(*v)
        }
    }
}

fn check_probabilities(issues: &mut Issues, values: &[f64], path: &str) {
    if values.iter().any(|p| !(0.0..=1.0).contains(p)) {
        issues.push(path, "levels must lie in [0, 1]");
    }
}

/// Resolves every section, collecting all problems before failing.
pub fn resolve(raw: RawConfig) -> Result<ExperimentConfig, ConfigError> {
    let mut issues = Issues::default();
    match raw.format_version {
        None => issues.push("format_version", "missing required field"),
        Some(v) if v != FORMAT_VERSION => issues.push(
            "format_version",
            format!("unsupported version {v} (this build reads {FORMAT_VERSION})"),
        ),
        _ => {}
    }
    let valid_kinds = Kind::ALL.map(Kind::name).join(", ");
    let kind = match &raw.kind {
        None => {
            issues.push(
                "kind",
                format!("missing required field (valid kinds: {valid_kinds})"),
            );
            None
        }
        Some(k) => {
            let parsed = Kind::parse(k);
            if parsed.is_none() {
                issues.push(
                    "kind",
                    format!("unknown experiment kind `{k}` (valid kinds: {valid_kinds})"),
                );
            }
            parsed
        }
    };
    let sampling = kind.is_none_or(Kind::samples);
    let needs_model = kind != Some(Kind::Constant);

    let samples = match raw.samples {
        Some(v) if v < MIN_SAMPLES => {
            issues.push(
                "samples",
                format!("must be at least {MIN_SAMPLES} (got {v})"),
            );
            0
        }
        Some(v) => v as usize,
        None if sampling => {
            issues.push("samples", "missing required field");
            0
        }
        None => 0,
    };

    let mut n_list = Vec::new();
    match &raw.n_list {
        Some(list) if list.is_empty() => issues.push("n_list", "must be nonempty"),
        Some(list) => {
            if let Some(v) = list.iter().find(|v| **v <= 0) {
                issues.push("n_list", format!("entries must be positive (got {v})"));
            } else if list.windows(2).any(|w| w[1] <= w[0]) {
                issues.push("n_list", "entries must be strictly increasing");
            } else {
                n_list = list.iter().map(|&v| v as usize).collect();
            }
        }
        None if needs_model => issues.push("n_list", "missing required field"),
        None => {}
    }

    let model = match &raw.model {
        Some(m) if needs_model => resolve_model(m, &mut issues),
        None if needs_model => {
            issues.push("model", "missing required section");
            None
        }
        _ => None,
    };
    if let (Some(m), Some(&n_max)) = (&model, n_list.last()) {
        if let Err(e) = m.check_length(n_max) {
            issues.push("n_list", e.to_string());
        }
    }
    let observable = match &raw.observable {
        Some(o) if sampling => resolve_observable(o, model.as_ref(), &mut issues),
        Some(o) if kind == Some(Kind::MixingAudit) => {
            resolve_observable(o, model.as_ref(), &mut issues)
        }
        None if sampling => {
            issues.push("observable", "missing required section");
            None
        }
        _ => None,
    };
    let tilt = match &raw.tilt {
        Some(t) if needs_model => resolve_tilt(t, model.as_ref(), &mut issues),
        None if sampling => {
            issues.push("tilt", "missing required section");
            None
        }
        _ => None,
    };

    let raw_norm = raw.normalizer.clone().unwrap_or_default();
    let normalizer = match raw_norm.rule.as_deref().unwrap_or("sqrt-n") {
        "sqrt-n" => NormalizerRule::SqrtN,
        "self" => NormalizerRule::SelfNormalized,
        "explicit" => match &raw_norm.values {
            Some(v) if v.len() != n_list.len() => {
                issues.push(
                    "normalizer.values",
                    format!(
                        "need one value per n ({} given, {} expected)",
                        v.len(),
                        n_list.len()
                    ),
                );
                NormalizerRule::SqrtN
            }
            Some(v) if v.iter().any(|b| !(*b > 0.0 && b.is_finite())) => {
                issues.push("normalizer.values", "values must be positive and finite");
                NormalizerRule::SqrtN
            }
            Some(v) => NormalizerRule::Explicit(v.clone()),
            None => {
                issues.push(
                    "normalizer.values",
                    "the explicit rule needs one value per n",
                );
                NormalizerRule::SqrtN
            }
        },
        other => {
            issues.push(
                "normalizer.rule",
                format!("unknown rule `{other}` (expected one of: sqrt-n, self, explicit)"),
            );
            NormalizerRule::SqrtN
        }
    };

    let raw_bound = raw.bound.clone().unwrap_or_default();
    let bound = BoundSettings {
        t: selection(&mut issues, &raw_bound.t, "bound.t", false),
        rho: selection(&mut issues, &raw_bound.rho, "bound.rho", true),
        t_max: raw_bound.t_max.unwrap_or(1e6),
    };
    if let Selection::Explicit(t) = bound.t {
        if !(t >= 1.0) {
            issues.push("bound.t", format!("T must be at least 1 (got {t})"));
        }
    }
    if !(bound.t_max >= 1.0) {
        issues.push(
            "bound.t_max",
            format!("must be at least 1 (got {})", bound.t_max),
        );
    }
    if let (Selection::Explicit(rho), Some(&n_min)) = (bound.rho, n_list.first()) {
        if kind == Some(Kind::QuantBound) && rho >= n_min as f64 {
            issues.push(
                "bound.rho",
                format!("ρ = {rho} must be below every n (smallest is {n_min})"),
            );
        }
    }

    let raw_wip = raw.wip.clone().unwrap_or_default();
    let wip = WipSettings {
        grid: match raw_wip.grid {
            Some(g) => positive_usize(&mut issues, g, "wip.grid").unwrap_or(1),
            None => 64,
        },
        fdd_times: raw_wip.fdd_times.unwrap_or_else(|| vec![0.5, 1.0]),
        frequencies: raw_wip
            .frequencies
            .unwrap_or_else(|| vec![-2.0, -1.0, -0.5, 0.5, 1.0, 2.0]),
        eps: raw_wip.eps.unwrap_or(0.5),
        delta: raw_wip.delta.unwrap_or(0.1),
        c_grid: raw_wip
            .c_grid
            .unwrap_or_else(|| (1..=40).map(|i| 0.1 * i as f64).collect()),
        fan: raw_wip
            .fan
            .unwrap_or_else(|| vec![0.05, 0.25, 0.5, 0.75, 0.95]),
    };
    if kind == Some(Kind::Wip) {
        if wip.fdd_times.is_empty() || wip.fdd_times.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
            issues.push("wip.fdd_times", "times must lie in (0, 1]");
        } else if wip
            .fdd_times
            .iter()
            .any(|t| (t * wip.grid as f64 - (t * wip.grid as f64).round()).abs() > 1e-9)
        {
            issues.push(
                "wip.fdd_times",
                format!("times must be multiples of 1/{}", wip.grid),
            );
        }
        if wip.frequencies.is_empty()
            || wip.frequencies.len().pow(wip.fdd_times.len() as u32) > 100_000
        {
            issues.push(
                "wip.frequencies",
                "the product frequency grid must have between 1 and 100000 points",
            );
        }
        if !(wip.eps > 0.0) {
            issues.push("wip.eps", "must be positive");
        }
        if !(wip.delta > 0.0 && wip.delta < 1.0) {
            issues.push("wip.delta", "must lie in (0, 1)");
        } else if wip.delta < 3.0 / wip.grid as f64 {
            issues.push(
                "wip.delta",
                format!(
                    "δ = {} spans fewer than 3 steps of the 1/{} grid",
                    wip.delta, wip.grid
                ),
            );
        }
        if wip.c_grid.is_empty() || wip.c_grid.iter().any(|c| !(*c > 0.0)) {
            issues.push("wip.c_grid", "truncation levels must be positive");
        }
        check_probabilities(&mut issues, &wip.fan, "wip.fan");
    }

    let raw_audit = raw.audit.clone().unwrap_or_default();
    let audit = AuditSettings {
        depth: match raw_audit.depth {
            Some(d) if d < 0 => {
                issues.push("audit.depth", format!("must be nonnegative (got {d})"));
                0
            }
            Some(d) => d as usize,
            None => 1,
        },
        knots: raw_audit.knots.unwrap_or_else(|| vec![0.0, 0.5, 1.0]),
        values: raw_audit.values.unwrap_or_else(|| vec![0.5, 1.5, 0.5]),
    };

    let memory_limit_mb = raw.memory_limit_mb.unwrap_or(DEFAULT_MEMORY_LIMIT_MB);
    if !(memory_limit_mb > 0.0) {
        issues.push("memory_limit_mb", "must be positive");
    }

    if !issues.0.is_empty() {
        return Err(ConfigError::Invalid(issues.0));
    }
    Ok(ExperimentConfig {
        kind: kind.expect("validated"),
        samples,
        seed: raw.seed.unwrap_or(0),
        n_list,
        output: PathBuf::from(raw.output.clone().unwrap_or_else(|| "out".into())),
        memory_limit_mb,
        model,
        observable,
        tilt,
        normalizer,
        bound,
        wip,
        audit,
        raw,
    })
}
