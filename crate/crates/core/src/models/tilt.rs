use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::ProcessModel;
use crate::numeric;
use crate::rng;

/// Tolerance on `∫ r dμ = 1`.
pub const UNIT_INTEGRAL_TOL: f64 = 1e-10;
/// Equispaced probe points for interval tilts.
pub const GRID_PROBES: usize = 1 << 12;
/// Pseudorandom probe points for interval tilts.
pub const RANDOM_PROBES: usize = 1 << 10;
const PROBE_SEED: u64 = 0x7157_0BE5_EED5_0001;

/// Norm attached to the density class: total variation for interval maps,
/// `L^p(μ)` for finite chains (`p = ∞` allowed).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum NormClass {
    TotalVariation,
    Lp(f64),
}

impl fmt::Display for NormClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormClass::TotalVariation => write!(f, "total variation"),
            NormClass::Lp(p) if p.is_infinite() => write!(f, "L^inf"),
            NormClass::Lp(p) => write!(f, "L^{p}"),
        }
    }
}

pub type IntervalFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum TiltFunction {
    /// Density on `[0, 1)`; `breakpoints` lists known discontinuities.
    Interval {
        eval: IntervalFn,
        breakpoints: Vec<f64>,
    },
    /// Density value per chain state.
    States(Vec<f64>),
}

impl fmt::Debug for TiltFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TiltFunction::Interval { breakpoints, .. } => f
                .debug_struct("Interval")
                .field("breakpoints", breakpoints)
                .finish(),
            TiltFunction::States(v) => f.debug_tuple("States").field(v).finish(),
        }
    }
}

/// Evidence recorded by [`DensityTilt::validate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationStamp {
    pub integral: f64,
    pub min_value: f64,
    pub max_value: f64,
    /// Recomputed norm (exact for chains, grid lower estimate of the variation for maps).
    pub norm_estimate: f64,
}

/// Density `r` of `ν = r dμ` with its class norm and sup bound.
#[derive(Debug, Clone)]
pub struct DensityTilt {
    function: TiltFunction,
    norm_class: NormClass,
    norm_value: f64,
    sup_bound: Option<f64>,
    strictly_positive: bool,
    stamp: Option<ValidationStamp>,
}

/// `(Σ w_i |v_i|^p)^{1/p}`, the essential supremum over `w_i > 0` when `p = ∞`.
pub fn lp_norm(values: &[f64], weights: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        values
            .iter()
            .zip(weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(v, _)| v.abs())
            .fold(0.0, f64::max)
    } else {
        let s: f64 = values
            .iter()
            .zip(weights)
            .map(|(v, w)| w * v.abs().powf(p))
            .sum();
        s.powf(1.0 / p)
    }
}

impl DensityTilt {
    /// `r ≡ 1` on the interval.
    pub fn uniform() -> Self {
        Self::interval(Arc::new(|_| 1.0), 0.0, Some(1.0), Vec::new())
    }

    /// `r(x) = 1 + a·cos(2π m x)`: variation `4|a|m`, sup `1 + |a|`.
    pub fn cosine(amplitude: f64, frequency: u32) -> Self {
        let m = frequency as f64;
        Self::interval(
            Arc::new(move |x| 1.0 + amplitude * (2.0 * PI * m * x).cos()),
            4.0 * amplitude.abs() * m,
            Some(1.0 + amplitude.abs()),
            Vec::new(),
        )
    }

    /// Piecewise-constant density: `values[i]` on `[breaks[i-1], breaks[i])`.
    pub fn step(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breaks.len() + 1 {
            return Err(Error::InvalidInput(format!(
                "step density needs {} values for {} breaks, got {}",
                breaks.len() + 1,
                breaks.len(),
                values.len()
            )));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) || breaks.iter().any(|b| !(0.0..1.0).contains(b))
        {
            return Err(Error::InvalidInput(
                "step breaks must increase inside (0, 1)".into(),
            ));
        }
        let variation: f64 = values.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        let sup = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (b, v) = (breaks.clone(), values);
        let eval = Arc::new(move |x: f64| v[b.partition_point(|&t| t <= x)]);
        Ok(Self::interval(eval, variation, Some(sup), breaks))
    }

    /// General interval density with a declared variation norm.
    pub fn interval(
        eval: IntervalFn,
        variation: f64,
        sup_bound: Option<f64>,
        breakpoints: Vec<f64>,
    ) -> Self {
        Self {
            function: TiltFunction::Interval { eval, breakpoints },
            norm_class: NormClass::TotalVariation,
            norm_value: variation,
            sup_bound,
            strictly_positive: false,
            stamp: None,
        }
    }

    /// Density over chain states with the `L^p(reference)` norm computed from `reference`.
    pub fn states(values: Vec<f64>, p: f64, reference: &[f64]) -> Result<Self> {
        if p < 1.0 || p.is_nan() {
            return Err(Error::InvalidInput(format!(
                "norm exponent p = {p} must be >= 1"
            )));
        }
        if values.len() != reference.len() {
            return Err(Error::InvalidInput(format!(
                "{} density values for {} states",
                values.len(),
                reference.len()
            )));
        }
        let norm = lp_norm(&values, reference, p);
        Ok(Self::states_with_norm(values, p, norm))
    }

    /// Tilts `reference` towards unnormalized nonnegative weights: `r = w / Σ μ_0 w`.
    pub fn states_normalized(weights: Vec<f64>, p: f64, reference: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().zip(reference).map(|(w, m)| w * m).sum();
        if !(total > 0.0) {
            return Err(Error::InvalidDensity {
                reason: "weights have zero mass under the initial law".into(),
                witness: None,
                integral: Some(total),
            });
        }
        Self::states(
            weights.into_iter().map(|w| w / total).collect(),
            p,
            reference,
        )
    }

    pub fn states_with_norm(values: Vec<f64>, p: f64, norm_value: f64) -> Self {
        let sup = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            function: TiltFunction::States(values),
            norm_class: NormClass::Lp(p),
            norm_value,
            sup_bound: Some(sup),
            strictly_positive: false,
            stamp: None,
        }
    }

    pub fn function(&self) -> &TiltFunction {
        &self.function
    }

    pub fn norm_class(&self) -> NormClass {
        self.norm_class
    }

    pub fn norm_value(&self) -> f64 {
        self.norm_value
    }

    pub fn sup_bound(&self) -> Option<f64> {
        self.sup_bound
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.strictly_positive
    }

    pub fn stamp(&self) -> Option<&ValidationStamp> {
        self.stamp.as_ref()
    }

    pub fn is_validated(&self) -> bool {
        self.stamp.is_some()
    }

    /// Value at an interval point; `None` for state tilts.
    #[inline]
    pub fn at_point(&self, x: f64) -> Option<f64> {
        match &self.function {
            TiltFunction::Interval { eval, .. } => Some(eval(x)),
            TiltFunction::States(_) => None,
        }
    }

    /// Value at a chain state; `None` for interval tilts or out-of-range states.
    #[inline]
    pub fn at_state(&self, s: usize) -> Option<f64> {
        match &self.function {
            TiltFunction::States(v) => v.get(s).copied(),
            TiltFunction::Interval { .. } => None,
        }
    }

    /// Checks nonnegativity, unit integral and norm consistency against `model`.
    pub fn validate(mut self, model: &ProcessModel) -> Result<Self> {
        let stamp = match (&self.function, model.initial_law()) {
            (TiltFunction::Interval { eval, breakpoints }, None) => {
                if self.norm_class != NormClass::TotalVariation {
                    return Err(Error::InvalidInput(
                        "interval densities carry the total-variation norm".into(),
                    ));
                }
                validate_interval(eval, breakpoints, self.norm_value, self.sup_bound)?
            }
            (TiltFunction::States(values), Some(law)) => {
                let NormClass::Lp(p) = self.norm_class else {
                    return Err(Error::InvalidInput(
                        "state densities carry an L^p norm".into(),
                    ));
                };
                validate_states(values, &law, p, self.norm_value, self.sup_bound)?
            }
            (TiltFunction::Interval { .. }, Some(_)) => {
                return Err(Error::InvalidInput(
                    "interval density supplied for a finite-state model".into(),
                ))
            }
            (TiltFunction::States(_), None) => {
                return Err(Error::InvalidInput(
                    "state density supplied for an interval map".into(),
                ))
            }
        };
        self.strictly_positive = stamp.min_value > 0.0;
        self.stamp = Some(stamp);
        Ok(self)
    }

    /// Tail mass `η_C = μ(|r|·1{|r| > C})`: exact for chains; for interval
    /// densities the crossings of `|r| = C` are bracketed on the probe grid and
    /// refined by bisection, then `|r|` is integrated over the exceedance panels.
    pub fn tail_mass(&self, c: f64, model: &ProcessModel) -> Result<f64> {
        match (&self.function, model.initial_law()) {
            (TiltFunction::States(values), Some(law)) => Ok(values
                .iter()
                .zip(&law)
                .filter(|(v, _)| v.abs() > c)
                .map(|(v, m)| v.abs() * m)
                .sum()),
            (TiltFunction::Interval { eval, breakpoints }, None) => {
                let excess = |x: f64| eval(x).abs() - c;
                let mut cuts = vec![0.0, 1.0];
                cuts.extend(breakpoints.iter().copied());
                let h = 1.0 / GRID_PROBES as f64;
                for i in 0..GRID_PROBES {
                    let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
                    let (fa, fb) = (excess(a), excess(b));
                    if fa == 0.0 {
                        cuts.push(a);
                    } else if fa.signum() != fb.signum() && fb != 0.0 {
                        // A jump inside the cell also produces a sign change; bisection
                        // then converges onto the jump location.
                        cuts.push(numeric::bisect(excess, a, b, 1e-15)?);
                    }
                }
                cuts.sort_by(f64::total_cmp);
                cuts.dedup();
                let mut total = 0.0;
                for w in cuts.windows(2) {
                    if w[1] - w[0] <= 0.0 {
                        continue;
                    }
                    if excess(0.5 * (w[0] + w[1])) > 0.0 {
                        total += numeric::integrate(|x| eval(x).abs(), w[0], w[1], 1e-14).value;
                    }
                }
                Ok(total)
            }
            _ => Err(Error::InvalidInput(
                "density does not match the model's state space".into(),
            )),
        }
    }
}

fn density_error(reason: impl Into<String>, witness: Option<f64>, integral: Option<f64>) -> Error {
    Error::InvalidDensity {
        reason: reason.into(),
        witness,
        integral,
    }
}

fn interval_probes() -> Vec<f64> {
    let mut pts: Vec<f64> = (0..GRID_PROBES)
        .map(|i| i as f64 / GRID_PROBES as f64)
        .collect();
    let mut rng = rng::stream(PROBE_SEED, 0, rng::LANE_PROBE);
    pts.extend((0..RANDOM_PROBES).map(|_| rng::unit_f64(&mut rng)));
    pts
}

fn validate_interval(
    eval: &IntervalFn,
    breakpoints: &[f64],
    declared_variation: f64,
    sup_bound: Option<f64>,
) -> Result<ValidationStamp> {
    let probes = interval_probes();
    let mut min_value = f64::INFINITY;
    let mut max_value = f64::NEG_INFINITY;
    for &x in &probes {
        let v = eval(x);
        if !v.is_finite() {
            return Err(density_error(
                format!("non-finite value {v}"),
                Some(x),
                None,
            ));
        }
        if v < 0.0 {
            return Err(density_error(format!("negative value {v}"), Some(x), None));
        }
        min_value = min_value.min(v);
        max_value = max_value.max(v);
    }
    if let Some(sup) = sup_bound {
        if max_value > sup * (1.0 + 1e-12) {
            return Err(density_error(
                format!("value {max_value} exceeds declared sup bound {sup}"),
                None,
                None,
            ));
        }
    }
    let mut panels = vec![0.0];
    let mut inner: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|b| *b > 0.0 && *b < 1.0)
        .collect();
    inner.sort_by(f64::total_cmp);
    panels.extend(inner);
    panels.push(1.0);
    let integral = numeric::integrate_panels(|x| eval(x), &panels, 1e-13).value;
    if (integral - 1.0).abs() > UNIT_INTEGRAL_TOL {
        return Err(density_error(
            format!("integral {integral} differs from 1"),
            None,
            Some(integral),
        ));
    }
    let grid = &probes[..GRID_PROBES];
    let variation: f64 = grid
        .windows(2)
        .map(|w| (eval(w[1]) - eval(w[0])).abs())
        .sum();
    if declared_variation < variation * (1.0 - 1e-12) - 1e-12 {
        return Err(density_error(
            format!("declared variation {declared_variation} is below grid estimate {variation}"),
            None,
            None,
        ));
    }
    Ok(ValidationStamp {
        integral,
        min_value,
        max_value,
        norm_estimate: variation,
    })
}

fn validate_states(
    values: &[f64],
    law: &[f64],
    p: f64,
    declared: f64,
    sup_bound: Option<f64>,
) -> Result<ValidationStamp> {
    if values.len() != law.len() {
        return Err(Error::InvalidInput(format!(
            "{} density values for {} states",
            values.len(),
            law.len()
        )));
    }
    for (s, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(density_error(
                format!("non-finite value {v}"),
                Some(s as f64),
                None,
            ));
        }
        if v < 0.0 {
            return Err(density_error(
                format!("negative value {v}"),
                Some(s as f64),
                None,
            ));
        }
    }
    let integral: f64 = values.iter().zip(law).map(|(v, m)| v * m).sum();
    if (integral - 1.0).abs() > UNIT_INTEGRAL_TOL {
        return Err(density_error(
            format!("integral {integral} differs from 1"),
            None,
            Some(integral),
        ));
    }
    let norm = lp_norm(values, law, p);
    if (norm - declared).abs() > 1e-10 * norm.max(1.0) {
        return Err(density_error(
            format!("declared norm {declared} differs from recomputed L^{p} norm {norm}"),
            None,
            None,
        ));
    }
    let min_value = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max_value = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if let Some(sup) = sup_bound {
        if max_value > sup {
            return Err(density_error(
                format!("value {max_value} exceeds declared sup bound {sup}"),
                None,
                None,
            ));
        }
    }
    Ok(ValidationStamp {
        integral,
        min_value,
        max_value,
        norm_estimate: norm,
    })
}
