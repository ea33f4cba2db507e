//! Kolmogorov distances, the smoothing constant `c`, and the quantitative
//! change-of-measure bounds built on the smoothing inequality.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::mixing::MixingProfile;
use crate::models::DensityTilt;
use crate::numeric;
use crate::spectral::CharacteristicFunction;

/// `c` with `∫_0^{c/2} sin²x/x² dx = π/4 + 1/8`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EsseenConstant {
    pub c: f64,
    pub residual: f64,
}

pub(crate) fn sinc_squared(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let s = x.sin() / x;
        s * s
    }
}

/// `∫_0^u sin²x/x² dx` by adaptive Gauss–Kronrod.
pub fn sinc_squared_integral(u: f64) -> numeric::Quadrature {
    numeric::integrate(sinc_squared, 0.0, u, 1e-14)
}

/// Bisection for the root `u` of `∫_0^u sin²x/x² = π/4 + 1/8` on `[0, π/2]`, then `c = 2u`.
pub fn esseen_constant() -> Result<EsseenConstant> {
    let target = PI / 4.0 + 0.125;
    let f = |u: f64| sinc_squared_integral(u).value - target;
    if !(f(0.0) < 0.0 && f(PI / 2.0) > 0.0) {
        return Err(Error::Numerical(
            "smoothing-constant bracket has no sign change".into(),
        ));
    }
    let u = numeric::bisect(f, 0.0, PI / 2.0, 1e-15)?;
    Ok(EsseenConstant {
        c: 2.0 * u,
        residual: f(u).abs(),
    })
}

/// Target law `Z` with a bounded density.
#[derive(Clone)]
pub struct ReferenceLaw {
    pub name: String,
    cdf: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub density_sup: f64,
}

impl fmt::Debug for ReferenceLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReferenceLaw")
            .field("name", &self.name)
            .field("density_sup", &self.density_sup)
            .finish()
    }
}

impl ReferenceLaw {
    /// Checks monotonicity, limits and the density bound on a probe grid.
    pub fn new<F>(name: &str, cdf: F, density_sup: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let grid: Vec<f64> = (0..=4000).map(|i| -20.0 + i as f64 * 0.01).collect();
        let vals: Vec<f64> = grid.iter().map(|&x| cdf(x)).collect();
        if vals.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidInput(format!(
                "cdf of {name} decreases on the probe grid"
            )));
        }
        if cdf(-1e6) > 1e-6 || cdf(1e6) < 1.0 - 1e-6 {
            return Err(Error::InvalidInput(format!(
                "cdf of {name} does not tend to 0 and 1"
            )));
        }
        let slope = vals
            .windows(2)
            .map(|w| (w[1] - w[0]) / 0.01)
            .fold(0.0, f64::max);
        if slope > density_sup * (1.0 + 1e-9) {
            return Err(Error::InvalidInput(format!(
                "declared density bound {density_sup} is below the cdf slope {slope}"
            )));
        }
        Ok(Self {
            name: name.to_string(),
            cdf: Arc::new(cdf),
            density_sup,
        })
    }

    pub fn standard_normal() -> Self {
        Self {
            name: "standard normal".into(),
            cdf: Arc::new(normal_cdf),
            density_sup: 1.0 / (2.0 * PI).sqrt(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        (self.cdf)(x)
    }
}

/// `Φ(x) = erfc(−x/√2)/2`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Inverse of [`normal_cdf`], refined by one Newton step.
pub fn normal_quantile(p: f64) -> f64 {
    let x = Normal::standard().inverse_cdf(p);
    if !x.is_finite() {
        return x;
    }
    let density = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
    x - (normal_cdf(x) - p) / density
}

fn sorted(sample: &[f64]) -> Result<Vec<f64>> {
    if sample.is_empty() {
        return Err(Error::InvalidInput("empty sample".into()));
    }
    if sample.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("sample contains NaN".into()));
    }
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// `sup_t |F_N(t) − F(t)|` for the empirical law of `sample`.
pub fn kolmogorov_to_cdf(sample: &[f64], law: &ReferenceLaw) -> Result<f64> {
    let v = sorted(sample)?;
    let n = v.len() as f64;
    Ok(v.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = law.cdf(x);
        d.max((((i + 1) as f64) / n - f).abs())
            .max((i as f64 / n - f).abs())
    }))
}

/// Exact two-sample statistic `sup_t |F_a(t) − F_b(t)|` by a merge scan.
pub fn kolmogorov_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let (a, b) = (sorted(a)?, sorted(b)?);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        // Step past every copy of t in both samples before comparing.
        while i < a.len() && a[i] == t {
            i += 1;
        }
        while j < b.len() && b[j] == t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Bounds from the smoothing inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LemmaBound {
    /// `∫_{−T}^{T} |φ_X − φ_Y|/|t| dt`.
    pub integral: f64,
    pub integral_error: f64,
    pub converged: bool,
    /// The integral with both confidence radii added to `|φ_X − φ_Y|`.
    pub integral_inflated: f64,
    /// Contribution of `|t| ≤ t₀` from the derivative bound.
    pub near_zero: f64,
    pub smoothing: f64,
    /// Bound on `d_K(X, Y)`.
    pub bound_xy: f64,
    /// Bound on `d_K(X, Z)`.
    pub bound_xz: f64,
}

/// Relative cutoff `t₀ = 10^{-3}·T` below which the derivative bound is used.
pub const NEAR_ZERO_FRACTION: f64 = 1e-3;
const DIFF_STEP: f64 = 1e-4;

/// `(m, E X²)` of a scalar law from central differences of its cf at 0.
fn moments_from_cf(phi: &CharacteristicFunction) -> (f64, f64) {
    let h = DIFF_STEP;
    let (p, m) = (phi.at_scalar(h), phi.at_scalar(-h));
    let mean = (p - m).im / (2.0 * h);
    let second = -(p.re - 2.0 + m.re) / (h * h);
    (mean, second)
}

pub fn esseen_lemma_bound(
    phi_x: &CharacteristicFunction,
    phi_y: &CharacteristicFunction,
    t: f64,
    dk_yz: f64,
    law: &ReferenceLaw,
    c: &EsseenConstant,
) -> Result<LemmaBound> {
    if !(t > 0.0) {
        return Err(Error::Precondition(format!("T = {t} must be positive")));
    }
    if phi_x.dim() != 1 || phi_y.dim() != 1 {
        return Err(Error::InvalidInput(
            "the smoothing inequality is scalar".into(),
        ));
    }
    for phi in [phi_x, phi_y] {
        if (phi.at_scalar(0.0) - 1.0).norm() > 1e-12 {
            return Err(Error::InvalidInput(
                "characteristic function is not 1 at 0".into(),
            ));
        }
    }
    let smoothing = 2.0 * law.density_sup * c.c * c.c / t;
    if t.is_infinite() {
        let diff = phi_x.at_scalar(1.0) - phi_y.at_scalar(1.0);
        if diff.norm() != 0.0 {
            return Err(Error::Precondition(
                "T = ∞ needs equal characteristic functions".into(),
            ));
        }
        return Ok(LemmaBound {
            integral: 0.0,
            integral_error: 0.0,
            converged: true,
            integral_inflated: 0.0,
            near_zero: 0.0,
            smoothing: 0.0,
            bound_xy: 4.0 * c.c * dk_yz,
            bound_xz: (4.0 * c.c + 1.0) * dk_yz,
        });
    }
    let t0 = NEAR_ZERO_FRACTION * t;
    let (mx, sx) = moments_from_cf(phi_x);
    let (my, sy) = moments_from_cf(phi_y);
    let lip = 0.5 * (sx - sy).abs();
    // Integrand bounded by |Δm| + L·|t| on [0, t₀], doubled for the negative half.
    let near_zero = 2.0 * ((mx - my).abs() * t0 + 0.5 * lip * t0 * t0);
    let integrand = |s: f64| (phi_x.at_scalar(s) - phi_y.at_scalar(s)).norm() / s;
    // Geometric panels near t₀, then uniform ones.
    let mut panels = vec![t0];
    let mut p = t0;
    while p * 2.0 < t.min(1.0) {
        p *= 2.0;
        panels.push(p);
    }
    let start = *panels.last().unwrap();
    let uniform = (((t - start) * 4.0).ceil() as usize).clamp(1, 4096);
    panels.extend((1..=uniform).map(|i| start + (t - start) * i as f64 / uniform as f64));
    let q = numeric::integrate_panels(integrand, &panels, 1e-11);
    let radii = phi_x.confidence_radius() + phi_y.confidence_radius();
    let integral = near_zero + 2.0 * q.value;
    let integral_inflated = integral + 2.0 * radii * (t / t0).ln();
    Ok(LemmaBound {
        integral,
        integral_error: 2.0 * q.error,
        converged: q.converged,
        integral_inflated,
        near_zero,
        smoothing,
        bound_xy: 4.0 * c.c * dk_yz + integral + smoothing,
        bound_xz: (4.0 * c.c + 1.0) * dk_yz + integral + smoothing,
    })
}

/// Inputs of the quantitative change-of-measure bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantBoundInputs {
    pub n: usize,
    /// `d_K(S_{μ,n}/b_n, Z)` and its standard error.
    pub dk_mu: f64,
    pub dk_mu_se: f64,
    pub rho: usize,
    /// `I(ρ) = ∫|S_ρ|(2 + r) dμ` and its standard error.
    pub i_rho: f64,
    pub i_rho_se: f64,
    pub delta_rho: f64,
    pub norm_r: f64,
    pub b_n: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantBoundTerms {
    pub main: f64,
    pub translation: f64,
    pub mixing: f64,
    pub smoothing: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantBoundReport {
    pub inputs: QuantBoundInputs,
    pub c: f64,
    pub density_sup: f64,
    pub terms: QuantBoundTerms,
    pub total: f64,
    /// Standard error of the total propagated from `dk_mu_se` and `i_rho_se`.
    pub uncertainty: f64,
}

/// `(4c+1)·d_K + 2T·I(ρ)/b_n + 2δ_ρ‖r‖·ln T + 2‖f_Z‖_∞c²/T`.
pub fn quant_eagleson_bound(
    inputs: QuantBoundInputs,
    law: &ReferenceLaw,
    c: &EsseenConstant,
) -> Result<QuantBoundReport> {
    let QuantBoundInputs {
        dk_mu,
        dk_mu_se,
        i_rho,
        i_rho_se,
        delta_rho,
        norm_r,
        b_n,
        t,
        ..
    } = inputs;
    if !(t >= 1.0) {
        return Err(Error::Precondition(format!("T = {t} must be at least 1")));
    }
    if !(b_n > 0.0) {
        return Err(Error::InvalidNormalizer(b_n));
    }
    let nonneg = [dk_mu, dk_mu_se, i_rho, i_rho_se, delta_rho, norm_r];
    if nonneg.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::Precondition(format!(
            "bound inputs must be nonnegative: {nonneg:?}"
        )));
    }
    let k = 4.0 * c.c + 1.0;
    let terms = QuantBoundTerms {
        main: k * dk_mu,
        translation: if i_rho == 0.0 {
            0.0
        } else {
            2.0 * t * i_rho / b_n
        },
        mixing: if delta_rho == 0.0 || norm_r == 0.0 {
            0.0
        } else {
            2.0 * delta_rho * norm_r * t.ln()
        },
        smoothing: 2.0 * law.density_sup * c.c * c.c / t,
    };
    let total = terms.main + terms.translation + terms.mixing + terms.smoothing;
    let trans_se = if i_rho_se == 0.0 {
        0.0
    } else {
        2.0 * t * i_rho_se / b_n
    };
    let uncertainty = (k * dk_mu_se).hypot(trans_se);
    Ok(QuantBoundReport {
        inputs,
        c: c.c,
        density_sup: law.density_sup,
        terms,
        total,
        uncertainty,
    })
}

/// `δ_ρ` and `‖r‖` after checking that the profile and the tilt use the same norm.
pub fn mixing_inputs(
    profile: &MixingProfile,
    tilt: &DensityTilt,
    rho: usize,
) -> Result<(f64, f64)> {
    let norm = profile.paired_norm(tilt)?;
    Ok((profile.value(rho)?, norm))
}

/// `3·d_K + (1 + 4‖f_Z‖_∞)·|E S_{n,ν} − E S_{n,μ}|/b_n`.
pub fn recentering_bound(
    dk_centered_by_mu: f64,
    mean_gap: f64,
    b_n: f64,
    law: &ReferenceLaw,
) -> Result<f64> {
    if !(b_n > 0.0) {
        return Err(Error::InvalidNormalizer(b_n));
    }
    if !(dk_centered_by_mu >= 0.0 && mean_gap >= 0.0) {
        return Err(Error::Precondition(
            "recentering inputs must be nonnegative".into(),
        ));
    }
    Ok(3.0 * dk_centered_by_mu + (1.0 + 4.0 * law.density_sup) * mean_gap / b_n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TSelection {
    pub t: f64,
    /// `a·T + b/T` at the selected `T`.
    pub objective: f64,
    /// The unconstrained minimizer fell outside `[1, T_max]`.
    pub clamped: bool,
    /// `a = 0`: the objective decreases without bound in `T`.
    pub unbounded: bool,
    /// `a = b = 0`.
    pub degenerate: bool,
}

/// Minimizes `a·T + b/T` over `1 ≤ T ≤ T_max`.
#[allow(non_snake_case)]
pub fn select_T(a: f64, b: f64, t_max: f64) -> Result<TSelection> {
    if !(a >= 0.0 && b >= 0.0 && t_max >= 1.0) {
        return Err(Error::Precondition(format!(
            "select_T needs a, b ≥ 0 and T_max ≥ 1 (got {a}, {b}, {t_max})"
        )));
    }
    let objective = |t: f64| a * t + if b == 0.0 { 0.0 } else { b / t };
    if a == 0.0 && b == 0.0 {
        return Ok(TSelection {
            t: 1.0,
            objective: 0.0,
            clamped: false,
            unbounded: false,
            degenerate: true,
        });
    }
    if a == 0.0 {
        return Ok(TSelection {
            t: t_max,
            objective: objective(t_max),
            clamped: true,
            unbounded: true,
            degenerate: false,
        });
    }
    let raw = (b / a).sqrt();
    let t = raw.clamp(1.0, t_max);
    Ok(TSelection {
        t,
        objective: objective(t),
        clamped: t != raw,
        unbounded: false,
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockingEntry {
    pub n: usize,
    pub a_n: usize,
    /// `c_{a_n}/b_n` with `c` replaced by its running maximum.
    pub ratio: f64,
    /// No `a ≤ n − 1` met the cap, so `a_n = 1` was used.
    pub saturated: bool,
}

/// Largest `a ≤ n − 1` with `c_a ≤ √b_n` (running-max `c`), for each `n`;
/// `b_values` is aligned with `n_list`.
pub fn blocking_schedule(
    c_values: &[f64],
    b_values: &[f64],
    n_list: &[usize],
) -> Result<Vec<BlockingEntry>> {
    if b_values.len() != n_list.len() {
        return Err(Error::InvalidInput("one b_n per n is required".into()));
    }
    let mut running = Vec::with_capacity(c_values.len());
    let mut m = f64::NEG_INFINITY;
    for &c in c_values {
        if c.is_nan() {
            return Err(Error::InvalidInput("c_k is NaN".into()));
        }
        m = m.max(c);
        running.push(m);
    }
    n_list
        .iter()
        .zip(b_values)
        .map(|(&n, &b)| {
            if n < 2 {
                return Err(Error::InvalidInput(format!(
                    "n = {n} leaves no room for a block"
                )));
            }
            if !(b > 0.0) {
                return Err(Error::InvalidNormalizer(b));
            }
            if running.len() < n {
                return Err(Error::Index {
                    index: n - 1,
                    available: running.len(),
                });
            }
            let cap = b.sqrt();
            // Running maxima are sorted, so the admissible a form a prefix.
            let count = running[..n].partition_point(|&c| c <= cap);
            let (a_n, saturated) = if count == 0 {
                (1, true)
            } else {
                (count - 1, false)
            };
            Ok(BlockingEntry {
                n,
                a_n,
                ratio: running[a_n] / b,
                saturated,
            })
        })
        .collect()
}
