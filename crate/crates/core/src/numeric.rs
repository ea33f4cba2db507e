//! Adaptive Gauss–Kronrod quadrature, bracketing root finding, and a
//! table-driven `cos(2πx)` for the sampling hot loops.

use std::f64::consts::PI;
use std::sync::LazyLock;

use crate::error::{Error, Result};

const TRIG_BITS: u32 = 10;
const TRIG_SIZE: usize = 1 << TRIG_BITS;

static TRIG_TABLE: LazyLock<Vec<(f64, f64)>> = LazyLock::new(|| {
    (0..TRIG_SIZE)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / TRIG_SIZE as f64;
            (a.cos(), a.sin())
        })
        .collect()
});

/// `(cos 2πθ, sin 2πθ)` for the phase `θ = p / 2^64` (in turns).
#[inline]
pub fn sincos_turns(p: u64) -> (f64, f64) {
    let i = (p >> (64 - TRIG_BITS)) as usize;
    // Position inside the table cell, below 2π/1024 radians, where short
    // Taylor series are exact to rounding.
    let rest = ((p << TRIG_BITS) >> 11) as i64 as f64 * (1.0 / (1u64 << 53) as f64);
    let b = rest * (2.0 * PI / TRIG_SIZE as f64);
    let b2 = b * b;
    let cb = 1.0 - b2 * (0.5 - b2 * (1.0 / 24.0 - b2 / 720.0));
    let sb = b * (1.0 - b2 * (1.0 / 6.0 - b2 / 120.0));
    let (c, s) = TRIG_TABLE[i];
    (c * cb - s * sb, s * cb + c * sb)
}

/// `(cos 2πx, sin 2πx)`, within a few ulp of the libm values.
#[inline]
pub fn sincos_2pi(x: f64) -> (f64, f64) {
    let y = x - x.floor();
    // Tiny negative inputs round `y` up to exactly 1.
    let turns = if y >= 1.0 {
        0
    } else {
        (y * 18_446_744_073_709_551_616.0) as u64
    };
    sincos_turns(turns)
}

#[inline]
pub fn cos_2pi(x: f64) -> f64 {
    sincos_2pi(x).0
}

#[inline]
pub fn sin_2pi(x: f64) -> f64 {
    sincos_2pi(x).1
}

// 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1].
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_DEPTH: u32 = 60;

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Sum of per-panel |Kronrod − Gauss| estimates.
    pub error: f64,
    pub converged: bool,
    pub evaluations: usize,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = half * XGK[i];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Integrates `f` over `[a, b]` by recursive bisection until each panel's
/// Kronrod/Gauss discrepancy is below its share of `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Quadrature {
    if a == b {
        return Quadrature {
            value: 0.0,
            error: 0.0,
            converged: true,
            evaluations: 0,
        };
    }
    let (value, err) = gk15(&f, a, b);
    let mut out = Quadrature {
        value: 0.0,
        error: 0.0,
        converged: true,
        evaluations: 15,
    };
    refine(&f, a, b, value, err, tol, 0, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    whole: f64,
    err: f64,
    tol: f64,
    depth: u32,
    out: &mut Quadrature,
) {
    // Below ~1e-15 of the value there is nothing left to resolve in double precision.
    let floor = 1e-15 * whole.abs();
    if err <= tol.max(floor) {
        out.value += whole;
        out.error += err;
        return;
    }
    let mid = 0.5 * (a + b);
    if depth >= MAX_DEPTH || mid <= a || mid >= b {
        out.value += whole;
        out.error += err;
        out.converged = false;
        return;
    }
    let (left, el) = gk15(f, a, mid);
    let (right, er) = gk15(f, mid, b);
    out.evaluations += 30;
    refine(f, a, mid, left, el, 0.5 * tol, depth + 1, out);
    refine(f, mid, b, right, er, 0.5 * tol, depth + 1, out);
}

/// Integrates over consecutive panels `[p_0, p_1], [p_1, p_2], …` (known
/// discontinuities go into `points`), splitting `tol` by panel length.
pub fn integrate_panels<F: Fn(f64) -> f64>(f: F, points: &[f64], tol: f64) -> Quadrature {
    let total = points.last().copied().unwrap_or(0.0) - points.first().copied().unwrap_or(0.0);
    let mut out = Quadrature {
        value: 0.0,
        error: 0.0,
        converged: true,
        evaluations: 0,
    };
    for w in points.windows(2) {
        let share = if total > 0.0 {
            tol * (w[1] - w[0]) / total
        } else {
            tol
        };
        let q = integrate(&f, w[0], w[1], share);
        out.value += q.value;
        out.error += q.error;
        out.converged &= q.converged;
        out.evaluations += q.evaluations;
    }
    out
}

/// Bisection for a sign change of `f` on `[lo, hi]`, to absolute width `xtol`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, xtol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Numerical(format!(
            "no sign change on [{lo}, {hi}]: f = {flo}, {fhi}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= xtol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
