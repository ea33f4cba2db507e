use serde::Serialize;

use crate::error::{Error, Result};

/// Sequence of expanding maps `x ↦ k_j·x mod 1` on the unit interval,
/// composed as `T_n^m = T_{n+m-1} ∘ … ∘ T_n`, all preserving Lebesgue measure.
///
/// States are 64-bit fixed-point fractions `x = X / 2^64`. Iterating in plain
/// `f64` would drain the mantissa (a doubling map hits 0 after 53 steps), so
/// each step instead shifts in a fresh uniform base-`k` digit: writing
/// `x = (X + u) / 2^64` with an unresolved uniform tail `u`, the next state is
/// `(k·X + ⌊k·u⌋) mod 2^64` and the new tail `frac(k·u)` is again uniform.
/// This simulates the infinite-precision trajectory of a Lebesgue-typical
/// point exactly, one digit at a time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequentialExpandingMap {
    slopes: Vec<u32>,
    periodic: bool,
}

impl SequentialExpandingMap {
    pub fn new(slopes: Vec<u32>, periodic: bool) -> Result<Self> {
        if slopes.is_empty() {
            return Err(Error::InvalidModel("slope list is empty".into()));
        }
        if let Some((j, k)) = slopes.iter().enumerate().find(|(_, &k)| k < 2) {
            return Err(Error::InvalidModel(format!("slope k_{j} = {k} is below 2")));
        }
        Ok(Self { slopes, periodic })
    }

    /// Constant-slope (stationary) map.
    pub fn constant(k: u32) -> Result<Self> {
        Self::new(vec![k], true)
    }

    pub fn slopes(&self) -> &[u32] {
        &self.slopes
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    /// Number of maps available, `None` when periodic.
    pub fn horizon(&self) -> Option<usize> {
        (!self.periodic).then_some(self.slopes.len())
    }

    pub fn slope(&self, j: usize) -> Result<u32> {
        if self.periodic {
            Ok(self.slopes[j % self.slopes.len()])
        } else {
            self.slopes.get(j).copied().ok_or(Error::Index {
                index: j,
                available: self.slopes.len(),
            })
        }
    }

    /// Slopes `k_0, k_1, …` for paths already checked against the horizon.
    #[inline]
    pub(crate) fn cursor(&self) -> SlopeCursor<'_> {
        SlopeCursor {
            slopes: &self.slopes,
            next: 0,
        }
    }

    pub(crate) fn check_length(&self, length: usize) -> Result<()> {
        match self.horizon() {
            // A path of `length` states applies `length - 1` maps.
            Some(h) if length > h + 1 => Err(Error::Index {
                index: length - 1,
                available: h,
            }),
            _ => Ok(()),
        }
    }

    /// One step of the fixed-point map with the supplied refill digit in `0..k`.
    #[inline]
    pub fn step(state: u64, slope: u32, digit: u64) -> u64 {
        state.wrapping_mul(slope as u64).wrapping_add(digit)
    }
}

pub(crate) struct SlopeCursor<'a> {
    slopes: &'a [u32],
    next: usize,
}

impl SlopeCursor<'_> {
    #[inline]
    pub(crate) fn advance(&mut self) -> u32 {
        let k = self.slopes[self.next];
        self.next += 1;
        if self.next == self.slopes.len() {
            // Wrapping is only reached by periodic lists after the horizon check.
            self.next = 0;
        }
        k
    }
}

/// Converts a fixed-point state to a double in `[0, 1)`.
#[inline]
pub fn unit_from_bits(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
