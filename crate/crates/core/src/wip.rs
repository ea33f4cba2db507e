//! Path processes `𝓢_n(t)/b_n`, finite-dimensional comparisons and the
//! tightness diagnostics used by the invariance-principle transfer.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{
    DensityTilt, MeasureTag, ObservableSequence, ProcessModel, TrajectoryBatch, TrajectoryStates,
};
use crate::spectral::phase_mean;
use crate::sums::CheckpointedSums;

/// `count` paths sampled on `grid`, row-major `count × grid.len() × dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBatch {
    pub values: Vec<f64>,
    pub count: usize,
    pub grid: Vec<f64>,
    pub dim: usize,
    pub n: usize,
    pub b_n: f64,
    pub measure: MeasureTag,
    pub master_seed: u64,
}

impl PathBatch {
    /// Value of path `i` at grid index `k`.
    pub fn at(&self, i: usize, k: usize) -> &[f64] {
        let o = (i * self.grid.len() + k) * self.dim;
        &self.values[o..o + self.dim]
    }

    /// Coordinate `c` of path `i` along the grid.
    pub fn coordinate(&self, i: usize, c: usize) -> Vec<f64> {
        (0..self.grid.len()).map(|k| self.at(i, k)[c]).collect()
    }

    fn grid_index(&self, s: f64) -> Result<usize> {
        self.grid
            .iter()
            .position(|&g| (g - s).abs() <= 1e-12 * s.abs().max(1.0))
            .ok_or_else(|| Error::InvalidInput(format!("time {s} is not on the path grid")))
    }

    /// Per grid time and coordinate, the empirical quantiles at `probs`
    /// (linear interpolation between order statistics).
    pub fn quantile_fan(&self, probs: &[f64]) -> Result<Vec<FanRow>> {
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidInput(
                "quantile levels must lie in [0, 1]".into(),
            ));
        }
        let mut rows = Vec::with_capacity(self.grid.len() * self.dim);
        for (k, &t) in self.grid.iter().enumerate() {
            for c in 0..self.dim {
                let mut col: Vec<f64> = (0..self.count).map(|i| self.at(i, k)[c]).collect();
                col.sort_by(f64::total_cmp);
                let quantiles = probs
                    .iter()
                    .map(|&p| interpolated_quantile(&col, p))
                    .collect();
                rows.push(FanRow {
                    t,
                    coordinate: c,
                    quantiles,
                });
            }
        }
        Ok(rows)
    }
}

fn interpolated_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FanRow {
    pub t: f64,
    pub coordinate: usize,
    pub quantiles: Vec<f64>,
}

/// `⌊n t⌋`, robust to `t = k/n` rounding just below `k/n`.
fn floor_index(n: usize, t: f64) -> usize {
    let x = n as f64 * t;
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        x.floor() as usize
    }
}

fn check_grid(grid: &[f64], b_n: f64) -> Result<()> {
    if !(b_n > 0.0 && b_n.is_finite()) {
        return Err(Error::InvalidNormalizer(b_n));
    }
    if grid.is_empty() || grid.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(Error::InvalidInput(
            "time grid must be nonempty and nonnegative".into(),
        ));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "time grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// `𝓢_n(t)/b_n = S_{⌊nt⌋}/b_n` at each grid time, from materialized trajectories.
pub fn path_process(
    batch: &TrajectoryBatch,
    obs: &ObservableSequence,
    n: usize,
    b_n: f64,
    grid: &[f64],
) -> Result<PathBatch> {
    check_grid(grid, b_n)?;
    let idx: Vec<usize> = grid.iter().map(|&t| floor_index(n, t)).collect();
    let last = *idx.last().unwrap();
    if last > batch.length {
        return Err(Error::Index {
            index: last,
            available: batch.length,
        });
    }
    obs.check_model(&batch.model, last)?;
    let (d, len) = (obs.dim(), grid.len());
    let mut values = vec![0.0; batch.count * len * d];
    values
        .par_chunks_mut(len * d)
        .enumerate()
        .for_each(|(i, row)| {
            let mut acc = vec![0.0; d];
            let mut g = vec![0.0; d];
            let mut k = 0;
            for j in 0..=last {
                while k < len && idx[k] == j {
                    for (o, a) in row[k * d..(k + 1) * d].iter_mut().zip(&acc) {
                        *o = a / b_n;
                    }
                    k += 1;
                }
                if j == last {
                    break;
                }
                match &batch.states {
                    TrajectoryStates::Interval(s) => {
                        obs.eval_bits(j, s[i * batch.length + j], &mut g)
                    }
                    TrajectoryStates::Discrete(s) => {
                        g.copy_from_slice(obs.state_row(j, s[i * batch.length + j] as usize))
                    }
                }
                acc.iter_mut().zip(&g).for_each(|(a, x)| *a += x);
            }
        });
    Ok(PathBatch {
        values,
        count: batch.count,
        grid: grid.to_vec(),
        dim: d,
        n,
        b_n,
        measure: batch.measure,
        master_seed: batch.master_seed,
    })
}

/// Same as [`path_process`] from streamed sums; every `⌊n t⌋ > 0` must be a checkpoint.
pub fn path_from_checkpoints(
    sums: &CheckpointedSums,
    n: usize,
    b_n: f64,
    grid: &[f64],
) -> Result<PathBatch> {
    check_grid(grid, b_n)?;
    let idx: Vec<usize> = grid.iter().map(|&t| floor_index(n, t)).collect();
    let (d, len) = (sums.dim, grid.len());
    for &m in &idx {
        if m > 0 && sums.checkpoints.binary_search(&m).is_err() {
            return Err(Error::InvalidInput(format!(
                "partial sum S_{m} was not recorded"
            )));
        }
    }
    let mut values = vec![0.0; sums.count * len * d];
    values
        .par_chunks_mut(len * d)
        .enumerate()
        .for_each(|(i, row)| {
            for (k, &m) in idx.iter().enumerate() {
                if m == 0 {
                    continue;
                }
                let s = sums.value(i, m).expect("checked above");
                for (o, a) in row[k * d..(k + 1) * d].iter_mut().zip(s) {
                    *o = a / b_n;
                }
            }
        });
    Ok(PathBatch {
        values,
        count: sums.count,
        grid: grid.to_vec(),
        dim: d,
        n,
        b_n,
        measure: sums.measure,
        master_seed: sums.master_seed,
    })
}

/// Times `s_1 < … < s_m` of the vector `V_n = (𝓢(s_1), …, 𝓢(s_m))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FddVector {
    pub times: Vec<f64>,
}

impl FddVector {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidInput(
                "an fdd vector needs at least one time".into(),
            ));
        }
        if times.iter().any(|t| !(*t > 0.0)) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "fdd times must be positive and increasing".into(),
            ));
        }
        Ok(Self { times })
    }

    /// Rows `(𝓢(s_1), …, 𝓢(s_m))` of length `dim·m`.
    pub fn stack(&self, paths: &PathBatch) -> Result<Vec<f64>> {
        let ks = self
            .times
            .iter()
            .map(|&s| paths.grid_index(s))
            .collect::<Result<Vec<_>>>()?;
        Ok((0..paths.count)
            .flat_map(|i| ks.iter().flat_map(move |&k| paths.at(i, k).iter().copied()))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FddDistance {
    pub distance: f64,
    /// Frequency attaining the maximum.
    pub argmax: Vec<f64>,
    /// `4/√N_μ + 4/√N_ν`.
    pub radius: f64,
    pub per_frequency: Vec<f64>,
}

/// `max_t |φ̂_μ(t) − φ̂_ν(t)|` over `t_grid` for the fdd vector.
pub fn fdd_distance(
    mu: &PathBatch,
    nu: &PathBatch,
    fdd: &FddVector,
    t_grid: &[Vec<f64>],
) -> Result<FddDistance> {
    if mu.n != nu.n || mu.b_n != nu.b_n || mu.dim != nu.dim || mu.grid != nu.grid {
        return Err(Error::InvalidPairing(
            "path batches differ in n, b_n, dimension or grid".into(),
        ));
    }
    let width = mu.dim * fdd.times.len();
    if t_grid.is_empty() || t_grid.iter().any(|t| t.len() != width) {
        return Err(Error::InvalidInput(format!(
            "frequencies must have length {width}"
        )));
    }
    let (a, b) = (fdd.stack(mu)?, fdd.stack(nu)?);
    let per_frequency: Vec<f64> = t_grid
        .iter()
        .map(|t| (phase_mean(&a, width, t) - phase_mean(&b, width, t)).norm())
        .collect();
    let (k, distance) =
        per_frequency
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (k, v)| {
                if v > best.1 {
                    (k, v)
                } else {
                    best
                }
            });
    Ok(FddDistance {
        distance,
        argmax: t_grid[k].clone(),
        radius: 4.0 / (mu.count as f64).sqrt() + 4.0 / (nu.count as f64).sqrt(),
        per_frequency,
    })
}

/// Càdlàg modulus `w′_δ` of a path sampled on `grid` (piecewise constant,
/// right-continuous): the minimum over partitions `0 = t_0 < … < t_r = t_max`
/// of grid times with all gaps `> δ` of the largest oscillation over the
/// half-open blocks `[t_{i−1}, t_i)`. Exact, by dynamic programming over
/// the last partition point.
pub fn cadlag_modulus(grid: &[f64], path: &[f64], delta: f64) -> f64 {
    let l = grid.len();
    let mut best = vec![f64::INFINITY; l];
    best[0] = 0.0;
    for j in 1..l {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in (0..j).rev() {
            lo = lo.min(path[i]);
            hi = hi.max(path[i]);
            if grid[j] - grid[i] > delta && best[i].is_finite() {
                best[j] = best[j].min(best[i].max(hi - lo));
            }
        }
    }
    best[l - 1]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightnessEstimate {
    pub eps: f64,
    pub delta: f64,
    /// Fraction of paths (any coordinate) with `w′_δ ≥ ε`.
    pub exceedance: f64,
    pub standard_error: f64,
    pub count: usize,
    #[serde(skip)]
    pub moduli: Vec<f64>,
}

/// Exceedance frequency of `w′_δ ≥ ε`, taking the largest modulus over coordinates.
pub fn tightness_diagnostic(paths: &PathBatch, eps: f64, delta: f64) -> Result<TightnessEstimate> {
    let t_max = *paths.grid.last().unwrap();
    if !(eps > 0.0) || !(delta > 0.0 && delta < t_max) || paths.grid[0] != 0.0 {
        return Err(Error::Precondition(format!(
            "need eps > 0, 0 < delta < t_max and a grid starting at 0 (eps {eps}, delta {delta})"
        )));
    }
    let spacing = paths
        .grid
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max);
    if delta < 3.0 * spacing {
        return Err(Error::Resolution(format!(
            "delta {delta} spans fewer than 3 grid steps of {spacing}"
        )));
    }
    let moduli: Vec<f64> = (0..paths.count)
        .into_par_iter()
        .map(|i| {
            (0..paths.dim)
                .map(|c| cadlag_modulus(&paths.grid, &paths.coordinate(i, c), delta))
                .fold(0.0, f64::max)
        })
        .collect();
    let hits = moduli.iter().filter(|&&w| w >= eps).count();
    let p = hits as f64 / paths.count as f64;
    Ok(TightnessEstimate {
        eps,
        delta,
        exceedance: p,
        standard_error: (p * (1.0 - p) / paths.count as f64).sqrt(),
        count: paths.count,
        moduli,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransferRow {
    pub c: f64,
    /// `η_C = μ(|r|·1{|r| > C})`.
    pub eta: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightnessTransfer {
    pub exceedance_mu: f64,
    pub rows: Vec<TransferRow>,
    pub best: TransferRow,
}

/// `η_C + C·exceedance_μ` over `c_grid`, with the minimizing `C`.
pub fn nu_tightness_transfer(
    exceedance_mu: f64,
    tilt: &DensityTilt,
    model: &ProcessModel,
    c_grid: &[f64],
) -> Result<TightnessTransfer> {
    if !(0.0..=1.0).contains(&exceedance_mu) {
        return Err(Error::InvalidInput(format!(
            "exceedance {exceedance_mu} is not a probability"
        )));
    }
    if c_grid.is_empty() || c_grid.iter().any(|c| !(*c > 0.0)) {
        return Err(Error::Precondition(
            "truncation levels must be positive".into(),
        ));
    }
    let rows = c_grid
        .iter()
        .map(|&c| {
            let eta = tilt.tail_mass(c, model)?;
            Ok(TransferRow {
                c,
                eta,
                bound: eta + c * exceedance_mu,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = *rows
        .iter()
        .min_by(|a, b| a.bound.total_cmp(&b.bound))
        .unwrap();
    Ok(TightnessTransfer {
        exceedance_mu,
        rows,
        best,
    })
}

/// Grid `{0, 1/k, …, 1}`.
pub fn uniform_grid(k: usize) -> Vec<f64> {
    (0..=k).map(|i| i as f64 / k as f64).collect()
}
