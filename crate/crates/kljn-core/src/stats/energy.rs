//! Energy-distance two-sample machinery for bivariate (V, I) clouds.
//!
//! The statistic is `2 E|X - Y| - E|X - X'| - E|Y - Y'|` on coordinates
//! standardized by the pooled per-axis median absolute deviation, which keeps
//! the test usable for the infinite-variance stable families. The p-value
//! comes from a label-permutation null with add-one smoothing, so it is never
//! reported as zero.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::Rng64;
use crate::stats::mad;

/// Larger samples are subsampled to this many points per side before the
/// O(n^2) distance work; the permutation test stays exact on the subsample.
pub const MAX_POINTS_PER_SAMPLE: usize = 4096;

/// Outcome of the permutation test. `clamped` counts pairwise distances that
/// overflowed and were pinned at the largest finite double.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyTestOutcome {
    pub statistic: f64,
    pub p_value: f64,
    pub clamped: u64,
}

fn subsample(points: &[(f64, f64)], cap: usize, rng: &mut Rng64) -> Vec<(f64, f64)> {
    if points.len() <= cap {
        return points.to_vec();
    }
    let mut idx: Vec<usize> = (0..points.len()).collect();
    for k in 0..cap {
        let j = k + rng.next_index(points.len() - k);
        idx.swap(k, j);
    }
    idx[..cap].iter().map(|&k| points[k]).collect()
}

/// Per-axis MAD over the pooled points; a degenerate axis falls back to 1
/// so standardization never divides by zero.
fn mad_scales(pooled: &[(f64, f64)]) -> (f64, f64) {
    let vs: Vec<f64> = pooled.iter().map(|p| p.0).collect();
    let is: Vec<f64> = pooled.iter().map(|p| p.1).collect();
    let sv = mad(&vs);
    let si = mad(&is);
    (if sv > 0.0 { sv } else { 1.0 }, if si > 0.0 { si } else { 1.0 })
}

/// Condensed upper-triangle distance matrix of the pooled points.
/// Row `i` holds distances to `j > i` starting at `i*(2N-i-1)/2`.
fn condensed_distances(pooled: &[(f64, f64)]) -> (Vec<f64>, u64) {
    let n = pooled.len();
    let rows: Vec<(Vec<f64>, u64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (xi, yi) = pooled[i];
            let mut clamped = 0u64;
            let row = pooled[i + 1..]
                .iter()
                .map(|&(xj, yj)| {
                    let dx = xi - xj;
                    let dy = yi - yj;
                    let d = (dx * dx + dy * dy).sqrt();
                    if d.is_finite() {
                        d
                    } else {
                        clamped += 1;
                        f64::MAX
                    }
                })
                .collect();
            (row, clamped)
        })
        .collect();
    let mut dist = Vec::with_capacity(n * (n - 1) / 2);
    let mut clamped = 0;
    for (row, c) in rows {
        dist.extend_from_slice(&row);
        clamped += c;
    }
    (dist, clamped)
}

/// Energy statistic for a labeling of the pooled points (`true` = first
/// sample). `total` is the sum over all condensed distances.
fn statistic_for_labels(dist: &[f64], labels: &[bool], n: usize, m: usize, total: f64) -> f64 {
    let big = labels.len();
    // Per-row partial sums, reduced in index order for determinism.
    let partials: Vec<(f64, f64)> = (0..big - 1)
        .into_par_iter()
        .map(|i| {
            let start = i * (2 * big - i - 1) / 2;
            let li = labels[i];
            let mut sxx = 0.0;
            let mut syy = 0.0;
            for (k, &lj) in labels[i + 1..].iter().enumerate() {
                let d = dist[start + k];
                if li && lj {
                    sxx += d;
                } else if !li && !lj {
                    syy += d;
                }
            }
            (sxx, syy)
        })
        .collect();
    let (sxx, syy) = partials
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let sxy = total - sxx - syy;
    let nf = n as f64;
    let mf = m as f64;
    2.0 * sxy / (nf * mf) - sxx / (nf * (nf - 1.0) / 2.0) - syy / (mf * (mf - 1.0) / 2.0)
}

/// Energy-distance statistic between two point clouds, standardized by their
/// pooled MAD. No permutation test; used by the reference-matching attack.
/// `cap` bounds the points taken from each cloud.
pub fn energy_distance_capped(
    xs: &[(f64, f64)],
    ys: &[(f64, f64)],
    cap: usize,
    rng: &mut Rng64,
) -> Result<(f64, u64)> {
    if xs.len() < 2 || ys.len() < 2 {
        return Err(Error::TooFewSamples { required: 2, got: xs.len().min(ys.len()) });
    }
    let xs = subsample(xs, cap, rng);
    let ys = subsample(ys, cap, rng);
    let mut pooled = xs.clone();
    pooled.extend_from_slice(&ys);
    let (sv, si) = mad_scales(&pooled);
    for p in pooled.iter_mut() {
        p.0 /= sv;
        p.1 /= si;
    }
    let (dist, clamped) = condensed_distances(&pooled);
    let total: f64 = dist.iter().sum();
    let labels: Vec<bool> = (0..pooled.len()).map(|k| k < xs.len()).collect();
    Ok((statistic_for_labels(&dist, &labels, xs.len(), ys.len(), total), clamped))
}

/// Permutation test for equality of two bivariate sample distributions.
///
/// Preconditions: at least 50 points per side and at least 99 permutations.
/// p-value uses add-one smoothing: `(1 + #{perm >= observed}) / (perms + 1)`.
pub fn energy_two_sample(
    xs: &[(f64, f64)],
    ys: &[(f64, f64)],
    permutations: usize,
    rng: &mut Rng64,
) -> Result<EnergyTestOutcome> {
    if xs.len() < 50 || ys.len() < 50 {
        return Err(Error::TooFewSamples { required: 50, got: xs.len().min(ys.len()) });
    }
    if permutations < 99 {
        return Err(Error::InvalidParameter(format!(
            "at least 99 permutations required, got {permutations}"
        )));
    }
    let xs = subsample(xs, MAX_POINTS_PER_SAMPLE, rng);
    let ys = subsample(ys, MAX_POINTS_PER_SAMPLE, rng);
    let n = xs.len();
    let m = ys.len();
    let mut pooled = xs;
    pooled.extend_from_slice(&ys);
    let (sv, si) = mad_scales(&pooled);
    for p in pooled.iter_mut() {
        p.0 /= sv;
        p.1 /= si;
    }
    let (dist, clamped) = condensed_distances(&pooled);
    let total: f64 = dist.iter().sum();
    let labels: Vec<bool> = (0..pooled.len()).map(|k| k < n).collect();
    let observed = statistic_for_labels(&dist, &labels, n, m, total);

    // Per-permutation seeds are derived, so the permutations can run in
    // parallel with results identical to sequential execution.
    let perm_base = rng.next_u64();
    let exceed: u64 = (0..permutations)
        .into_par_iter()
        .map(|k| {
            let mut prng = Rng64::derive(perm_base, k as u64);
            let mut shuffled = labels.clone();
            for a in (1..shuffled.len()).rev() {
                let b = prng.next_index(a + 1);
                shuffled.swap(a, b);
            }
            let stat = statistic_for_labels(&dist, &shuffled, n, m, total);
            u64::from(stat >= observed)
        })
        .sum();
    Ok(EnergyTestOutcome {
        statistic: observed,
        p_value: (1 + exceed) as f64 / (permutations + 1) as f64,
        clamped,
    })
}

/// One-dimensional convenience wrapper: embeds values on the first axis.
pub fn energy_two_sample_1d(
    xs: &[f64],
    ys: &[f64],
    permutations: usize,
    rng: &mut Rng64,
) -> Result<EnergyTestOutcome> {
    let to_points = |v: &[f64]| v.iter().map(|&x| (x, 0.0)).collect::<Vec<_>>();
    energy_two_sample(&to_points(xs), &to_points(ys), permutations, rng)
}
