use alloc::vec::Vec;

use libm::{exp, pow, sqrt};

use super::{check_grid, DensityEstimate, Estimator};
use crate::special::INV_SQRT_2PI;
use crate::stats::{quantile_sorted, Running};
use crate::{Error, Result};

/// A Gaussian-kernel estimate with its bandwidth and the bias allowance
/// `0.5·bw²·max|f̂″|`.
#[derive(Debug, Clone, PartialEq)]
pub struct KdeEstimate {
    pub estimate: DensityEstimate,
    pub bandwidth: f64,
    pub bias_allowance: f64,
}

/// Silverman's rule `0.9·min(sd, IQR/1.34)·n^{−1/5}` on sorted data.
pub fn silverman_bandwidth(sorted: &[f64]) -> f64 {
    let sd = sqrt(sorted.iter().copied().collect::<Running>().variance());
    let iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * pow(sorted.len() as f64, -0.2)
}

/// Gaussian KDE on `grid`. Kernel contributions beyond 9 bandwidths are
/// dropped (relative weight below 3e−18).
pub fn kde(samples: &[f64], grid: &[f64]) -> Result<KdeEstimate> {
    check_grid(grid)?;
    if samples.len() < 2 {
        return Err(Error::EmptySample);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let bw = silverman_bandwidth(&sorted);
    if !(bw > 0.0) {
        return Err(Error::invalid("samples", "zero spread"));
    }
    let n = sorted.len() as f64;
    let reach = 9.0 * bw;
    let mut estimate = Vec::with_capacity(grid.len());
    let mut se = Vec::with_capacity(grid.len());
    for &x in grid {
        let lo = sorted.partition_point(|&s| s < x - reach);
        let hi = sorted.partition_point(|&s| s <= x + reach);
        let (mut s1, mut s2) = (0.0, 0.0);
        for &s in &sorted[lo..hi] {
            let z = (x - s) / bw;
            let k = INV_SQRT_2PI / bw * exp(-0.5 * z * z);
            s1 += k;
            s2 += k * k;
        }
        let mean = s1 / n;
        estimate.push(mean);
        se.push(sqrt(((s2 / n - mean * mean) / (n - 1.0)).max(0.0)));
    }
    let mut curvature: f64 = 0.0;
    for i in 1..grid.len().saturating_sub(1) {
        let (h0, h1) = (grid[i] - grid[i - 1], grid[i + 1] - grid[i]);
        let d2 = 2.0 * (h0 * estimate[i + 1] - (h0 + h1) * estimate[i] + h1 * estimate[i - 1]) / (h0 * h1 * (h0 + h1));
        curvature = curvature.max(d2.abs());
    }
    Ok(KdeEstimate {
        estimate: DensityEstimate {
            axes: alloc::vec![grid.to_vec()],
            estimate,
            se,
            n: sorted.len() as u64,
            rejected: 0,
            estimator: Estimator::Kde,
        },
        bandwidth: bw,
        bias_allowance: 0.5 * bw * bw * curvature,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{fill_normal, substream};
    use crate::special::normal_pdf;

    #[test]
    fn kde_of_normal_sample() {
        let mut x = alloc::vec![0.0; 100_000];
        fill_normal(&mut substream(1, 0), &mut x);
        let grid = crate::density::default_grid(1.0);
        let k = kde(&x, &grid).unwrap();
        assert!((k.bandwidth - 0.9 * pow(1e5, -0.2)).abs() < 0.01);
        for ((&g, &v), &se) in grid.iter().zip(&k.estimate.estimate).zip(&k.estimate.se) {
            assert!((v - normal_pdf(g, 1.0)).abs() <= 5.0 * se + k.bias_allowance + 1e-6, "{g}");
        }
    }
}
