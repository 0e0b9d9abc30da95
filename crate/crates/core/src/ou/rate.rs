//! Empirical `T^{−1/2}` rate of the density distance between `F_T` and its
//! normal limit.

use alloc::vec::Vec;

use libm::{ceil, sqrt};

use super::spectrum::{check_params, truncated_spectrum, Truncation};
use crate::chaos2::Sampler;
use crate::density::{default_grid, uniform_distance, DensityEstimate, SourceDensity};
use crate::special::normal_pdf;
use crate::stats::{loglog_fit, LineFit};
use crate::{Error, Result};

/// Relative tail mass dropped when truncating the spectrum for sampling.
pub const RATE_TRUNCATION: f64 = 1e-6;

/// One horizon of the rate experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub t: f64,
    /// Eigenvalues kept.
    pub m: usize,
    pub sigma2_t: f64,
    pub n: u64,
    pub sup_gap: f64,
    pub argmax: f64,
    pub max_se: f64,
    pub se_at_argmax: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    /// Distances decrease in `T`, with at most one inversion inside the
    /// combined error bars.
    pub monotone_ok: bool,
}

/// Sampler and grid for one horizon.
#[derive(Debug, Clone)]
pub struct RateSetup {
    pub t: f64,
    pub truncation: Truncation,
    pub sampler: Sampler,
    pub grid: Vec<f64>,
}

/// Limit variance `γ⁴/(2θ)`.
pub fn limit_variance(theta: f64, gamma: f64) -> f64 {
    let g2 = gamma * gamma;
    g2 * g2 / (2.0 * theta)
}

pub fn rate_setup(theta: f64, gamma: f64, t: f64, grid: Option<&[f64]>) -> Result<RateSetup> {
    let truncation = truncated_spectrum(theta, gamma, t, RATE_TRUNCATION)?;
    let sampler = Sampler::new(&truncation.spectrum, 0)?;
    let grid = match grid {
        Some(g) => g.to_vec(),
        None => default_grid(sqrt(limit_variance(theta, gamma))),
    };
    Ok(RateSetup { t, truncation, sampler, grid })
}

/// Distance of a finished estimate to the normal limit density.
pub fn rate_point(setup: &RateSetup, est: &DensityEstimate, sigma2: f64) -> RatePoint {
    let sigma = sqrt(sigma2);
    let d = uniform_distance(est, |x| normal_pdf(x, sigma));
    let i = est.grid().iter().position(|&x| x == d.argmax).unwrap_or(0);
    RatePoint {
        t: setup.t,
        m: setup.truncation.count,
        sigma2_t: setup.truncation.exact,
        n: est.n,
        sup_gap: d.sup_gap,
        argmax: d.argmax,
        max_se: est.se.iter().copied().fold(0.0, f64::max),
        se_at_argmax: est.se[i],
    }
}

fn check_t_list(t_list: &[f64]) -> Result<()> {
    if t_list.len() < 4 {
        return Err(Error::invalid("T_list", "need at least 4 horizons"));
    }
    if t_list.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("T_list", "must be strictly increasing"));
    }
    Ok(())
}

/// Log-log regression of the sup-distance on `T`. Fails as inconclusive
/// when the largest standard error exceeds half the smallest distance.
pub fn fit_rate(points: &[RatePoint]) -> Result<RateFit> {
    let ts: Vec<f64> = points.iter().map(|p| p.t).collect();
    check_t_list(&ts)?;
    let max_se = points.iter().map(|p| p.max_se).fold(0.0, f64::max);
    let min_distance = points.iter().map(|p| p.sup_gap).fold(f64::INFINITY, f64::min);
    if max_se > 0.5 * min_distance {
        let n = points.iter().map(|p| p.n).max().unwrap_or(1) as f64;
        let ratio = 2.0 * max_se / min_distance;
        let suggested_n = ceil(1.5 * n * ratio * ratio) as u64;
        return Err(Error::InconclusiveRate { max_se, min_distance, suggested_n });
    }
    let d: Vec<f64> = points.iter().map(|p| p.sup_gap).collect();
    let LineFit { slope, intercept, slope_se } = loglog_fit(&ts, &d);
    let mut inversions = 0;
    let mut within = true;
    for w in points.windows(2) {
        if w[1].sup_gap >= w[0].sup_gap {
            inversions += 1;
            let bar = 2.0 * sqrt(w[0].se_at_argmax * w[0].se_at_argmax + w[1].se_at_argmax * w[1].se_at_argmax);
            within &= w[1].sup_gap - w[0].sup_gap <= bar;
        }
    }
    Ok(RateFit { slope, intercept, slope_se, monotone_ok: inversions <= 1 && within })
}

/// `√(48Σλ⁴) = √(E[F_T⁴] − 3E[F_T²]²)` per horizon and its log-log fit.
pub fn exact_rate_slope(theta: f64, gamma: f64, t_list: &[f64]) -> Result<(Vec<f64>, LineFit)> {
    check_params(theta, gamma, 1.0)?;
    check_t_list(t_list)?;
    let mut values = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let tr = truncated_spectrum(theta, gamma, t, RATE_TRUNCATION)?;
        values.push(sqrt(48.0 * tr.spectrum.power_sum(4)));
    }
    let fit = loglog_fit(t_list, &values);
    Ok((values, fit))
}

/// Full report of the rate experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub theta: f64,
    pub gamma: f64,
    pub sigma2: f64,
    pub points: Vec<RatePoint>,
    pub fit: RateFit,
    pub exact_values: Vec<f64>,
    pub exact_fit: LineFit,
}

/// Seed used for the `i`-th horizon.
pub fn horizon_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add(i as u64)
}

/// Sequential rate experiment. `grid` defaults to 241 points on `±6σ`.
pub fn rate_experiment(
    theta: f64,
    gamma: f64,
    t_list: &[f64],
    n: usize,
    seed: u64,
    grid: Option<&[f64]>,
) -> Result<RateReport> {
    check_params(theta, gamma, 1.0)?;
    check_t_list(t_list)?;
    let sigma2 = limit_variance(theta, gamma);
    let mut points = Vec::with_capacity(t_list.len());
    for (i, &t) in t_list.iter().enumerate() {
        let setup = rate_setup(theta, gamma, t, grid)?;
        let est = SourceDensity::new(&setup.sampler, &setup.grid, &[0])?.run(n, horizon_seed(seed, i))?;
        points.push(rate_point(&setup, &est[0], sigma2));
    }
    let fit = fit_rate(&points)?;
    let (exact_values, exact_fit) = exact_rate_slope(theta, gamma, t_list)?;
    Ok(RateReport { theta, gamma, sigma2, points, fit, exact_values, exact_fit })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(t: f64, d: f64, se: f64) -> RatePoint {
        RatePoint { t, m: 1, sigma2_t: 0.5, n: 1000, sup_gap: d, argmax: 0.0, max_se: se, se_at_argmax: se }
    }

    #[test]
    fn fit_recovers_a_power_law() {
        let pts: Vec<RatePoint> = [5.0, 10.0, 20.0, 40.0].iter().map(|&t| point(t, 0.3 / sqrt(t), 1e-4)).collect();
        let f = fit_rate(&pts).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!(f.monotone_ok);
    }

    #[test]
    fn noisy_points_are_inconclusive() {
        let pts: Vec<RatePoint> = [5.0, 10.0, 20.0, 40.0].iter().map(|&t| point(t, 0.01 / sqrt(t), 0.01)).collect();
        match fit_rate(&pts) {
            Err(Error::InconclusiveRate { suggested_n, .. }) => assert!(suggested_n > 1000),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn inversions_are_counted() {
        let mut pts: Vec<RatePoint> = [5.0, 10.0, 20.0, 40.0].iter().map(|&t| point(t, 0.3 / sqrt(t), 1e-3)).collect();
        pts[2].sup_gap = pts[1].sup_gap + 1e-4;
        assert!(fit_rate(&pts).unwrap().monotone_ok);
        pts[2].sup_gap = pts[1].sup_gap + 0.05;
        assert!(!fit_rate(&pts).unwrap().monotone_ok);
        assert!(fit_rate(&pts[..3]).is_err());
    }

    #[test]
    fn exact_cumulant_decays() {
        let (v, fit) = exact_rate_slope(1.0, 1.0, &[5.0, 10.0, 20.0, 40.0]).unwrap();
        assert!(v.windows(2).all(|w| w[1] < w[0]));
        assert!(fit.slope < -0.4 && fit.slope > -0.6, "{}", fit.slope);
    }

    #[test]
    fn small_experiment_runs() {
        let rep = rate_experiment(1.0, 1.0, &[1.0, 2.0, 4.0, 8.0], 20_000, 7, None);
        match rep {
            Ok(r) => assert_eq!(r.points.len(), 4),
            Err(Error::InconclusiveRate { .. }) => {}
            Err(e) => panic!("{e}"),
        }
    }
}
