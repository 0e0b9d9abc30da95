//! Rayon drivers for the chunked samplers of `chaoslab-core`.
//!
//! Each chunk draws from its own substream and chunk results are reduced in
//! chunk order, so every result is bit-identical to the sequential core
//! routine and independent of the thread count.

use chaoslab_core::chaos2::{negative_moment_chunk, Spectrum, WeightSource};
use chaoslab_core::density::{
    DensityEstimate, Estimator, Fmla3Problem, GridAccumulator, MultiProblem, SourceDensity, MIN_SAMPLES,
};
use chaoslab_core::engine::ChaosExpansion;
use chaoslab_core::ou::{
    exact_rate_slope, fit_rate, horizon_seed, least_squares_estimate, limit_variance, rate_point, rate_setup,
    simulate_ou, OuConfig, RateReport,
};
use chaoslab_core::rng::{chunks, CHUNK};
use chaoslab_core::stats::mean_se;
use chaoslab_core::stein::{MsAccumulator, MsProblem, MsReport, TestFunction};
use chaoslab_core::{Error, Result};
use rayon::prelude::*;

use crate::error::{LabError, LabResult};

/// Runs `f` on a pool of `threads` workers; `0` uses rayon's default.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> LabResult<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| LabError::usage(format!("threads: {e}")))?;
    Ok(pool.install(f))
}

/// `f(stream, len)` over the chunks of `n`, in chunk order.
pub fn map_chunks<T: Send>(n: usize, f: impl Fn(u64, usize) -> T + Sync) -> Vec<T> {
    let c: Vec<(u64, usize)> = chunks(n, CHUNK).collect();
    c.par_iter().map(|&(s, l)| f(s, l)).collect()
}

fn check_n(n: usize) -> Result<()> {
    if (n as u64) < MIN_SAMPLES {
        return Err(Error::InvalidArgument { name: "n", reason: format!("need at least {MIN_SAMPLES} samples") });
    }
    Ok(())
}

/// Parallel [`SourceDensity::run`].
pub fn source_density<S: WeightSource + Sync>(
    sd: &SourceDensity<'_, S>,
    n: usize,
    seed: u64,
) -> Result<Vec<DensityEstimate>> {
    check_n(n)?;
    let parts = map_chunks(n, |s, l| sd.chunk(seed, s, l));
    let mut accs = sd.empty();
    for part in &parts {
        for (a, b) in accs.iter_mut().zip(part) {
            a.merge(b);
        }
    }
    Ok(sd.finish(&accs))
}

/// Parallel general-formula density for a centered chaos expansion.
pub fn general_density(f: &ChaosExpansion, grid: &[f64], n: usize, seed: u64) -> Result<DensityEstimate> {
    check_n(n)?;
    let problem = Fmla3Problem::new(f)?;
    let axes = vec![grid.to_vec()];
    let parts = map_chunks(n, |s, l| problem.chunk(&axes, seed, s, l));
    let mut acc = GridAccumulator::new(&axes);
    for p in parts {
        acc.merge(&p?);
    }
    acc.finish(&axes, 1.0, Estimator::Fmla3).check_rejections()
}

/// Parallel multivariate density; `sequence` and `sign` as in the core
/// estimator.
pub fn multivariate(
    fs: &[ChaosExpansion],
    beta: &[usize],
    axes: &[Vec<f64>],
    n: usize,
    seed: u64,
) -> Result<DensityEstimate> {
    check_n(n)?;
    let d = fs.len();
    if axes.len() != d {
        return Err(Error::ShapeMismatch(format!("{} grid axes for {d} components", axes.len())));
    }
    let sequence: Vec<usize> = (1..=d).chain(beta.iter().copied()).collect();
    let problem = MultiProblem::new(fs, &sequence)?;
    let parts = map_chunks(n, |s, l| problem.chunk(axes, seed, s, l));
    let mut acc = GridAccumulator::new(axes);
    for p in parts {
        acc.merge(&p?);
    }
    let sign = if beta.len() % 2 == 0 { 1.0 } else { -1.0 };
    acc.finish(axes, sign, Estimator::Multivariate(beta.to_vec())).check_rejections()
}

/// Parallel Malliavin-Stein identity check.
pub fn ms_check(f: &ChaosExpansion, h: TestFunction, n: usize, seed: u64) -> Result<MsReport> {
    if n < 2 {
        return Err(Error::EmptySample);
    }
    let problem = MsProblem::new(f, h)?;
    let parts = map_chunks(n, |s, l| problem.chunk(seed, s, l));
    let mut acc = MsAccumulator::default();
    for p in parts {
        acc.merge(&p?);
    }
    Ok(acc.finish(problem.sigma2()))
}

/// Monte Carlo `E[(Σλᵢ²Xᵢ²)^{−α}]` with its standard error.
pub fn negative_moment_mc(s: &Spectrum, alpha: f64, n: usize, seed: u64) -> Result<(f64, f64)> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidArgument { name: "alpha", reason: format!("must be positive, got {alpha}") });
    }
    if n < 2 {
        return Err(Error::EmptySample);
    }
    let parts = map_chunks(n, |st, l| negative_moment_chunk(s, alpha, seed, st, l));
    let (mut s1, mut s2) = (0.0, 0.0);
    for (a, b) in parts {
        s1 += a;
        s2 += b;
    }
    Ok(mean_se(s1, s2, n as u64))
}

/// `θ̂` for paths with seeds `seed, seed + 1, …`.
pub fn lse_draws(theta: f64, gamma: f64, t: f64, dt: f64, paths: usize, seed: u64) -> Result<Vec<f64>> {
    (0..paths)
        .into_par_iter()
        .map(|i| {
            let cfg = OuConfig { theta, gamma, t, dt, seed: seed.wrapping_add(i as u64) };
            least_squares_estimate(&simulate_ou(&cfg)?)
        })
        .collect()
}

/// Parallel [`chaoslab_core::ou::rate_experiment`]; horizons run in turn,
/// chunks within a horizon in parallel.
pub fn rate_experiment(
    theta: f64,
    gamma: f64,
    t_list: &[f64],
    n: usize,
    seed: u64,
    grid: Option<&[f64]>,
) -> Result<RateReport> {
    let sigma2 = limit_variance(theta, gamma);
    let mut points = Vec::with_capacity(t_list.len());
    for (i, &t) in t_list.iter().enumerate() {
        let setup = rate_setup(theta, gamma, t, grid)?;
        let sd = SourceDensity::new(&setup.sampler, &setup.grid, &[0])?;
        let est = source_density(&sd, n, horizon_seed(seed, i))?;
        points.push(rate_point(&setup, &est[0], sigma2));
    }
    let fit = fit_rate(&points)?;
    let (exact_values, exact_fit) = exact_rate_slope(theta, gamma, t_list)?;
    Ok(RateReport { theta, gamma, sigma2, points, fit, exact_values, exact_fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chaoslab_core::chaos2::Sampler;
    use chaoslab_core::density::{default_grid, malliavin_density_general};
    use chaoslab_core::stein::ms_identity_check;

    #[test]
    fn parallel_matches_sequential_bitwise() {
        let s = Spectrum::new(vec![1.0, -0.6, 0.3]).unwrap();
        let sampler = Sampler::new(&s, 3).unwrap();
        let grid = default_grid(1.5);
        let sd = SourceDensity::new(&sampler, &grid, &[0, 1]).unwrap();
        let n = 3 * CHUNK + 17;
        let seq = sd.run(n, 9).unwrap();
        for threads in [1, 3] {
            let par = with_threads(threads, || source_density(&sd, n, 9)).unwrap().unwrap();
            assert_eq!(par, seq);
        }
        let f = ChaosExpansion::second_chaos(s.eigenvalues());
        let a = malliavin_density_general(&f, &grid, 2 * CHUNK + 5, 2).unwrap();
        let b = with_threads(2, || general_density(&f, &grid, 2 * CHUNK + 5, 2)).unwrap().unwrap();
        assert_eq!(a, b);
        let h = TestFunction::Polynomial(vec![0.0, 0.0, 0.0, 1.0]);
        let a = ms_identity_check(&f, h.clone(), 2 * CHUNK + 5, 3).unwrap();
        let b = with_threads(2, || ms_check(&f, h, 2 * CHUNK + 5, 3)).unwrap().unwrap();
        assert_eq!(a, b);
        let a = chaoslab_core::chaos2::negative_moment_mc(&s, 0.5, 40_000, 1).unwrap();
        let b = with_threads(2, || negative_moment_mc(&s, 0.5, 40_000, 1)).unwrap().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn multivariate_matches_core() {
        let fs = [ChaosExpansion::first_chaos(&[1.0, 0.0]), ChaosExpansion::first_chaos(&[0.0, 1.0])];
        let axes = vec![vec![-1.0, 0.0, 1.0], vec![-0.5, 0.5]];
        let a = chaoslab_core::density::multivariate_density(&fs, &[], &axes, 20_000, 5).unwrap();
        let b = with_threads(2, || multivariate(&fs, &[], &axes, 20_000, 5)).unwrap().unwrap();
        assert_eq!(a, b);
    }
}
