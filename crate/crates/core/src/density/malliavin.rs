use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::{check_grid, DensityEstimate, Estimator, GridAccumulator};
use crate::chaos2::{WeightSource, WeightedSample};
use crate::engine::{apply_l_inverse, divergence_jets, ChaosExpansion, Functional, Jet, JetSpace};
use crate::rng::{chunks, substream, CHUNK};
use crate::{Error, Result};

/// Largest derivative order served by [`derivative_density`].
pub const DEFAULT_MAX_DERIVATIVE: usize = 4;

/// Smallest sample count accepted by the density estimators.
pub const MIN_SAMPLES: u64 = 100;

fn sign(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn weight_for(ws_delta: f64, gk: &[f64], k: usize) -> Result<f64> {
    if k == 0 {
        return Ok(ws_delta);
    }
    gk.get(k + 1).copied().ok_or(Error::MissingOrder { requested: k + 1, available: gk.len().saturating_sub(1) })
}

fn stream_estimate(
    samples: impl IntoIterator<Item = WeightedSample>,
    grid: &[f64],
    k: usize,
    estimator: Estimator,
) -> Result<DensityEstimate> {
    check_grid(grid)?;
    let axes = vec![grid.to_vec()];
    let mut acc = GridAccumulator::new(&axes);
    for s in samples {
        let w = weight_for(s.delta_u, &s.gk, k)?;
        let b = acc.bucket(&axes, &[s.f]);
        acc.add(b, w);
    }
    if acc.n == 0 {
        return Err(Error::EmptySample);
    }
    if acc.n < MIN_SAMPLES {
        return Err(Error::invalid("samples", alloc::format!("need at least {MIN_SAMPLES}, got {}", acc.n)));
    }
    Ok(acc.finish(&axes, sign(k), estimator))
}

/// `f̂(x) = mean(1_{F>x} δ_u)`.
pub fn malliavin_density(samples: impl IntoIterator<Item = WeightedSample>, grid: &[f64]) -> Result<DensityEstimate> {
    stream_estimate(samples, grid, 0, Estimator::Fmla1)
}

/// `f̂^{(k)}(x) = (−1)^k mean(1_{F>x} G_{k+1})`. For `k = 0` the integrand is
/// `δ_u` itself, identical to [`malliavin_density`].
pub fn derivative_density(
    samples: impl IntoIterator<Item = WeightedSample>,
    k: usize,
    grid: &[f64],
) -> Result<DensityEstimate> {
    if k > DEFAULT_MAX_DERIVATIVE {
        return Err(Error::OrderTooLarge { requested: k, max: DEFAULT_MAX_DERIVATIVE });
    }
    stream_estimate(samples, grid, k, Estimator::Derivative(k))
}

/// Density and derivative estimates from one pass over a [`WeightSource`],
/// split into substream chunks so that drivers can run them in parallel.
#[derive(Debug, Clone)]
pub struct SourceDensity<'a, S> {
    source: &'a S,
    axes: Vec<Vec<f64>>,
    orders: Vec<usize>,
}

impl<'a, S: WeightSource> SourceDensity<'a, S> {
    /// `orders` lists derivative orders; `0` is the density itself.
    pub fn new(source: &'a S, grid: &[f64], orders: &[usize]) -> Result<Self> {
        check_grid(grid)?;
        if orders.is_empty() {
            return Err(Error::invalid("orders", "need at least one order"));
        }
        for &k in orders {
            if k > DEFAULT_MAX_DERIVATIVE {
                return Err(Error::OrderTooLarge { requested: k, max: DEFAULT_MAX_DERIVATIVE });
            }
            if k > 0 && k + 1 > source.max_gk_order() {
                return Err(Error::MissingOrder { requested: k + 1, available: source.max_gk_order() });
            }
        }
        Ok(Self { source, axes: vec![grid.to_vec()], orders: orders.to_vec() })
    }

    pub fn empty(&self) -> Vec<GridAccumulator> {
        self.orders.iter().map(|_| GridAccumulator::new(&self.axes)).collect()
    }

    pub fn chunk(&self, seed: u64, stream: u64, len: usize) -> Vec<GridAccumulator> {
        let mut rng = substream(seed, stream);
        let mut x = vec![0.0; self.source.dim()];
        let mut accs = self.empty();
        for _ in 0..len {
            let w = self.source.draw(&mut rng, &mut x);
            let b = accs[0].bucket(&self.axes, &[w.f]);
            for (acc, &k) in accs.iter_mut().zip(&self.orders) {
                acc.add(b, if k == 0 { w.delta_u } else { w.gk[k + 1] });
            }
        }
        accs
    }

    pub fn finish(&self, accs: &[GridAccumulator]) -> Vec<DensityEstimate> {
        accs.iter()
            .zip(&self.orders)
            .map(|(acc, &k)| {
                let tag = if k == 0 { Estimator::Fmla1 } else { Estimator::Derivative(k) };
                acc.finish(&self.axes, sign(k), tag)
            })
            .collect()
    }

    /// Sequential run over all chunks of `n` samples.
    pub fn run(&self, n: usize, seed: u64) -> Result<Vec<DensityEstimate>> {
        if (n as u64) < MIN_SAMPLES {
            return Err(Error::invalid("n", alloc::format!("need at least {MIN_SAMPLES} samples")));
        }
        let mut accs = self.empty();
        for (stream, len) in chunks(n, CHUNK) {
            for (a, b) in accs.iter_mut().zip(self.chunk(seed, stream, len)) {
                a.merge(&b);
            }
        }
        Ok(self.finish(&accs))
    }
}

/// Per-sample quantities of the general density formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fmla3Weight {
    pub f: f64,
    /// `w̄ = ⟨DF, −DL⁻¹F⟩`.
    pub w_bar: f64,
    /// `δ(ū)` with `ū = −w̄⁻¹ DL⁻¹F`.
    pub delta: f64,
}

/// `F` and `−L⁻¹F` prepared for order-2 jet evaluation.
#[derive(Debug, Clone)]
pub struct Fmla3Problem {
    f: Functional,
    g: Functional,
    space: Arc<JetSpace>,
}

impl Fmla3Problem {
    pub fn new(f: &ChaosExpansion) -> Result<Self> {
        if f.expectation().abs() > 1e-12 {
            return Err(Error::invalid("F", "must be centered"));
        }
        let g = apply_l_inverse(f).scale(-1.0);
        Ok(Self { f: f.to_functional(), g: g.to_functional(), space: JetSpace::new(f.dim(), 2)? })
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// Jets of `F` and `−L⁻¹F` at `x`.
    pub fn jets(&self, x: &[f64]) -> Result<(Jet, Jet)> {
        Ok((self.f.jet(&self.space, x)?, self.g.jet(&self.space, x)?))
    }

    /// Fails with [`Error::SingularEvaluation`] when `w̄` hits the division guard.
    pub fn weight_at(&self, x: &[f64]) -> Result<Fmla3Weight> {
        let (fj, gj) = self.jets(x)?;
        let n = self.dim();
        let df = (0..n).map(|i| fj.partial(i)).collect::<Result<Vec<_>>>()?;
        let dg = (0..n).map(|i| gj.partial(i)).collect::<Result<Vec<_>>>()?;
        let w_bar = df.iter().zip(&dg).skip(1).fold(&df[0] * &dg[0], |acc, (a, b)| &acc + &(a * b));
        let inv = w_bar.recip()?;
        let u: Vec<Jet> = dg.iter().map(|g| g * &inv).collect();
        let delta = divergence_jets(&u, &self.space.coordinates(x))?;
        Ok(Fmla3Weight { f: fj.value(), w_bar: w_bar.value(), delta: delta.value() })
    }

    pub fn chunk(&self, axes: &[Vec<f64>], seed: u64, stream: u64, len: usize) -> Result<GridAccumulator> {
        let mut rng = substream(seed, stream);
        let mut x = vec![0.0; self.dim()];
        let mut acc = GridAccumulator::new(axes);
        for _ in 0..len {
            crate::rng::fill_normal(&mut rng, &mut x);
            match self.weight_at(&x) {
                Ok(w) => {
                    let b = acc.bucket(axes, &[w.f]);
                    acc.add(b, w.delta);
                }
                Err(Error::SingularEvaluation { .. }) => acc.reject(),
                Err(e) => return Err(e),
            }
        }
        Ok(acc)
    }
}

/// `f̂(x) = mean(1_{F>x} δ(ū))` for a centered chaos expansion, possibly of
/// mixed order. Samples whose `w̄` hits the division guard are rejected and
/// counted; more than 0.1% rejected fails the run.
pub fn malliavin_density_general(f: &ChaosExpansion, grid: &[f64], n: usize, seed: u64) -> Result<DensityEstimate> {
    check_grid(grid)?;
    if (n as u64) < MIN_SAMPLES {
        return Err(Error::invalid("n", alloc::format!("need at least {MIN_SAMPLES} samples")));
    }
    let problem = Fmla3Problem::new(f)?;
    let axes = vec![grid.to_vec()];
    let mut acc = GridAccumulator::new(&axes);
    for (stream, len) in chunks(n, CHUNK) {
        acc.merge(&problem.chunk(&axes, seed, stream, len)?);
    }
    acc.finish(&axes, 1.0, Estimator::Fmla3).check_rejections()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos2::{sample, FirstChaos, Sampler, Spectrum};
    use crate::density::default_grid;
    use crate::special::normal_pdf;

    #[test]
    fn beyond_all_samples_is_exactly_zero() {
        let s = Spectrum::new(vec![1.0, 0.5]).unwrap();
        let est = malliavin_density(sample(&s, 1000, 1, 0).unwrap(), &[-1.0, 1e6]).unwrap();
        assert_eq!(est.estimate[1], 0.0);
        assert_eq!(est.se[1], 0.0);
    }

    #[test]
    fn first_chaos_recovers_normal() {
        let src = FirstChaos::new(1.5, 3).unwrap();
        let grid = default_grid(1.5);
        let est = SourceDensity::new(&src, &grid, &[0, 1, 2]).unwrap().run(200_000, 4).unwrap();
        for (k, e) in est.iter().enumerate() {
            let mut bad = 0;
            // beyond ~4.3σ the sample is nearly empty and the sample SE collapses
            for ((&x, &v), &se) in
                e.grid().iter().zip(&e.estimate).zip(&e.se).filter(|((&x, _), _)| x.abs() <= 4.0 * 1.5)
            {
                let t = crate::hermite::normal_density_derivative(k, 1.5, x).unwrap();
                if (v - t).abs() > 3.0 * se + 1e-12 {
                    bad += 1;
                }
            }
            assert!(bad <= 8, "order {k}: {bad} points outside 3 SE");
        }
        // the integral carries noise 6σ·mean(δ_u), sd ≈ √(38/n)
        assert!((est[0].integral() - 1.0).abs() < 0.05);
        let _ = normal_pdf(0.0, 1.0);
    }

    #[test]
    fn derivative_order_zero_is_the_density() {
        let s = Spectrum::harmonic(6);
        let grid = default_grid(1.0);
        let a = malliavin_density(sample(&s, 500, 2, 2).unwrap(), &grid).unwrap();
        let b = derivative_density(sample(&s, 500, 2, 2).unwrap(), 0, &grid).unwrap();
        assert_eq!(a.estimate, b.estimate);
        assert!(matches!(
            derivative_density(sample(&s, 500, 2, 2).unwrap(), 2, &grid),
            Err(Error::MissingOrder { .. })
        ));
    }

    #[test]
    fn stream_and_source_paths_agree() {
        let s = Spectrum::harmonic(4);
        let grid = default_grid(1.0);
        let a = malliavin_density(sample(&s, 40_000, 8, 0).unwrap(), &grid).unwrap();
        let src = Sampler::new(&s, 0).unwrap();
        let b = SourceDensity::new(&src, &grid, &[0]).unwrap().run(40_000, 8).unwrap();
        // same samples, different summation grouping
        for (x, y) in a.estimate.iter().zip(&b[0].estimate) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn fmla3_matches_fmla1_on_pure_chaos() {
        let l = [1.0, 0.5, 0.25, -0.3];
        let s = Spectrum::new(l.to_vec()).unwrap();
        // the sampler orders coordinates by decreasing |λ|
        let p = Fmla3Problem::new(&ChaosExpansion::second_chaos(s.eigenvalues())).unwrap();
        let src = Sampler::new(&s, 0).unwrap();
        for ws in sample(&s, 200, 6, 0).unwrap() {
            let w3 = p.weight_at(&ws.point).unwrap();
            let w1 = src.weights_at(&ws.point);
            assert!((w3.delta - w1.delta_u).abs() < 1e-10 * (1.0 + w1.delta_u.abs()), "{w3:?} {w1:?}");
            assert!((w3.w_bar - w1.w / 2.0).abs() < 1e-10 * w1.w);
        }
    }

    #[test]
    fn fmla3_first_chaos_is_normal() {
        let f = ChaosExpansion::first_chaos(&[0.6, 0.8]);
        let grid = default_grid(1.0);
        let est = malliavin_density_general(&f, &grid, 50_000, 3).unwrap();
        let bad = est
            .grid()
            .iter()
            .zip(&est.estimate)
            .zip(&est.se)
            .filter(|((&x, _), _)| x.abs() <= 4.0)
            .filter(|((&x, &v), &se)| (v - normal_pdf(x, 1.0)).abs() > 3.0 * se + 1e-12)
            .count();
        assert!(bad <= 8, "{bad}");
        assert_eq!(est.rejected, 0);
    }
}
