//! Sampling with closed-form Malliavin weights.

use alloc::vec;
use alloc::vec::Vec;

use super::forms::{WeightForms, MAX_GK_ORDER};
use super::Spectrum;
use crate::hermite::hermite_gen_all;
use crate::rng::{fill_normal, substream, StreamRng, CHUNK};
use crate::{Error, Result};

/// Malliavin weights of one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub f: f64,
    /// `w = ‖DF‖²`.
    pub w: f64,
    pub delta_u: f64,
    pub du_delta_u: f64,
    /// `G_0 … G_K`; entries past the sampler's order are zero.
    pub gk: [f64; MAX_GK_ORDER + 1],
}

/// A source of Gaussian samples and their weights.
pub trait WeightSource {
    /// Number of standard normal coordinates per sample.
    fn dim(&self) -> usize;
    /// Largest `k` with `G_k` populated.
    fn max_gk_order(&self) -> usize;
    fn weights_at(&self, x: &[f64]) -> Weights;

    fn draw(&self, rng: &mut StreamRng, x: &mut [f64]) -> Weights {
        fill_normal(rng, x);
        self.weights_at(x)
    }
}

/// `F = Σ λᵢ(xᵢ² − 1)` with weights from [`WeightForms`].
#[derive(Debug, Clone)]
pub struct Sampler {
    lambda: Vec<f64>,
    trace: f64,
    forms: WeightForms,
    max_order: usize,
}

impl Sampler {
    pub fn new(spectrum: &Spectrum, max_gk_order: usize) -> Result<Self> {
        if max_gk_order > MAX_GK_ORDER {
            return Err(Error::OrderTooLarge { requested: max_gk_order, max: MAX_GK_ORDER });
        }
        let trace = spectrum.trace();
        Ok(Self {
            lambda: spectrum.eigenvalues().to_vec(),
            trace,
            forms: WeightForms::new(trace, max_gk_order),
            max_order: max_gk_order,
        })
    }

    pub fn forms(&self) -> &WeightForms {
        &self.forms
    }

    /// `P_m = Σ λᵢ^m xᵢ²` for `m = 1 … count`.
    pub fn power_sums(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (&l, &xi) in self.lambda.iter().zip(x) {
            let mut t = l * xi * xi;
            for slot in out.iter_mut() {
                *slot += t;
                t *= l;
            }
        }
    }
}

impl WeightSource for Sampler {
    fn dim(&self) -> usize {
        self.lambda.len()
    }

    fn max_gk_order(&self) -> usize {
        self.max_order
    }

    fn weights_at(&self, x: &[f64]) -> Weights {
        let mut p = [0.0; super::forms::NP];
        let need = self.forms.powers_needed.max(4);
        self.power_sums(x, &mut p[..need]);
        let mut gk = [0.0; MAX_GK_ORDER + 1];
        for (slot, form) in gk.iter_mut().zip(&self.forms.gk) {
            *slot = form.eval(&p);
        }
        Weights {
            f: p[0] - self.trace,
            w: 4.0 * p[1],
            delta_u: self.forms.delta.eval(&p),
            du_delta_u: self.forms.du_delta[0].eval(&p),
            gk,
        }
    }
}

/// `F = σ·Z`: the first-chaos variable `I₁(h)` with `‖h‖ = σ`, for which
/// `δ_u = F/σ²` and `G_k = H_k(1/σ², F/σ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstChaos {
    pub sigma: f64,
    pub max_order: usize,
}

impl FirstChaos {
    pub fn new(sigma: f64, max_gk_order: usize) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::invalid("sigma", "must be positive"));
        }
        if max_gk_order > MAX_GK_ORDER {
            return Err(Error::OrderTooLarge { requested: max_gk_order, max: MAX_GK_ORDER });
        }
        Ok(Self { sigma, max_order: max_gk_order })
    }
}

impl WeightSource for FirstChaos {
    fn dim(&self) -> usize {
        1
    }

    fn max_gk_order(&self) -> usize {
        self.max_order
    }

    fn weights_at(&self, x: &[f64]) -> Weights {
        let s2 = self.sigma * self.sigma;
        let f = self.sigma * x[0];
        let mut gk = [0.0; MAX_GK_ORDER + 1];
        for (slot, v) in gk.iter_mut().zip(hermite_gen_all(self.max_order, 1.0 / s2, f / s2)) {
            *slot = v;
        }
        Weights { f, w: s2, delta_u: f / s2, du_delta_u: 1.0 / s2, gk }
    }
}

/// One sample with its Gaussian point.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    pub f: f64,
    pub w: f64,
    pub delta_u: f64,
    pub du_delta_u: f64,
    /// `G_0 … G_K`.
    pub gk: Vec<f64>,
    pub point: Vec<f64>,
}

/// Sequential sample stream. Sample `i` comes from substream `i / CHUNK` of
/// `seed`, the same layout the parallel drivers use.
#[derive(Debug, Clone)]
pub struct SampleIter<S> {
    source: S,
    seed: u64,
    n: usize,
    next: usize,
    rng: StreamRng,
}

impl<S: WeightSource> Iterator for SampleIter<S> {
    type Item = WeightedSample;

    fn next(&mut self) -> Option<WeightedSample> {
        if self.next >= self.n {
            return None;
        }
        if self.next % CHUNK == 0 {
            self.rng = substream(self.seed, (self.next / CHUNK) as u64);
        }
        self.next += 1;
        let mut point = vec![0.0; self.source.dim()];
        let w = self.source.draw(&mut self.rng, &mut point);
        Some(WeightedSample {
            f: w.f,
            w: w.w,
            delta_u: w.delta_u,
            du_delta_u: w.du_delta_u,
            gk: w.gk[..=self.source.max_gk_order()].to_vec(),
            point,
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = self.n - self.next;
        (r, Some(r))
    }
}

/// `n` i.i.d. samples of the second-chaos variable with weights up to
/// `G_{max_gk_order}`.
pub fn sample(s: &Spectrum, n: usize, seed: u64, max_gk_order: usize) -> Result<SampleIter<Sampler>> {
    if n == 0 {
        return Err(Error::invalid("n", "need at least one sample"));
    }
    Ok(SampleIter { source: Sampler::new(s, max_gk_order)?, seed, n, next: 0, rng: substream(seed, 0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{gk_decomposition, Functional};
    use crate::stats::Running;

    #[test]
    fn single_eigenvalue_moments() {
        let s = Spectrum::new(vec![1.0]).unwrap();
        let r: Running = sample(&s, 200_000, 11, 0).unwrap().map(|x| x.f).collect();
        assert!(r.mean().abs() < 3.0 * r.se());
        let v: Running = sample(&s, 200_000, 12, 0).unwrap().map(|x| x.f * x.f).collect();
        assert!((v.mean() - 2.0).abs() < 3.0 * v.se());
    }

    #[test]
    fn closed_forms_match_jet_engine() {
        let l = [1.0, 0.5, 0.25];
        let s = Spectrum::new(l.to_vec()).unwrap();
        let f = Functional::second_chaos(&l);
        for ws in sample(&s, 20, 3, 4).unwrap() {
            let dec = gk_decomposition(&f, 3, &ws.point).unwrap();
            assert!((ws.delta_u - dec.delta_u).abs() < 1e-10 * (1.0 + dec.delta_u.abs()));
            assert!((ws.du_delta_u - dec.du_delta[0]).abs() < 1e-10 * (1.0 + dec.du_delta[0].abs()));
            for k in 0..=4 {
                assert!((ws.gk[k] - dec.g[k]).abs() < 1e-8 * (1.0 + dec.g[k].abs()), "k = {k}");
            }
        }
    }

    #[test]
    fn iterator_is_deterministic() {
        let s = Spectrum::harmonic(5);
        let a: Vec<f64> = sample(&s, 50, 9, 2).unwrap().map(|x| x.gk[2]).collect();
        let b: Vec<f64> = sample(&s, 50, 9, 2).unwrap().map(|x| x.gk[2]).collect();
        assert_eq!(a, b);
    }
}
