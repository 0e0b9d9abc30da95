//! Monte Carlo density estimators built on `f(x) = E[1_{F>x} · weight]`,
//! distances to the normal target and the associated reports.

mod accumulate;
mod kde;
mod malliavin;
mod multivariate;
mod reports;

use alloc::vec::Vec;

pub use accumulate::GridAccumulator;
pub use kde::{kde, silverman_bandwidth, KdeEstimate};
pub use malliavin::{
    derivative_density, malliavin_density, malliavin_density_general, Fmla3Problem, Fmla3Weight, SourceDensity,
    DEFAULT_MAX_DERIVATIVE, MIN_SAMPLES,
};
pub use multivariate::{h_beta, multivariate_density, MultiProblem, DET_GUARD};
pub use reports::{fourth_moment_report, general_bound_report, BoundInputs, KernelInput};

use crate::{Error, Result};

/// Largest tolerated fraction of rejected samples.
pub const MAX_REJECTION_RATE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Estimator {
    Fmla1,
    Fmla3,
    Derivative(usize),
    Multivariate(Vec<usize>),
    Kde,
}

impl Estimator {
    pub fn tag(&self) -> alloc::string::String {
        use alloc::string::ToString;
        match self {
            Estimator::Fmla1 => "malliavin-Fmla1".to_string(),
            Estimator::Fmla3 => "malliavin-Fmla3".to_string(),
            Estimator::Derivative(k) => alloc::format!("derivative-{k}"),
            Estimator::Multivariate(b) => alloc::format!("multivariate-{b:?}"),
            Estimator::Kde => "kde".to_string(),
        }
    }
}

/// Estimates on a tensor grid. One-dimensional estimates have a single axis;
/// values are stored row-major over the axes.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub axes: Vec<Vec<f64>>,
    pub estimate: Vec<f64>,
    /// Sample SD of the per-sample integrand over `√n`.
    pub se: Vec<f64>,
    pub n: u64,
    pub rejected: u64,
    pub estimator: Estimator,
}

impl DensityEstimate {
    /// The abscissae of a one-dimensional estimate.
    pub fn grid(&self) -> &[f64] {
        &self.axes[0]
    }

    pub fn rejection_rate(&self) -> f64 {
        let total = self.n + self.rejected;
        if total == 0 {
            0.0
        } else {
            self.rejected as f64 / total as f64
        }
    }

    /// Fails when more than 0.1% of the samples were rejected.
    pub fn check_rejections(self) -> Result<Self> {
        if self.rejection_rate() > MAX_REJECTION_RATE {
            return Err(Error::ExcessiveRejection { rejected: self.rejected, total: self.n + self.rejected });
        }
        Ok(self)
    }

    /// Trapezoid integral of a one-dimensional estimate, or the tensor
    /// trapezoid rule in higher dimension.
    pub fn integral(&self) -> f64 {
        let weights: Vec<Vec<f64>> = self.axes.iter().map(|a| trapezoid_weights(a)).collect();
        let mut total = 0.0;
        let mut idx = alloc::vec![0usize; self.axes.len()];
        for &v in &self.estimate {
            total += v * idx.iter().zip(&weights).map(|(&i, w)| w[i]).product::<f64>();
            for a in (0..idx.len()).rev() {
                idx[a] += 1;
                if idx[a] < self.axes[a].len() {
                    break;
                }
                idx[a] = 0;
            }
        }
        total
    }
}

pub(crate) fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let mut w = alloc::vec![0.0; x.len()];
    for i in 1..x.len() {
        let h = 0.5 * (x[i] - x[i - 1]);
        w[i - 1] += h;
        w[i] += h;
    }
    w
}

/// `k` uniform points on `[a, b]`.
pub fn uniform_grid(a: f64, b: f64, k: usize) -> Result<Vec<f64>> {
    if k < 2 || !(a < b) {
        return Err(Error::invalid("grid", alloc::format!("need a < b and k >= 2, got {a}:{b}:{k}")));
    }
    Ok((0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect())
}

/// The default grid: 241 points on `[−6σ, 6σ]`.
pub fn default_grid(sigma: f64) -> Vec<f64> {
    uniform_grid(-6.0 * sigma, 6.0 * sigma, 241).expect("valid default grid")
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("grid", "empty"));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) || grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("grid", "must be finite and strictly increasing"));
    }
    Ok(())
}

/// Gaps between a one-dimensional estimate and a target function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distance {
    pub sup_gap: f64,
    pub argmax: f64,
    pub l1: f64,
    pub l2: f64,
}

/// Grid-sup and trapezoid `L¹`, `L²` gaps.
pub fn uniform_distance(est: &DensityEstimate, target: impl Fn(f64) -> f64) -> Distance {
    distance_on(est.grid(), &est.estimate, target)
}

pub fn distance_on(grid: &[f64], values: &[f64], target: impl Fn(f64) -> f64) -> Distance {
    let gaps: Vec<f64> = grid.iter().zip(values).map(|(&x, &v)| (v - target(x)).abs()).collect();
    let (mut sup_gap, mut argmax) = (0.0, grid[0]);
    for (&x, &g) in grid.iter().zip(&gaps) {
        if g > sup_gap {
            sup_gap = g;
            argmax = x;
        }
    }
    let w = trapezoid_weights(grid);
    let l1 = gaps.iter().zip(&w).map(|(g, w)| g * w).sum();
    let l2 = libm::sqrt(gaps.iter().zip(&w).map(|(g, w)| g * g * w).sum());
    Distance { sup_gap, argmax, l1, l2 }
}
