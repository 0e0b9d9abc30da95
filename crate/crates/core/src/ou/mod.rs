//! Ornstein-Uhlenbeck drift estimation and the spectrum of its second-chaos
//! fluctuation `F_T = I₂(f_T)`, `f_T(t, s) = γ²/(2√T)·e^{−θ|t−s|}`.

mod rate;
mod spectrum;

use alloc::vec::Vec;

use libm::{exp, sqrt};

use crate::rng::{normal, substream};
use crate::{Error, Result};

pub use rate::{
    exact_rate_slope, fit_rate, horizon_seed, limit_variance, rate_experiment, rate_point, rate_setup, RateFit,
    RatePoint, RateReport, RateSetup, RATE_TRUNCATION,
};
pub use spectrum::{
    exact_f_t_moment, kernel_matrix, kernel_spectrum_nystrom, kernel_spectrum_sl, sl_residual, tail_bound,
    truncated_spectrum, EigenRoot, EigenSolveResult, Truncation,
};

/// `dX = −θX dt + γ dB` observed on `[0, T]` with step `dt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuConfig {
    pub theta: f64,
    pub gamma: f64,
    pub t: f64,
    pub dt: f64,
    pub seed: u64,
}

impl OuConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("theta", self.theta), ("gamma", self.gamma), ("T", self.t), ("dt", self.dt)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, alloc::format!("must be positive and finite, got {v}")));
            }
        }
        if self.dt > self.t / 100.0 {
            return Err(Error::invalid("dt", alloc::format!("must be at most T/100 = {}", self.t / 100.0)));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        libm::round(self.t / self.dt) as usize
    }
}

/// A sampled path `X_0 = 0, X_dt, …`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub dt: f64,
    pub values: Vec<f64>,
}

/// Exact Gaussian transitions `X_{t+dt} = e^{−θdt}X_t + γ√((1−e^{−2θdt})/(2θ))·ξ`.
pub fn simulate_ou(cfg: &OuConfig) -> Result<Path> {
    cfg.validate()?;
    let a = exp(-cfg.theta * cfg.dt);
    let s = cfg.gamma * sqrt((1.0 - exp(-2.0 * cfg.theta * cfg.dt)) / (2.0 * cfg.theta));
    let mut rng = substream(cfg.seed, 0);
    let n = cfg.steps();
    let mut values = Vec::with_capacity(n + 1);
    let mut x = 0.0;
    values.push(x);
    for _ in 0..n {
        x = a * x + s * normal(&mut rng);
        values.push(x);
    }
    Ok(Path { dt: cfg.dt, values })
}

/// `θ̂ = −Σ X_{tᵢ}(X_{tᵢ₊₁} − X_{tᵢ}) / ∫X²dt`, with left-point Itô sums and
/// the trapezoid rule in the denominator.
pub fn least_squares_estimate(path: &Path) -> Result<f64> {
    let x = &path.values;
    if x.len() < 101 {
        return Err(Error::invalid(
            "path",
            alloc::format!("need at least 100 steps, got {}", x.len().saturating_sub(1)),
        ));
    }
    let num: f64 = x.windows(2).map(|w| w[0] * (w[1] - w[0])).sum();
    let sq: f64 = x.iter().map(|v| v * v).sum();
    let den = path.dt * (sq - 0.5 * (x[0] * x[0] + x[x.len() - 1] * x[x.len() - 1]));
    if !(den > 0.0) {
        return Err(Error::DegenerateDenominator);
    }
    Ok(-num / den)
}
