//! Second-chaos variables `F = Σ λᵢ (Xᵢ² − 1)` given by their spectrum.

mod forms;
mod moments;
mod sampler;

use alloc::vec::Vec;

use crate::{Error, Result};

pub use forms::{PowerForm, WeightForms, MAX_GK_ORDER};
pub use moments::{
    certificate_qrate, check_i2th_conditions, equi_report, exact_moments, m_beta, negative_moment,
    negative_moment_chunk, negative_moment_mc, EquiReport, ExactMoments, I2thThresholds, NegativeMoment,
};
pub use sampler::{sample, FirstChaos, SampleIter, Sampler, WeightSource, WeightedSample, Weights};

/// Truncated eigenvalues: their number and an upper bound on their summed
/// squares `Σ_{i>N} λᵢ²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tail {
    pub count: u64,
    pub bound: f64,
}

/// Eigenvalues of a second-chaos kernel, sorted by decreasing magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    tail: Option<Tail>,
}

impl Spectrum {
    /// Sorts by `|λ|` descending; rejects non-finite values and the all-zero
    /// spectrum.
    pub fn new(mut eigenvalues: Vec<f64>) -> Result<Self> {
        if let Some(bad) = eigenvalues.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid("eigenvalues", alloc::format!("non-finite eigenvalue {bad}")));
        }
        if eigenvalues.iter().all(|&v| v == 0.0) {
            return Err(Error::EmptySpectrum);
        }
        eigenvalues.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
        Ok(Self { eigenvalues, tail: None })
    }

    pub fn with_tail(mut self, tail: Tail) -> Result<Self> {
        if !(tail.bound >= 0.0) || !tail.bound.is_finite() {
            return Err(Error::invalid("tail_bound", "must be finite and nonnegative"));
        }
        self.tail = Some(tail);
        Ok(self)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn tail(&self) -> Option<Tail> {
        self.tail
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn nonzero_count(&self) -> usize {
        self.eigenvalues.iter().filter(|&&v| v != 0.0).count()
    }

    /// `Σ λᵢ^p`.
    pub fn power_sum(&self, p: u32) -> f64 {
        self.eigenvalues.iter().map(|&l| libm::pow(l, p as f64)).sum()
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// Spectrum of `c·F`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let mut s = Spectrum::new(self.eigenvalues.iter().map(|v| v * c).collect())?;
        s.tail = self.tail.map(|t| Tail { count: t.count, bound: t.bound * c * c });
        Ok(s)
    }

    /// `λᵢ = 1/i` for `i ≤ n`.
    pub fn harmonic(n: usize) -> Self {
        Spectrum::new((1..=n).map(|i| 1.0 / i as f64).collect()).expect("nonzero")
    }

    /// `n` equal eigenvalues `value`.
    pub fn constant(n: usize, value: f64) -> Result<Self> {
        Spectrum::new(alloc::vec![value; n])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_is_sorted_by_magnitude() {
        let s = Spectrum::new(alloc::vec![0.25, -1.0, 0.5, 0.0]).unwrap();
        assert_eq!(s.eigenvalues(), &[-1.0, 0.5, 0.25, 0.0]);
        assert_eq!(s.nonzero_count(), 3);
        assert!(matches!(Spectrum::new(alloc::vec![0.0, 0.0]), Err(Error::EmptySpectrum)));
        assert!(Spectrum::new(alloc::vec![f64::NAN]).is_err());
    }
}
