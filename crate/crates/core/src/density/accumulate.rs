use alloc::vec;
use alloc::vec::Vec;

use super::{DensityEstimate, Estimator};
use crate::stats::mean_se;

/// Bucketed sums of a per-sample weight over a sorted tensor grid.
///
/// A sample at `F` lands in the bucket holding, per axis, the number of grid
/// points strictly below `Fₐ`. The estimate at grid index `j` is the sum over
/// buckets `b > j` on every axis, so each sample costs one binary search per
/// axis whatever the grid size.
#[derive(Debug, Clone, PartialEq)]
pub struct GridAccumulator {
    shape: Vec<usize>,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    pub n: u64,
    pub rejected: u64,
}

impl GridAccumulator {
    pub fn new(axes: &[Vec<f64>]) -> Self {
        let shape: Vec<usize> = axes.iter().map(|a| a.len() + 1).collect();
        let len = shape.iter().product();
        Self { shape, sum: vec![0.0; len], sum_sq: vec![0.0; len], n: 0, rejected: 0 }
    }

    pub fn bucket(&self, axes: &[Vec<f64>], point: &[f64]) -> usize {
        axes.iter().zip(point).fold(0, |acc, (axis, &v)| {
            let b = axis.partition_point(|&g| g < v);
            acc * (axis.len() + 1) + b
        })
    }

    pub fn add(&mut self, bucket: usize, weight: f64) {
        self.n += 1;
        self.sum[bucket] += weight;
        self.sum_sq[bucket] += weight * weight;
    }

    pub fn reject(&mut self) {
        self.rejected += 1;
    }

    pub fn merge(&mut self, other: &GridAccumulator) {
        debug_assert_eq!(self.shape, other.shape);
        self.n += other.n;
        self.rejected += other.rejected;
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *a += b;
        }
    }

    fn suffix_sums(&self, v: &[f64]) -> Vec<f64> {
        let mut out = v.to_vec();
        let mut stride = 1;
        for &len in self.shape.iter().rev() {
            let block = stride * len;
            for start in (0..out.len()).step_by(block) {
                for off in 0..stride {
                    for b in (0..len - 1).rev() {
                        let (hi, lo) = (start + off + (b + 1) * stride, start + off + b * stride);
                        out[lo] += out[hi];
                    }
                }
            }
            stride = block;
        }
        out
    }

    /// Estimates `sign · mean(1_{F>x}·weight)` with their standard errors.
    pub fn finish(&self, axes: &[Vec<f64>], sign: f64, estimator: Estimator) -> DensityEstimate {
        let s = self.suffix_sums(&self.sum);
        let q = self.suffix_sums(&self.sum_sq);
        let total: usize = axes.iter().map(|a| a.len()).product();
        let mut estimate = Vec::with_capacity(total);
        let mut se = Vec::with_capacity(total);
        let mut idx = vec![0usize; axes.len()];
        for _ in 0..total {
            let b = idx.iter().zip(&self.shape).fold(0, |acc, (&j, &len)| acc * len + j + 1);
            let (m, e) = if self.n == 0 { (0.0, 0.0) } else { mean_se(s[b], q[b], self.n) };
            estimate.push(sign * m);
            se.push(e);
            for a in (0..idx.len()).rev() {
                idx[a] += 1;
                if idx[a] < axes[a].len() {
                    break;
                }
                idx[a] = 0;
            }
        }
        DensityEstimate { axes: axes.to_vec(), estimate, se, n: self.n, rejected: self.rejected, estimator }
    }
}
