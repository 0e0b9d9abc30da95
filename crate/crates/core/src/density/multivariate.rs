use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::{check_grid, DensityEstimate, Estimator, GridAccumulator};
use crate::engine::{divergence_jets, ChaosExpansion, Functional, Jet, JetSpace, DEFAULT_BUDGET, DEFAULT_MAX_ORDER};
use crate::rng::{chunks, fill_normal, substream, CHUNK};
use crate::{Error, Result};

/// Samples with `|det γ_F|` at or below this value are rejected.
pub const DET_GUARD: f64 = 1e-12;

/// A random vector `F = (F₁, …, F_d)`, `d ≤ 3`, and the index sequence of
/// the weight `H_{(s₁,…,s_L)}(F)`.
#[derive(Debug, Clone)]
pub struct MultiProblem {
    fs: Vec<Functional>,
    sequence: Vec<usize>,
    space: Arc<JetSpace>,
}

fn det_and_cofactors(g: &[Vec<Jet>]) -> (Jet, Vec<Vec<Jet>>) {
    let d = g.len();
    match d {
        1 => (g[0][0].clone(), vec![vec![g[0][0].space().constant(1.0)]]),
        2 => {
            let det = &(&g[0][0] * &g[1][1]) - &(&g[0][1] * &g[1][0]);
            let cof = vec![vec![g[1][1].clone(), -&g[1][0]], vec![-&g[0][1], g[0][0].clone()]];
            (det, cof)
        }
        _ => {
            let m = |a: usize, b: usize, c: usize, e: usize| &(&g[a][b] * &g[c][e]) - &(&g[a][e] * &g[c][b]);
            let cof = vec![
                vec![m(1, 1, 2, 2), -&m(1, 0, 2, 2), m(1, 0, 2, 1)],
                vec![-&m(0, 1, 2, 2), m(0, 0, 2, 2), -&m(0, 0, 2, 1)],
                vec![m(0, 1, 1, 2), -&m(0, 0, 1, 2), m(0, 0, 1, 1)],
            ];
            let det = &(&(&g[0][0] * &cof[0][0]) + &(&g[0][1] * &cof[0][1])) + &(&g[0][2] * &cof[0][2]);
            (det, cof)
        }
    }
}

impl MultiProblem {
    /// `sequence` holds 1-based component indices.
    pub fn new(fs: &[ChaosExpansion], sequence: &[usize]) -> Result<Self> {
        let d = fs.len();
        if d == 0 || d > 3 {
            return Err(Error::invalid("F", alloc::format!("need 1 to 3 components, got {d}")));
        }
        let dim = fs[0].dim();
        if fs.iter().any(|f| f.dim() != dim) {
            return Err(Error::ShapeMismatch("components on different Gaussian dimensions".into()));
        }
        if let Some(&bad) = sequence.iter().find(|&&s| s == 0 || s > d) {
            return Err(Error::invalid("beta", alloc::format!("index {bad} outside 1..={d}")));
        }
        let order = sequence.len() + 1;
        let space = JetSpace::with_limits(dim, order, order.max(DEFAULT_MAX_ORDER), DEFAULT_BUDGET)?;
        Ok(Self { fs: fs.iter().map(|f| f.to_functional()).collect(), sequence: sequence.to_vec(), space })
    }

    /// `(F(x), H_{sequence}(F)(x))`, with the recursion
    /// `H_{(s₁…s_k)} = Σⱼ δ(H_{(s₁…s_{k−1})} (γ_F⁻¹)^{s_k j} DFⱼ)`.
    pub fn weight_at(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        let n = self.space.dim();
        let d = self.fs.len();
        let jets = self.fs.iter().map(|f| f.jet(&self.space, x)).collect::<Result<Vec<_>>>()?;
        let values: Vec<f64> = jets.iter().map(Jet::value).collect();
        if self.sequence.is_empty() {
            return Ok((values, 1.0));
        }
        let df: Vec<Vec<Jet>> =
            jets.iter().map(|j| (0..n).map(|i| j.partial(i)).collect::<Result<Vec<_>>>()).collect::<Result<_>>()?;
        let dot = |a: &[Jet], b: &[Jet]| a.iter().zip(b).skip(1).fold(&a[0] * &b[0], |acc, (p, q)| &acc + &(p * q));
        let gamma: Vec<Vec<Jet>> = (0..d).map(|a| (0..d).map(|b| dot(&df[a], &df[b])).collect()).collect();
        let (det, cof) = det_and_cofactors(&gamma);
        if !(det.value().abs() > DET_GUARD) {
            return Err(Error::SingularEvaluation { value: det.value() });
        }
        let inv_det = det.recip()?;
        // vₐ = Σ_b (γ⁻¹)^{ab} DF_b, one vector field per component index
        let v: Vec<Vec<Jet>> = (0..d)
            .map(|a| {
                (0..n)
                    .map(|i| {
                        let s = (1..d).fold(&cof[a][0] * &df[0][i], |acc, b| &acc + &(&cof[a][b] * &df[b][i]));
                        &s * &inv_det
                    })
                    .collect()
            })
            .collect();
        let coords = self.space.coordinates(x);
        let mut h = self.space.constant(1.0);
        for &s in &self.sequence {
            let u: Vec<Jet> = v[s - 1].iter().map(|vi| &h * vi).collect();
            h = divergence_jets(&u, &coords)?;
        }
        Ok((values, h.value()))
    }

    pub fn chunk(&self, axes: &[Vec<f64>], seed: u64, stream: u64, len: usize) -> Result<GridAccumulator> {
        let mut rng = substream(seed, stream);
        let mut x = vec![0.0; self.space.dim()];
        let mut acc = GridAccumulator::new(axes);
        for _ in 0..len {
            fill_normal(&mut rng, &mut x);
            match self.weight_at(&x) {
                Ok((f, h)) => {
                    let b = acc.bucket(axes, &f);
                    acc.add(b, h);
                }
                Err(Error::SingularEvaluation { .. }) => acc.reject(),
                Err(e) => return Err(e),
            }
        }
        Ok(acc)
    }
}

/// `H_β(F)` at one Gaussian point, `β` of 1-based component indices.
pub fn h_beta(fs: &[ChaosExpansion], beta: &[usize], point: &[f64]) -> Result<f64> {
    Ok(MultiProblem::new(fs, beta)?.weight_at(point)?.1)
}

/// `∂_β f̂(x) = (−1)^{|β|} mean(1_{F>x} H_{(1,…,d,β)}(F))` on the tensor grid
/// `axes`. Samples with `|det γ_F| ≤ DET_GUARD` are rejected; more than 0.1%
/// fails the run.
pub fn multivariate_density(
    fs: &[ChaosExpansion],
    beta: &[usize],
    axes: &[Vec<f64>],
    n: usize,
    seed: u64,
) -> Result<DensityEstimate> {
    if axes.len() != fs.len() {
        return Err(Error::ShapeMismatch(alloc::format!("{} grid axes for {} components", axes.len(), fs.len())));
    }
    for a in axes {
        check_grid(a)?;
    }
    let mut sequence: Vec<usize> = (1..=fs.len()).collect();
    sequence.extend_from_slice(beta);
    let problem = MultiProblem::new(fs, &sequence)?;
    let mut acc = GridAccumulator::new(axes);
    for (stream, len) in chunks(n, CHUNK) {
        acc.merge(&problem.chunk(axes, seed, stream, len)?);
    }
    let sign = if beta.len() % 2 == 0 { 1.0 } else { -1.0 };
    acc.finish(axes, sign, Estimator::Multivariate(beta.to_vec())).check_rejections()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::hermite_eval;
    use crate::special::normal_pdf;

    fn normal_pair() -> Vec<ChaosExpansion> {
        vec![ChaosExpansion::first_chaos(&[1.0, 0.0]), ChaosExpansion::first_chaos(&[0.0, 1.0])]
    }

    #[test]
    fn h_beta_of_normal_vector_is_product_hermite() {
        let fs = normal_pair();
        let betas: [&[usize]; 8] = [&[1], &[2], &[1, 1], &[1, 2], &[2, 1], &[1, 1, 1], &[1, 2, 2], &[2, 1, 2]];
        for &(x1, x2) in &[(0.3, -1.2), (1.7, 0.4), (-2.1, 2.5)] {
            for beta in betas {
                let k1 = beta.iter().filter(|&&b| b == 1).count();
                let k2 = beta.len() - k1;
                let expect = hermite_eval(k1, x1) * hermite_eval(k2, x2);
                let got = h_beta(&fs, beta, &[x1, x2]).unwrap();
                assert!((got - expect).abs() < 1e-10, "{beta:?}: {got} vs {expect}");
            }
        }
    }

    #[test]
    fn correlated_pair_weight_is_consistent() {
        // F = A X with A invertible: H_{(1,2)}(F) = g_{(1,2)}(A⁻¹F)-type weight times det A⁻¹
        let fs = vec![ChaosExpansion::first_chaos(&[1.0, 0.0]), ChaosExpansion::first_chaos(&[0.5, 1.0])];
        let x = [0.7, -0.2];
        let h = h_beta(&fs, &[1, 2], &x).unwrap();
        // γ = A Aᵀ, and for Gaussian F the weight is the Gaussian score product
        let (f1, f2) = (x[0], 0.5 * x[0] + x[1]);
        let (a, b, c) = (1.0, 0.5, 1.25);
        let det = a * c - b * b;
        let (i11, i12, i22) = (c / det, -b / det, a / det);
        let y1 = i11 * f1 + i12 * f2;
        let y2 = i12 * f1 + i22 * f2;
        assert!((h - (y1 * y2 - i12)).abs() < 1e-12, "{h}");
    }

    #[test]
    fn normal_pair_density() {
        let fs = normal_pair();
        let axis = vec![-1.0, 0.0, 1.0];
        let est = multivariate_density(&fs, &[], &[axis.clone(), axis.clone()], 100_000, 7).unwrap();
        let mut i = 0;
        for &x in &axis {
            for &y in &axis {
                let t = normal_pdf(x, 1.0) * normal_pdf(y, 1.0);
                assert!((est.estimate[i] - t).abs() < 4.0 * est.se[i], "({x}, {y})");
                i += 1;
            }
        }
    }

    #[test]
    fn rejects_bad_indices() {
        assert!(MultiProblem::new(&normal_pair(), &[3]).is_err());
    }
}
