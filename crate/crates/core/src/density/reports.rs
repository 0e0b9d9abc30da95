use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use libm::{pow, sqrt};

use super::Fmla3Problem;
use crate::chaos2::Spectrum;
use crate::engine::{contract, ChaosExpansion, Kernel};
use crate::linalg::{sym_op_norm, Matrix};
use crate::report::{BoundReport, ConditionReport};
use crate::rng::{chunks, fill_normal, substream, CHUNK};
use crate::{Error, Result};

/// A second-chaos kernel, as a diagonal spectrum or an explicit symmetric
/// matrix acting on the Gaussian coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelInput {
    Spectrum(Spectrum),
    Matrix(Matrix),
    /// Kernels of chaos order above two are not supported.
    Tensor(Kernel),
}

/// Per element `σ² = 2‖f‖²`, `E[F⁴] − 3σ⁴ = 48‖f⊗₁f‖²`, `‖f⊗₁f‖` and
/// `Var(‖DF‖²) = 32‖f⊗₁f‖²`, with verdicts `i`, `ii`, `iii` that hold when
/// the respective quantity strictly decreases along the sequence.
pub fn fourth_moment_report(kernels: &[KernelInput]) -> Result<ConditionReport> {
    let mut rows = Vec::with_capacity(kernels.len());
    for k in kernels {
        let (sigma2, c2) = match k {
            KernelInput::Spectrum(s) => (2.0 * s.power_sum(2), s.power_sum(4)),
            KernelInput::Matrix(m) => {
                if !m.is_symmetric(1e-12 * (1.0 + m.frobenius_norm())) {
                    return Err(Error::invalid("kernel", "matrix must be symmetric"));
                }
                let a = Kernel::Matrix(m.clone());
                let c = contract(&a, &a, 1)?.norm();
                (2.0 * m.frobenius_dot(m), c * c)
            }
            KernelInput::Tensor(t) => {
                return Err(Error::invalid("kernel", alloc::format!("chaos order {} is not supported", t.order())))
            }
        };
        rows.push(vec![sigma2, 48.0 * c2, sqrt(c2), 32.0 * c2]);
    }
    let decreasing = |j: usize| rows.len() >= 2 && rows.windows(2).all(|w| w[1][j] < w[0][j]);
    let verdicts =
        vec![("i".to_string(), decreasing(1)), ("ii".to_string(), decreasing(2)), ("iii".to_string(), decreasing(3))];
    Ok(ConditionReport {
        columns: ["sigma2", "fourth_cumulant", "contraction_norm", "var_dfnorm"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        rows,
        verdicts,
        notes: vec!["verdicts: strictly decreasing along the sequence".to_string()],
    })
}

/// Exponents, sample size and the user constant `C_{r,s,σ,M}` of the
/// general bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub r: f64,
    pub s: f64,
    pub n: usize,
    pub seed: u64,
    pub c: f64,
}

fn check_exponents(r: f64, s: f64) -> Result<()> {
    if !(r > 2.0) || !(s >= 8.0) || (2.0 / r + 4.0 / s - 1.0).abs() > 1e-12 {
        return Err(Error::ExponentRelation { r, s });
    }
    Ok(())
}

/// Monte Carlo components of `C·‖F‖²_{1,s}·‖‖D²F‖_op‖_s`, plus
/// `M^r = E|w̄|^{−r}` and per-sample checks of
/// `‖D²F‖_op⁴ ≤ ‖D²F⊗₁D²F‖² ≤ ‖D²F‖_HS⁴`.
pub fn general_bound_report(f: &ChaosExpansion, inputs: BoundInputs) -> Result<BoundReport> {
    let BoundInputs { r, s, n, seed, c } = inputs;
    check_exponents(r, s)?;
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let problem = Fmla3Problem::new(f)?;
    let dim = problem.dim();
    let (mut ef, mut edf, mut eop, mut ew, mut violations, mut rejected, mut used) =
        (0.0, 0.0, 0.0, 0.0, 0u64, 0u64, 0u64);
    let mut x = vec![0.0; dim];
    for (stream, len) in chunks(n, CHUNK) {
        let mut rng = substream(seed, stream);
        for _ in 0..len {
            fill_normal(&mut rng, &mut x);
            let w = match problem.weight_at(&x) {
                Ok(w) => w,
                Err(Error::SingularEvaluation { .. }) => {
                    rejected += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let (fj, _) = problem.jets(&x)?;
            let grad = fj.gradient();
            let hess = fj.hessian().expect("order-2 jet");
            let op = sym_op_norm(&hess)?;
            let hs = hess.frobenius_norm();
            let k = Kernel::Matrix(hess);
            let cn = contract(&k, &k, 1)?.norm();
            let tol = 1e-10 * pow(hs, 4.0);
            if pow(op, 4.0) > cn * cn + tol || cn * cn > pow(hs, 4.0) + tol {
                violations += 1;
            }
            ef += pow(w.f.abs(), s);
            edf += pow(sqrt(grad.iter().map(|g| g * g).sum::<f64>()), s);
            eop += pow(op, s);
            ew += pow(w.w_bar.abs(), -r);
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::EmptySample);
    }
    let m = used as f64;
    let sobolev = pow((ef + edf) / m, 1.0 / s);
    let op_s = pow(eop / m, 1.0 / s);
    let mut report = BoundReport::new("general")
        .with_component("sigma2", f.second_moment())
        .with_component("sobolev_1s", sobolev)
        .with_component("hessian_op_s", op_s)
        .with_component("m_r", ew / m)
        .with_component("rci_checked", m)
        .with_component("rci_violations", violations as f64)
        .with_component("rejected", rejected as f64)
        .with_constant("C", c)
        .with_constant("r", r)
        .with_constant("s", s);
    report.value = c * sobolev * sobolev * op_s;
    report.notes.push("C is a user parameter; the bound is not asserted".to_string());
    Ok(report)
}
