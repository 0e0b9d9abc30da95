use alloc::vec::Vec;

use core::f64::consts::{FRAC_PI_2, PI};

use libm::{atan, cos, exp, sin, sqrt};

use crate::chaos2::{Spectrum, Tail};
use crate::linalg::{jacobi_eigenvalues, Matrix};
use crate::quad::gauss_legendre;
use crate::root::bisect;
use crate::{Error, Result};

const BISECTION_ITERATIONS: usize = 200;

pub(super) fn check_params(theta: f64, gamma: f64, t: f64) -> Result<()> {
    for (name, v) in [("theta", theta), ("gamma", gamma), ("T", t)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::invalid(name, alloc::format!("must be positive and finite, got {v}")));
        }
    }
    Ok(())
}

/// `E[F_T²] = 2‖f_T‖² = γ⁴/(2θ) − γ⁴(1 − e^{−2θT})/(4θ²T)`.
pub fn exact_f_t_moment(theta: f64, gamma: f64, t: f64) -> f64 {
    let g4 = gamma * gamma * gamma * gamma;
    g4 / (2.0 * theta) - g4 * (1.0 - exp(-2.0 * theta * t)) / (4.0 * theta * theta * t)
}

/// The boundary equation `(x² − 1) sin μT − 2x cos μT = 0`, `x = μ/θ`,
/// divided by `x² + 1`; equal to `−sin(μT + 2 arctan x)`.
pub fn sl_residual(theta: f64, t: f64, mu: f64) -> f64 {
    let x = mu / theta;
    ((x * x - 1.0) * sin(mu * t) - 2.0 * x * cos(mu * t)) / (x * x + 1.0)
}

fn lambda_of(theta: f64, gamma: f64, t: f64, mu: f64) -> f64 {
    gamma * gamma * theta / (sqrt(t) * (theta * theta + mu * mu))
}

/// One eigenvalue with its bracket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenRoot {
    /// 1-based rank in decreasing order.
    pub ordinal: usize,
    /// Bracket `i`: `μ ∈ ((iπ − π/2)/T, (iπ + π/2)/T)`, or `(0, π/(2T))` for `i = 0`.
    pub bracket: usize,
    pub mu: f64,
    pub lambda: f64,
    /// Bounds on `λ` implied by the bracket.
    pub lo: f64,
    pub hi: f64,
    pub residual: f64,
    /// The root beyond one-per-bracket: the root in bracket 0, or the upper
    /// root of the bracket containing `μ = θ`.
    pub extra: bool,
}

impl EigenRoot {
    pub fn inside(&self) -> bool {
        self.lo < self.lambda && self.lambda < self.hi
    }
}

/// Leading eigenvalues of the kernel operator with bracket diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSolveResult {
    pub theta: f64,
    pub gamma: f64,
    pub t: f64,
    pub roots: Vec<EigenRoot>,
    /// Upper bound on `Σ_{i>m} λᵢ²`.
    pub tail_bound: f64,
}

impl EigenSolveResult {
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.roots.iter().map(|r| r.lambda).collect()
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        Spectrum::new(self.eigenvalues())?.with_tail(Tail { count: u64::MAX, bound: self.tail_bound })
    }

    pub fn max_residual(&self) -> f64 {
        self.roots.iter().map(|r| r.residual.abs()).fold(0.0, f64::max)
    }
}

/// Roots in increasing `μ`, bracket by bracket.
struct Roots {
    theta: f64,
    gamma: f64,
    t: f64,
    bracket: usize,
    pending: Vec<EigenRoot>,
    ordinal: usize,
}

impl Roots {
    fn new(theta: f64, gamma: f64, t: f64) -> Self {
        Self { theta, gamma, t, bracket: 0, pending: Vec::new(), ordinal: 0 }
    }

    fn mu_bounds(&self, i: usize) -> (f64, f64) {
        let lo = if i == 0 { 0.0 } else { (i as f64 * PI - FRAC_PI_2) / self.t };
        (lo, (i as f64 * PI + FRAC_PI_2) / self.t)
    }

    fn fill(&mut self) -> Result<()> {
        let (theta, t) = (self.theta, self.t);
        while self.pending.is_empty() {
            let i = self.bracket;
            self.bracket += 1;
            let (a, b) = self.mu_bounds(i);
            // λ bounds: larger μ gives smaller λ
            let lo = lambda_of(theta, self.gamma, t, b);
            let hi = lambda_of(theta, self.gamma, t, a);
            let f = |mu: f64| sl_residual(theta, t, mu);
            let mut pieces = Vec::new();
            if theta > a && theta < b {
                if i > 0 {
                    pieces.push((a, theta));
                }
                pieces.push((theta, b));
            } else if i > 0 {
                pieces.push((a, b));
            }
            let shared = pieces.len() == 2;
            for (k, &(p, q)) in pieces.iter().enumerate() {
                let mu = bisect(f, p, q, BISECTION_ITERATIONS, i)?;
                self.pending.push(EigenRoot {
                    ordinal: 0,
                    bracket: i,
                    mu,
                    lambda: lambda_of(theta, self.gamma, t, mu),
                    lo,
                    hi,
                    residual: f(mu),
                    extra: i == 0 || (shared && k == 1),
                });
            }
            self.pending.reverse();
        }
        Ok(())
    }

    fn next_root(&mut self) -> Result<EigenRoot> {
        self.fill()?;
        let mut r = self.pending.pop().expect("filled");
        self.ordinal += 1;
        r.ordinal = self.ordinal;
        Ok(r)
    }
}

/// Upper bound on `Σ_{k>m} λ_k²`. The `k`-th root lies in bracket `k` or
/// `k − 1`, so `λ_k ≤ U(k − 1)` with `U(j) = γ²θ/(√T(θ² + ((jπ − π/2)/T)²))`;
/// the sum over `j ≥ m` is `U(m)²` plus the integral of `U²` beyond `m`.
pub fn tail_bound(theta: f64, gamma: f64, t: f64, m: usize) -> f64 {
    if m == 0 {
        return f64::INFINITY;
    }
    let g4 = gamma * gamma * gamma * gamma;
    let s0 = (m as f64 * PI - FRAC_PI_2) / t;
    let u = lambda_of(theta, gamma, t, s0);
    let th3 = theta * theta * theta;
    // ∫_{s0}^∞ ds/(θ² + s²)²
    let tail_int =
        PI / (4.0 * th3) - s0 / (2.0 * theta * theta * (theta * theta + s0 * s0)) - atan(s0 / theta) / (2.0 * th3);
    u * u + g4 * theta * theta / PI * tail_int.max(0.0)
}

/// The `m` largest eigenvalues by bisection on the pole-free boundary
/// equation in each bracket, splitting the bracket that contains `μ = θ`.
pub fn kernel_spectrum_sl(theta: f64, gamma: f64, t: f64, m: usize) -> Result<EigenSolveResult> {
    check_params(theta, gamma, t)?;
    if m == 0 {
        return Err(Error::invalid("count", "need at least one eigenvalue"));
    }
    let mut it = Roots::new(theta, gamma, t);
    let roots = (0..m).map(|_| it.next_root()).collect::<Result<Vec<_>>>()?;
    Ok(EigenSolveResult { theta, gamma, t, roots, tail_bound: tail_bound(theta, gamma, t, m) })
}

/// A spectrum truncated once `2Σλ² ≥ (1 − rel)·E[F_T²]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub spectrum: Spectrum,
    pub count: usize,
    pub captured: f64,
    pub exact: f64,
}

pub fn truncated_spectrum(theta: f64, gamma: f64, t: f64, rel: f64) -> Result<Truncation> {
    check_params(theta, gamma, t)?;
    if !(rel > 0.0 && rel < 1.0) {
        return Err(Error::invalid("rel", "must lie in (0, 1)"));
    }
    let exact = exact_f_t_moment(theta, gamma, t);
    let mut it = Roots::new(theta, gamma, t);
    let mut values = Vec::new();
    let mut captured = 0.0;
    while captured < (1.0 - rel) * exact {
        let r = it.next_root()?;
        captured += 2.0 * r.lambda * r.lambda;
        values.push(r.lambda);
        if values.len() > 50_000_000 {
            return Err(Error::invalid("rel", "truncation needs too many eigenvalues"));
        }
    }
    let count = values.len();
    let spectrum =
        Spectrum::new(values)?.with_tail(Tail { count: u64::MAX, bound: tail_bound(theta, gamma, t, count) })?;
    Ok(Truncation { spectrum, count, captured, exact })
}

/// `√wᵢ f_T(tᵢ, tⱼ) √wⱼ` on `nodes` Gauss-Legendre points of `[0, T]`, with a
/// diagonal correction so each row integrates the kernel exactly.
pub fn kernel_matrix(theta: f64, gamma: f64, t: f64, nodes: usize) -> Result<Matrix> {
    check_params(theta, gamma, t)?;
    if nodes < 16 {
        return Err(Error::invalid("nodes", "need at least 16"));
    }
    let rule = gauss_legendre(nodes).on_interval(0.0, t);
    let c = gamma * gamma / (2.0 * sqrt(t));
    let x = &rule.nodes;
    let sw: Vec<f64> = rule.weights.iter().map(|w| sqrt(*w)).collect();
    let mut m = Matrix::from_fn(nodes, nodes, |i, j| sw[i] * c * exp(-theta * (x[i] - x[j]).abs()) * sw[j]);
    // Singularity subtraction: replace the quadrature of the row integral by
    // its closed form, which absorbs the kink of the kernel on the diagonal.
    for i in 0..nodes {
        let exact = c * (2.0 - exp(-theta * x[i]) - exp(-theta * (t - x[i]))) / theta;
        let quad: f64 = (0..nodes).map(|j| rule.weights[j] * c * exp(-theta * (x[i] - x[j]).abs())).sum();
        m[(i, i)] += exact - quad;
    }
    Ok(m)
}

/// Nyström eigenvalues of the kernel operator, descending.
pub fn kernel_spectrum_nystrom(theta: f64, gamma: f64, t: f64, nodes: usize) -> Result<Spectrum> {
    let m = kernel_matrix(theta, gamma, t, nodes)?;
    Spectrum::new(jacobi_eigenvalues(&m, 1e-12)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_moment_values() {
        assert!((exact_f_t_moment(1.0, 1.0, 10.0) - (0.5 - (1.0 - exp(-20.0)) / 40.0)).abs() < 1e-15);
        assert!((exact_f_t_moment(1.0, 2.0, 10.0) / exact_f_t_moment(1.0, 1.0, 10.0) - 16.0).abs() < 1e-12);
        assert!((exact_f_t_moment(0.7, 1.3, 1e12) - libm::pow(1.3, 4.0) / 1.4).abs() < 1e-9);
    }

    #[test]
    fn roots_lie_in_brackets_and_solve_the_equation() {
        for &theta in &[0.5, 1.0, 2.0] {
            for &t in &[5.0, 20.0, 80.0] {
                let r = kernel_spectrum_sl(theta, 1.0, t, 200).unwrap();
                assert!(r.roots.iter().all(EigenRoot::inside), "θ = {theta}, T = {t}");
                assert!(r.max_residual() <= 1e-10);
                assert_eq!(r.roots.iter().filter(|x| x.extra).count(), 1);
                assert!(r.roots.windows(2).all(|w| w[0].lambda > w[1].lambda));
            }
        }
    }

    #[test]
    fn residual_is_a_shifted_sine() {
        for &mu in &[0.1, 0.77, 3.0, 12.5] {
            let direct = -sin(mu * 4.0 + 2.0 * atan(mu / 1.3));
            assert!((sl_residual(1.3, 4.0, mu) - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn small_theta_has_a_root_in_bracket_zero() {
        let r = kernel_spectrum_sl(0.1, 1.0, 5.0, 5).unwrap();
        assert_eq!(r.roots[0].bracket, 0);
        assert!(r.roots[0].extra);
    }

    #[test]
    fn spectral_sum_matches_exact_moment() {
        for &(theta, gamma, t) in &[(1.0, 1.0, 10.0), (0.5, 2.0, 5.0), (2.0, 0.7, 40.0)] {
            let r = kernel_spectrum_sl(theta, gamma, t, 400).unwrap();
            let s: f64 = r.roots.iter().map(|x| 2.0 * x.lambda * x.lambda).sum();
            let e = exact_f_t_moment(theta, gamma, t);
            assert!(e - s >= -1e-12 && e - s <= 2.0 * r.tail_bound, "{e} {s} {}", r.tail_bound);
        }
    }

    #[test]
    fn nystrom_agrees_with_sl() {
        let sl = kernel_spectrum_sl(1.0, 1.0, 10.0, 10).unwrap();
        let ny = kernel_spectrum_nystrom(1.0, 1.0, 10.0, 200).unwrap();
        for (a, b) in sl.roots.iter().zip(ny.eigenvalues()) {
            assert!((a.lambda - b).abs() / a.lambda < 2e-5, "{} vs {b}", a.lambda);
        }
    }

    #[test]
    fn truncation_reaches_the_mass() {
        let tr = truncated_spectrum(1.0, 1.0, 5.0, 1e-6).unwrap();
        assert!(tr.captured >= (1.0 - 1e-6) * tr.exact);
        assert!(tr.exact - tr.captured <= 2.0 * tr.spectrum.tail().unwrap().bound + 1e-15);
    }
}
