//! The Stein equation `f′(x) − (x/σ²) f(x) = h(x) − E[h(N)]`,
//! `N ~ N(0, σ²)`, its growth envelopes, and a Monte Carlo check of the
//! Malliavin-Stein identity.
//!
//! The bounded solution is evaluated in the upper-tail form
//! `f(x) = −e^{x²/2σ²} ∫_x^∞ (h − Eh) e^{−y²/2σ²} dy` for `x ≥ 0` and the
//! lower-tail form `f(x) = e^{x²/2σ²} ∫_{−∞}^x (h − Eh) e^{−y²/2σ²} dy` for
//! `x < 0`, so the Gaussian factor only ever multiplies tail integrals that
//! decay at least as fast.

use alloc::vec::Vec;

use libm::{exp, pow, sqrt};

use crate::engine::{apply_l_inverse, ChaosExpansion};
use crate::quad::{adaptive, adaptive_upper, Tolerance};
use crate::rng::{chunks, fill_normal, substream, CHUNK};
use crate::special::{full_moment_unnormalized, scaled_upper_moment, INV_SQRT_2PI};
use crate::{Error, Result};

/// A test function `h`.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    /// `Σ cⱼ x^j`.
    Polynomial(Vec<f64>),
    /// `1_{x > threshold} · Σ cⱼ x^j`.
    IndicatorPolynomial { threshold: f64, coeffs: Vec<f64> },
    /// Piecewise-linear interpolation of `(xs, ys)`, constant outside.
    Tabulated { xs: Vec<f64>, ys: Vec<f64> },
    /// `Σ aᵢ hᵢ`.
    Combination(Vec<(f64, TestFunction)>),
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

impl TestFunction {
    /// `1_{x>z} H_k(x)`.
    pub fn indicator_hermite(z: f64, k: usize) -> Self {
        let coeffs = crate::engine::hermite_in_monomials(k as u32).iter().map(|&c| c as f64).collect();
        TestFunction::IndicatorPolynomial { threshold: z, coeffs }
    }

    pub fn tabulated(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.is_empty() {
            return Err(Error::invalid("tabulated", "abscissae and values must be nonempty and of equal length"));
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("tabulated", "abscissae must be strictly increasing"));
        }
        Ok(TestFunction::Tabulated { xs, ys })
    }

    /// A growth bound that `h` satisfies by construction:
    /// `Σ|cⱼ|·(|x|^d + 1)` for polynomials of degree `d`, `max|y|` for tables.
    pub fn natural_growth(&self) -> Growth {
        match self {
            TestFunction::Polynomial(c) | TestFunction::IndicatorPolynomial { coeffs: c, .. } => {
                let a: f64 = c.iter().map(|v| v.abs()).sum();
                Growth { a, k: c.len().saturating_sub(1) as u32, b: a }
            }
            TestFunction::Tabulated { ys, .. } => {
                Growth { a: 0.0, k: 0, b: ys.iter().fold(0.0, |m, y| m.max(y.abs())) }
            }
            TestFunction::Combination(parts) => {
                let gs: Vec<Growth> = parts
                    .iter()
                    .map(|(w, h)| {
                        let g = h.natural_growth();
                        Growth { a: w.abs() * g.a, k: g.k, b: w.abs() * g.b }
                    })
                    .collect();
                let k = gs.iter().map(|g| g.k).max().unwrap_or(0);
                let a: f64 = gs.iter().map(|g| g.a).sum();
                let b: f64 = gs.iter().map(|g| g.a + g.b).sum();
                Growth { a, k, b }
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TestFunction::Polynomial(c) => poly(c, x),
            TestFunction::IndicatorPolynomial { threshold, coeffs } => {
                if x > *threshold {
                    poly(coeffs, x)
                } else {
                    0.0
                }
            }
            TestFunction::Tabulated { xs, ys } => {
                if x <= xs[0] {
                    return ys[0];
                }
                if x >= xs[xs.len() - 1] {
                    return ys[ys.len() - 1];
                }
                let j = xs.partition_point(|&t| t <= x);
                let (x0, x1, y0, y1) = (xs[j - 1], xs[j], ys[j - 1], ys[j]);
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
            TestFunction::Combination(parts) => parts.iter().map(|(a, h)| a * h.eval(x)).sum(),
        }
    }
}

/// Declared growth `|h(x)| ≤ a|x|^k + b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Growth {
    pub a: f64,
    pub k: u32,
    pub b: f64,
}

impl Growth {
    pub fn bound(&self, x: f64) -> f64 {
        self.a * pow(x.abs(), self.k as f64) + self.b
    }
}

/// `s_k(x) = e^{x²/2σ²} ∫_{|x|}^∞ y^k e^{−y²/2σ²} dy`.
pub fn envelope_sk(k: usize, sigma: f64, x: f64) -> f64 {
    scaled_upper_moment(k, x.abs(), sigma)
}

/// Pointwise evaluator of the bounded Stein solution for one `(h, σ)`.
#[derive(Debug, Clone)]
pub struct SteinSolver {
    h: TestFunction,
    sigma: f64,
    eh: f64,
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::invalid("sigma", alloc::format!("must be positive, got {sigma}")));
    }
    Ok(())
}

/// `∫_a^∞ y^j e^{−y²/2σ²} dy · e^{a²/2σ²}` for any real `a`, valid only
/// where the caller does not multiply by a growing factor; used for `E[h]`.
fn upper_integral(j: usize, a: f64, sigma: f64) -> f64 {
    let g = exp(-a * a / (2.0 * sigma * sigma));
    if a >= 0.0 {
        g * scaled_upper_moment(j, a, sigma)
    } else {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        full_moment_unnormalized(j, sigma) - sign * g * scaled_upper_moment(j, -a, sigma)
    }
}

fn expectation(h: &TestFunction, sigma: f64) -> f64 {
    let norm = INV_SQRT_2PI / sigma;
    match h {
        TestFunction::Polynomial(c) => {
            c.iter().enumerate().map(|(j, &cj)| cj * crate::special::gaussian_moment(j, sigma)).sum()
        }
        TestFunction::IndicatorPolynomial { threshold, coeffs } => {
            norm * coeffs.iter().enumerate().map(|(j, &cj)| cj * upper_integral(j, *threshold, sigma)).sum::<f64>()
        }
        TestFunction::Tabulated { xs, ys } => expectation(&ramp_expansion(xs, ys), sigma),
        TestFunction::Combination(parts) => parts.iter().map(|(a, p)| a * expectation(p, sigma)).sum(),
    }
}

/// The piecewise-linear table as `y₀ + Σ Δsₖ (x − xₖ)₊`, whose pieces have
/// exact Gaussian integrals. Gauss-Hermite rules converge slowly across kinks.
fn ramp_expansion(xs: &[f64], ys: &[f64]) -> TestFunction {
    let mut parts = alloc::vec![(ys[0], TestFunction::Polynomial(alloc::vec![1.0]))];
    let mut prev = 0.0;
    for k in 0..xs.len() {
        let slope = if k + 1 < xs.len() { (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]) } else { 0.0 };
        parts.push((
            slope - prev,
            TestFunction::IndicatorPolynomial { threshold: xs[k], coeffs: alloc::vec![-xs[k], 1.0] },
        ));
        prev = slope;
    }
    TestFunction::Combination(parts)
}

fn sign_pow(j: usize) -> f64 {
    if j % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl SteinSolver {
    pub fn new(h: TestFunction, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        let eh = expectation(&h, sigma);
        Ok(Self { h, sigma, eh })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `E[h(N)]`.
    pub fn expectation(&self) -> f64 {
        self.eh
    }

    pub fn h(&self, x: f64) -> f64 {
        self.h.eval(x)
    }

    /// `f_h(x)` without the `−E[h]` part, i.e. the contribution of `h` alone.
    fn raw(&self, h: &TestFunction, x: f64) -> Result<f64> {
        let s = self.sigma;
        let s2 = s * s;
        Ok(match h {
            TestFunction::Polynomial(c) => {
                if x >= 0.0 {
                    -c.iter().enumerate().map(|(j, &cj)| cj * scaled_upper_moment(j, x, s)).sum::<f64>()
                } else {
                    c.iter().enumerate().map(|(j, &cj)| cj * sign_pow(j) * scaled_upper_moment(j, -x, s)).sum()
                }
            }
            TestFunction::IndicatorPolynomial { threshold: a, coeffs } => {
                if x >= 0.0 {
                    let m = x.max(*a);
                    let factor = exp((x * x - m * m) / (2.0 * s2));
                    -factor * coeffs.iter().enumerate().map(|(j, &cj)| cj * scaled_upper_moment(j, m, s)).sum::<f64>()
                } else if x <= *a {
                    0.0
                } else {
                    // a < x < 0: ∫_a^x p e^{−y²/2σ²} dy, reflected onto the positive axis
                    let factor = exp((x * x - a * a) / (2.0 * s2));
                    coeffs
                        .iter()
                        .enumerate()
                        .map(|(j, &cj)| {
                            cj * sign_pow(j) * (scaled_upper_moment(j, -x, s) - factor * scaled_upper_moment(j, -a, s))
                        })
                        .sum()
                }
            }
            TestFunction::Tabulated { xs, .. } => self.raw_quadrature(h, xs, x)?,
            TestFunction::Combination(parts) => {
                let mut acc = 0.0;
                for (a, p) in parts {
                    acc += a * self.raw(p, x)?;
                }
                acc
            }
        })
    }

    fn raw_quadrature(&self, h: &TestFunction, knots: &[f64], x: f64) -> Result<f64> {
        let s2 = self.sigma * self.sigma;
        let tol = Tolerance { abs: 1e-15, rel: 1e-12, max_intervals: 2000 };
        // integrate in the distance t ≥ 0 from x, splitting at knots
        let dir = if x >= 0.0 { 1.0 } else { -1.0 };
        let kernel = |t: f64| h.eval(x + dir * t) * exp(-(2.0 * x * dir * t + t * t) / (2.0 * s2));
        let mut cuts: Vec<f64> = knots.iter().map(|&k| (k - x) * dir).filter(|&t| t > 0.0).collect();
        cuts.sort_by(f64::total_cmp);
        let mut total = 0.0;
        let mut lo = 0.0;
        for &c in &cuts {
            total += adaptive(kernel, lo, c, tol)?.value;
            lo = c;
        }
        total += adaptive_upper(kernel, lo, tol)?.value;
        Ok(-dir * total)
    }

    /// `f_h(x)`.
    pub fn f(&self, x: f64) -> Result<f64> {
        let base = self.raw(&self.h, x)?;
        let s0 = scaled_upper_moment(0, x.abs(), self.sigma);
        Ok(if x >= 0.0 { base + self.eh * s0 } else { base - self.eh * s0 })
    }

    /// `f_h′(x) = (x/σ²) f_h(x) + h(x) − E[h]`.
    pub fn df(&self, x: f64) -> Result<f64> {
        Ok(x / (self.sigma * self.sigma) * self.f(x)? + self.h(x) - self.eh)
    }
}

/// Grid values of a Stein solution.
#[derive(Debug, Clone, PartialEq)]
pub struct SteinSolution {
    pub h: TestFunction,
    pub sigma: f64,
    pub expectation: f64,
    pub grid: Vec<f64>,
    pub f: Vec<f64>,
    pub df: Vec<f64>,
}

/// Solves the Stein equation on `grid`, first checking the declared growth
/// of `h` at every grid point.
pub fn solve_stein(h: &TestFunction, growth: Growth, sigma: f64, grid: &[f64]) -> Result<SteinSolution> {
    check_sigma(sigma)?;
    for &x in grid {
        let v = h.eval(x);
        let b = growth.bound(x);
        if !(v.abs() <= b) {
            return Err(Error::NonIntegrable { x, value: v.abs(), bound: b });
        }
    }
    let solver = SteinSolver::new(h.clone(), sigma)?;
    let f = grid.iter().map(|&x| solver.f(x)).collect::<Result<Vec<_>>>()?;
    let df = grid.iter().zip(&f).map(|(&x, &fx)| x / (sigma * sigma) * fx + h.eval(x) - solver.eh).collect();
    Ok(SteinSolution { h: h.clone(), sigma, expectation: solver.eh, grid: grid.to_vec(), f, df })
}

/// Monte Carlo estimates of both sides of
/// `E[σ²f′(F) − Ff(F)] = E[f′(F)(σ² − ⟨DF, −DL⁻¹F⟩)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsReport {
    pub sigma2: f64,
    pub n: u64,
    pub lhs: f64,
    pub lhs_se: f64,
    pub rhs: f64,
    pub rhs_se: f64,
    /// Mean and standard error of the paired difference.
    pub diff: f64,
    pub diff_se: f64,
    pub z: f64,
}

/// Running sums for [`ms_identity_check`]; chunks merge in index order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MsAccumulator {
    pub n: u64,
    pub lhs: (f64, f64),
    pub rhs: (f64, f64),
    pub diff: (f64, f64),
}

impl MsAccumulator {
    pub fn merge(&mut self, o: &MsAccumulator) {
        self.n += o.n;
        for (a, b) in [(&mut self.lhs, o.lhs), (&mut self.rhs, o.rhs), (&mut self.diff, o.diff)] {
            a.0 += b.0;
            a.1 += b.1;
        }
    }

    pub fn finish(&self, sigma2: f64) -> MsReport {
        let (lhs, lhs_se) = crate::stats::mean_se(self.lhs.0, self.lhs.1, self.n);
        let (rhs, rhs_se) = crate::stats::mean_se(self.rhs.0, self.rhs.1, self.n);
        let (diff, diff_se) = crate::stats::mean_se(self.diff.0, self.diff.1, self.n);
        let z = if diff_se > 0.0 {
            diff / diff_se
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        MsReport { sigma2, n: self.n, lhs, lhs_se, rhs, rhs_se, diff, diff_se, z }
    }
}

/// Precomputed pieces of the Malliavin-Stein check for one `(F, h)`.
#[derive(Debug, Clone)]
pub struct MsProblem {
    f: ChaosExpansion,
    grad_f: Vec<ChaosExpansion>,
    grad_g: Vec<ChaosExpansion>,
    solver: SteinSolver,
    sigma2: f64,
}

impl MsProblem {
    pub fn new(f: &ChaosExpansion, h: TestFunction) -> Result<Self> {
        if f.expectation().abs() > 1e-12 {
            return Err(Error::invalid("F", "must be centered"));
        }
        let sigma2 = f.second_moment();
        let g = apply_l_inverse(f).scale(-1.0);
        Ok(Self {
            f: f.clone(),
            grad_f: (0..f.dim()).map(|i| f.partial(i)).collect(),
            grad_g: (0..f.dim()).map(|i| g.partial(i)).collect(),
            solver: SteinSolver::new(h, sqrt(sigma2))?,
            sigma2,
        })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// `⟨DF, −DL⁻¹F⟩` at `x`.
    pub fn w_bar(&self, x: &[f64]) -> f64 {
        self.grad_f.iter().zip(&self.grad_g).map(|(a, b)| a.eval(x) * b.eval(x)).sum()
    }

    /// One chunk of samples from substream `stream` of `seed`.
    pub fn chunk(&self, seed: u64, stream: u64, len: usize) -> Result<MsAccumulator> {
        let mut rng = substream(seed, stream);
        let mut x = alloc::vec![0.0; self.f.dim()];
        let mut acc = MsAccumulator::default();
        for _ in 0..len {
            fill_normal(&mut rng, &mut x);
            let fv = self.f.eval(&x);
            let f = self.solver.f(fv)?;
            let df = self.solver.df(fv)?;
            let l = self.sigma2 * df - fv * f;
            let r = df * (self.sigma2 - self.w_bar(&x));
            acc.n += 1;
            acc.lhs.0 += l;
            acc.lhs.1 += l * l;
            acc.rhs.0 += r;
            acc.rhs.1 += r * r;
            acc.diff.0 += l - r;
            acc.diff.1 += (l - r) * (l - r);
        }
        Ok(acc)
    }
}

/// Sequential Monte Carlo check of the Malliavin-Stein identity.
pub fn ms_identity_check(f: &ChaosExpansion, h: TestFunction, n: usize, seed: u64) -> Result<MsReport> {
    let problem = MsProblem::new(f, h)?;
    let mut acc = MsAccumulator::default();
    for (stream, len) in chunks(n, CHUNK) {
        acc.merge(&problem.chunk(seed, stream, len)?);
    }
    Ok(acc.finish(problem.sigma2))
}
