//! Quadrature: Gauss-Legendre and Gauss-Hermite rules, adaptive Gauss-Kronrod.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::{cos, pow, sqrt};

use crate::{Error, Result};

/// Nodes and weights of an interpolatory quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Maps the rule from `[-1, 1]` onto `[a, b]`.
    pub fn on_interval(&self, a: f64, b: f64) -> Rule {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        Rule {
            nodes: self.nodes.iter().map(|&x| mid + half * x).collect(),
            weights: self.weights.iter().map(|&w| half * w).collect(),
        }
    }
}

/// `n`-point Gauss-Legendre rule on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = cos(PI * (i as f64 + 0.75) / (nf + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
            }
            dp = nf * (z * p1 - p2) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() <= 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Rule { nodes, weights }
}

/// `n`-point Gauss-Hermite rule for the standard normal law: `Σ wᵢ f(xᵢ)`
/// approximates `E[f(Z)]`, `Z ~ N(0, 1)`. Nodes ascending.
pub fn gauss_hermite(n: usize) -> Rule {
    assert!(n >= 1, "Gauss-Hermite rule needs at least one node");
    // Newton iteration on orthonormal physicists' polynomials, weight e^{-x²}.
    const PIM4: f64 = 0.751_125_544_464_942_5;
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = 0.0;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => sqrt(2.0 * nf + 1.0) - 1.855_75 * pow(2.0 * nf + 1.0, -1.0 / 6.0),
            1 => z - 1.14 * pow(nf, 0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            let (mut p1, mut p2) = (PIM4, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * sqrt(2.0 / (jf + 1.0)) * p2 - sqrt(jf / (jf + 1.0)) * p3;
            }
            pp = sqrt(2.0 * nf) * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    let scale = 1.0 / sqrt(PI);
    let mut nodes: Vec<f64> = x.iter().map(|&z| z * core::f64::consts::SQRT_2).collect();
    let mut weights: Vec<f64> = w.iter().map(|&v| v * scale).collect();
    nodes.reverse();
    weights.reverse();
    Rule { nodes, weights }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abserr: f64,
    pub evaluations: usize,
}

/// Tolerances for [`adaptive`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 1e-14, rel: 1e-10, max_intervals: 2000 }
    }
}

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Globally adaptive 15-point Gauss-Kronrod integration over `[a, b]`.
///
/// The interval with the largest error estimate is bisected until the summed
/// estimate falls below `max(tol.abs, tol.rel·|value|)`. The Kronrod–Gauss
/// difference is used unscaled as the error estimate.
pub fn adaptive(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: Tolerance) -> Result<Integral> {
    let mut intervals: Vec<(f64, f64, f64, f64)> = Vec::new();
    let (v, e) = gk15(&mut f, a, b);
    intervals.push((a, b, v, e));
    let mut evaluations = 15;
    loop {
        let value: f64 = intervals.iter().map(|iv| iv.2).sum();
        let abserr: f64 = intervals.iter().map(|iv| iv.3).sum();
        let target = tol.abs.max(tol.rel * value.abs());
        if abserr <= target {
            return Ok(Integral { value, abserr, evaluations });
        }
        if intervals.len() >= tol.max_intervals {
            return Err(Error::QuadratureFailure { abserr, tolerance: target });
        }
        let (worst, _) =
            intervals.iter().enumerate().fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, iv)| {
                    if iv.3 > acc.1 {
                        (i, iv.3)
                    } else {
                        acc
                    }
                },
            );
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval exhausted at machine resolution
            return Err(Error::QuadratureFailure { abserr, tolerance: target });
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        evaluations += 30;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
}

/// `∫_a^∞ f`, via the map `x = a + t/(1 − t)` onto `t ∈ [0, 1)`.
pub fn adaptive_upper(mut f: impl FnMut(f64) -> f64, a: f64, tol: Tolerance) -> Result<Integral> {
    adaptive(
        |t| {
            let s = 1.0 - t;
            let x = a + t / s;
            let fx = f(x);
            if fx == 0.0 {
                0.0
            } else {
                fx / (s * s)
            }
        },
        0.0,
        1.0,
        tol,
    )
}

/// `∫_{-∞}^{∞} f`, folded onto `[0, ∞)`.
pub fn adaptive_line(mut f: impl FnMut(f64) -> f64, tol: Tolerance) -> Result<Integral> {
    adaptive_upper(|x| f(x) + f(-x), 0.0, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use libm::exp;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let rule = gauss_legendre(10);
        for k in 0..20 {
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            let got = rule.integrate(|x| pow(x, k as f64));
            assert!((got - exact).abs() < 1e-13, "k = {k}: {got} vs {exact}");
        }
        let big = gauss_legendre(400);
        assert!((big.weights.iter().sum::<f64>() - 2.0).abs() < 1e-12);
        assert!(big.nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn hermite_rule_reproduces_normal_moments() {
        for &n in &[5usize, 16, 64] {
            let rule = gauss_hermite(n);
            assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-13);
            for k in (0..(2 * n).min(24)).step_by(2) {
                let exact = crate::special::double_factorial(k.saturating_sub(1));
                let got = rule.integrate(|x| pow(x, k as f64));
                assert!((got - exact).abs() <= 1e-11 * exact, "n={n} k={k}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn adaptive_handles_singular_and_infinite_integrands() {
        let tol = Tolerance { abs: 0.0, rel: 1e-12, max_intervals: 5000 };
        let r = adaptive(|x| 1.0 / sqrt(x), 0.0, 1.0, tol).unwrap();
        assert!((r.value - 2.0).abs() < 1e-10);
        let r = adaptive_upper(|x| exp(-x), 0.0, tol).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        let r = adaptive_line(|x| exp(-0.5 * x * x), tol).unwrap();
        assert!((r.value - sqrt(2.0 * PI)).abs() < 1e-11);
    }
}
