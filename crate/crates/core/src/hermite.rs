//! Probabilists' Hermite polynomials, their generalized two-variable form
//! `H_k(λ, x) = λ^{k/2} H_k(x/√λ)`, and derivatives of the normal density.

use alloc::vec::Vec;

use crate::special::normal_pdf;
use crate::{Error, Result};

/// Largest order accepted by the validating entry points.
pub const MAX_ORDER: usize = 16;

fn check_order(k: usize) -> Result<()> {
    if k > MAX_ORDER {
        return Err(Error::OrderTooLarge { requested: k, max: MAX_ORDER });
    }
    Ok(())
}

/// `H_k(x)` by the recursion `H_{k+1} = x H_k − k H_{k−1}`.
pub fn hermite_eval(k: usize, x: f64) -> f64 {
    hermite_gen(k, 1.0, x)
}

/// `H_k(λ, x)` by `H_{k+1} = x H_k − kλ H_{k−1}` for any real `λ`.
///
/// Negative `λ` is meaningful as a polynomial identity and arises inside the
/// `G_k` decomposition, where `D_uδ_u` may change sign.
pub fn hermite_gen(k: usize, lambda: f64, x: f64) -> f64 {
    let (mut prev, mut cur) = (0.0, 1.0);
    for j in 0..k {
        let next = x * cur - j as f64 * lambda * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `[H_0(λ, x), …, H_k(λ, x)]`.
pub fn hermite_gen_all(k: usize, lambda: f64, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(k + 1);
    out.push(1.0);
    if k >= 1 {
        out.push(x);
    }
    for j in 1..k {
        let next = x * out[j] - j as f64 * lambda * out[j - 1];
        out.push(next);
    }
    out
}

/// Validated `H_k(λ, x)`; rejects `λ < 0` and `k > MAX_ORDER`.
pub fn hermite_gen_eval(k: usize, lambda: f64, x: f64) -> Result<f64> {
    check_order(k)?;
    if !(lambda >= 0.0) {
        return Err(Error::invalid("lambda", alloc::format!("must be nonnegative, got {lambda}")));
    }
    Ok(hermite_gen(k, lambda, x))
}

/// `∂_λ H_k(λ, x) = −k(k−1)/2 · H_{k−2}(λ, x)`.
pub fn hermite_gen_dlambda(k: usize, lambda: f64, x: f64) -> f64 {
    if k < 2 {
        return 0.0;
    }
    -((k * (k - 1)) as f64) / 2.0 * hermite_gen(k - 2, lambda, x)
}

/// `∂_x H_k(λ, x) = k H_{k−1}(λ, x)`.
pub fn hermite_gen_dx(k: usize, lambda: f64, x: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    k as f64 * hermite_gen(k - 1, lambda, x)
}

/// Exact coefficients of `H_k(λ, x) = Σᵢ c_{k,i} x^{k−2i} λⁱ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HermiteCoeffs {
    order: usize,
    coeffs: Vec<i64>,
}

impl HermiteCoeffs {
    /// `c_{k,i} = (−1)ⁱ k! / (2ⁱ i! (k−2i)!)`, built by the ratio
    /// `c_{k,i+1} = −c_{k,i}·(k−2i)(k−2i−1) / (2(i+1))`, which stays integral.
    pub fn new(k: usize) -> Result<Self> {
        check_order(k)?;
        let mut coeffs = Vec::with_capacity(k / 2 + 1);
        let mut c: i64 = 1;
        coeffs.push(c);
        for i in 0..k / 2 {
            let a = (k - 2 * i) as i64;
            c = -c * a * (a - 1) / (2 * (i as i64 + 1));
            coeffs.push(c);
        }
        Ok(Self { order: k, coeffs })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `c_{k,0}, …, c_{k,⌊k/2⌋}`.
    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    /// Evaluates the coefficient form `Σᵢ c_{k,i} x^{k−2i} λⁱ`.
    pub fn eval(&self, lambda: f64, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| c as f64 * libm::pow(x, (self.order - 2 * i) as f64) * libm::pow(lambda, i as f64))
            .sum()
    }
}

/// `k`-th derivative of the `N(0, σ²)` density:
/// `φ_σ^{(k)}(x) = (−1)^k σ^{−k} H_k(x/σ) φ_σ(x)`.
pub fn normal_density_derivative(k: usize, sigma: f64, x: f64) -> Result<f64> {
    check_order(k)?;
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma", alloc::format!("must be positive, got {sigma}")));
    }
    let s2 = sigma * sigma;
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * hermite_gen(k, 1.0 / s2, x / s2) * normal_pdf(x, sigma))
}
