//! Dense truncated multivariate Taylor jets.
//!
//! A jet of order `R` at a point `p` stores the Taylor coefficients
//! `c_a = ∂^a f(p) / a!` for every multi-index `|a| ≤ R`. Coefficients are
//! laid out by total degree, so a jet of effective order `o < R` is simply the
//! prefix of length `C(N + o, o)`. Products walk a precomputed table of index
//! triples `(i, j, k)` with `a_i + a_j = a_k`, likewise sorted by degree.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use crate::special::binomial;
use crate::{Error, Result};

/// Default cap on jet order.
pub const DEFAULT_MAX_ORDER: usize = 6;
/// Default cap on table sizes (coefficients and product triples).
pub const DEFAULT_BUDGET: u128 = 10_000_000;

/// Smallest magnitude a jet value may have before it is inverted.
pub const DIVISION_GUARD: f64 = 1e-300;

/// Monomial layout and product tables for jets in `N` variables up to order `R`.
pub struct JetSpace {
    dim: usize,
    order: usize,
    /// Exponents, `dim` entries per monomial.
    exps: Vec<u8>,
    /// `coeff_end[o]` = number of monomials of degree ≤ o.
    coeff_end: Vec<usize>,
    /// Triples `(i, j, k)` sorted by `deg k`.
    pairs: Vec<(u32, u32, u32)>,
    /// `pair_end[o]` = number of triples with `deg k ≤ o`.
    pair_end: Vec<usize>,
    /// `raise[var * len + idx]` = index of `a_idx + e_var` (or `u32::MAX`).
    raise: Vec<u32>,
}

impl fmt::Debug for JetSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JetSpace")
            .field("dim", &self.dim)
            .field("order", &self.order)
            .field("coefficients", &self.len())
            .field("pairs", &self.pairs.len())
            .finish()
    }
}

fn compositions(dim: usize, deg: usize, prefix: &mut Vec<u8>, out: &mut Vec<u8>) {
    if prefix.len() + 1 == dim {
        prefix.push(deg as u8);
        out.extend_from_slice(prefix);
        prefix.pop();
        return;
    }
    for first in (0..=deg).rev() {
        prefix.push(first as u8);
        compositions(dim, deg - first, prefix, out);
        prefix.pop();
    }
}

impl JetSpace {
    pub fn new(dim: usize, order: usize) -> Result<Arc<Self>> {
        Self::with_limits(dim, order, DEFAULT_MAX_ORDER, DEFAULT_BUDGET)
    }

    /// Builds the tables, refusing `order > max_order` and layouts whose
    /// coefficient or product tables exceed `budget` entries.
    pub fn with_limits(dim: usize, order: usize, max_order: usize, budget: u128) -> Result<Arc<Self>> {
        if dim == 0 {
            return Err(Error::invalid("dim", "jets need at least one variable"));
        }
        if order > max_order {
            return Err(Error::OrderTooLarge { requested: order, max: max_order });
        }
        let (n, r) = (dim as u128, order as u128);
        let coefficients = binomial(n + r, r);
        let pair_count = binomial(2 * n + r, r);
        for size in [coefficients, pair_count] {
            if size > budget {
                return Err(Error::JetBudget { coefficients: size, budget });
            }
        }
        let mut exps = Vec::with_capacity(coefficients as usize * dim);
        let mut coeff_end = Vec::with_capacity(order + 1);
        let mut prefix = Vec::with_capacity(dim);
        for d in 0..=order {
            compositions(dim, d, &mut prefix, &mut exps);
            coeff_end.push(exps.len() / dim);
        }
        let len = exps.len() / dim;
        let index: BTreeMap<&[u8], u32> = (0..len).map(|i| (&exps[i * dim..(i + 1) * dim], i as u32)).collect();
        let start = |d: usize| if d == 0 { 0 } else { coeff_end[d - 1] };

        let mut pairs = Vec::with_capacity(pair_count as usize);
        let mut pair_end = Vec::with_capacity(order + 1);
        let mut key = vec![0u8; dim];
        for dk in 0..=order {
            for di in 0..=dk {
                for i in start(di)..coeff_end[di] {
                    for j in start(dk - di)..coeff_end[dk - di] {
                        for v in 0..dim {
                            key[v] = exps[i * dim + v] + exps[j * dim + v];
                        }
                        let k = index[key.as_slice()];
                        pairs.push((i as u32, j as u32, k));
                    }
                }
            }
            pair_end.push(pairs.len());
        }

        let mut raise = vec![u32::MAX; dim * len];
        let raisable = if order == 0 { 0 } else { coeff_end[order - 1] };
        for idx in 0..raisable {
            for v in 0..dim {
                key.copy_from_slice(&exps[idx * dim..(idx + 1) * dim]);
                key[v] += 1;
                raise[v * len + idx] = index[key.as_slice()];
            }
        }
        Ok(Arc::new(Self { dim, order, exps, coeff_end, pairs, pair_end, raise }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of coefficients of a full-order jet, `C(N + R, R)`.
    pub fn len(&self) -> usize {
        self.coeff_end[self.order]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of coefficients of an order-`o` jet.
    pub fn len_at(&self, o: usize) -> usize {
        self.coeff_end[o]
    }

    pub fn exponents(&self, idx: usize) -> &[u8] {
        &self.exps[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn index_of(&self, exps: &[u8]) -> Option<usize> {
        let deg: usize = exps.iter().map(|&e| e as usize).sum();
        if exps.len() != self.dim || deg > self.order {
            return None;
        }
        let lo = if deg == 0 { 0 } else { self.coeff_end[deg - 1] };
        (lo..self.coeff_end[deg]).find(|&i| self.exponents(i) == exps)
    }

    pub fn constant(self: &Arc<Self>, value: f64) -> Jet {
        let mut c = vec![0.0; self.len()];
        c[0] = value;
        Jet { space: self.clone(), order: self.order, c }
    }

    pub fn zero(self: &Arc<Self>) -> Jet {
        self.constant(0.0)
    }

    /// The coordinate `X_var` expanded at a point where it equals `value`.
    pub fn variable(self: &Arc<Self>, var: usize, value: f64) -> Jet {
        let mut j = self.constant(value);
        if self.order >= 1 {
            j.c[1 + var] = 1.0;
        }
        j
    }

    /// Coordinate jets for every variable at `point`.
    pub fn coordinates(self: &Arc<Self>, point: &[f64]) -> Vec<Jet> {
        point.iter().enumerate().map(|(i, &x)| self.variable(i, x)).collect()
    }
}

/// Truncated Taylor expansion of a scalar function at a point.
#[derive(Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    order: usize,
    c: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet").field("order", &self.order).field("coefficients", &self.c).finish()
    }
}

fn factorial_of(exps: &[u8]) -> f64 {
    exps.iter().map(|&e| crate::special::factorial(e as usize)).product()
}

impl Jet {
    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    /// Effective order: derivatives up to this total degree are exact.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Raw Taylor coefficients, graded layout.
    pub fn coefficients(&self) -> &[f64] {
        &self.c
    }

    /// Taylor coefficient `∂^a f / a!`.
    pub fn taylor(&self, exps: &[u8]) -> Option<f64> {
        self.space.index_of(exps).filter(|&i| i < self.c.len()).map(|i| self.c[i])
    }

    /// Mixed partial derivative `∂^a f`.
    pub fn derivative(&self, exps: &[u8]) -> Option<f64> {
        self.taylor(exps).map(|c| c * factorial_of(exps))
    }

    pub fn gradient(&self) -> Vec<f64> {
        let n = self.space.dim;
        if self.order == 0 {
            return vec![f64::NAN; n];
        }
        self.c[1..=n].to_vec()
    }

    /// Hessian matrix, row-major `N × N`.
    pub fn hessian(&self) -> Option<crate::linalg::Matrix> {
        if self.order < 2 {
            return None;
        }
        let n = self.space.dim;
        let mut key = vec![0u8; n];
        Some(crate::linalg::Matrix::from_fn(n, n, |i, j| {
            key.iter_mut().for_each(|k| *k = 0);
            key[i] += 1;
            key[j] += 1;
            self.derivative(&key).unwrap_or(f64::NAN)
        }))
    }

    /// Drops coefficients above order `o`.
    pub fn truncate(&self, o: usize) -> Jet {
        let o = o.min(self.order);
        Jet { space: self.space.clone(), order: o, c: self.c[..self.space.coeff_end[o]].to_vec() }
    }

    /// `∂f/∂x_var`, one order lower.
    pub fn partial(&self, var: usize) -> Result<Jet> {
        if self.order == 0 {
            return Err(Error::OrderOverflow { needed: 1, available: 0 });
        }
        let o = self.order - 1;
        let len = self.space.len();
        let n = self.space.coeff_end[o];
        let mut c = vec![0.0; n];
        for (idx, slot) in c.iter_mut().enumerate() {
            let up = self.space.raise[var * len + idx] as usize;
            let e = self.space.exps[up * self.space.dim + var] as f64;
            *slot = e * self.c[up];
        }
        Ok(Jet { space: self.space.clone(), order: o, c })
    }

    fn zip(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        debug_assert!(Arc::ptr_eq(&self.space, &other.space));
        let o = self.order.min(other.order);
        let n = self.space.coeff_end[o];
        let c = self.c[..n].iter().zip(&other.c[..n]).map(|(&a, &b)| f(a, b)).collect();
        Jet { space: self.space.clone(), order: o, c }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet { space: self.space.clone(), order: self.order, c: self.c.iter().map(|v| v * s).collect() }
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.c[0] += s;
        out
    }

    /// Truncated product at the smaller of the two orders.
    pub fn mul_jet(&self, other: &Jet) -> Jet {
        debug_assert!(Arc::ptr_eq(&self.space, &other.space));
        let o = self.order.min(other.order);
        let mut c = vec![0.0; self.space.coeff_end[o]];
        let (a, b) = (&self.c, &other.c);
        for &(i, j, k) in &self.space.pairs[..self.space.pair_end[o]] {
            c[k as usize] += a[i as usize] * b[j as usize];
        }
        Jet { space: self.space.clone(), order: o, c }
    }

    /// `1/f` by the series `1/(g₀(1 + e)) = g₀⁻¹ Σ (−e)ⁿ`, evaluated in
    /// Horner form. Fails when `|f(p)| ≤ 1e−300`.
    pub fn recip(&self) -> Result<Jet> {
        let g0 = self.c[0];
        if !(g0.abs() > DIVISION_GUARD) || !g0.is_finite() {
            return Err(Error::SingularEvaluation { value: g0 });
        }
        let mut e = self.scale(1.0 / g0);
        e.c[0] = 0.0;
        let mut r = self.space.constant(1.0).truncate(self.order);
        for _ in 0..self.order {
            r = e.mul_jet(&r).scale(-1.0).add_scalar(1.0);
        }
        Ok(r.scale(1.0 / g0))
    }

    pub fn div_jet(&self, other: &Jet) -> Result<Jet> {
        Ok(self.mul_jet(&other.recip()?))
    }

    /// Integer power by repeated squaring; negative exponents invert first.
    pub fn powi(&self, n: i32) -> Result<Jet> {
        let base = if n < 0 { self.recip()? } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = self.space.constant(1.0).truncate(self.order);
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_jet(&sq);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.mul_jet(&sq);
            }
        }
        Ok(acc)
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.zip(rhs, |a, b| a + b)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.zip(rhs, |a, b| a - b)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.mul_jet(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        &self + &rhs
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        &self - &rhs
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        self.mul_jet(&rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_sizes() {
        let s = JetSpace::new(8, 6).unwrap();
        assert_eq!(s.len(), 3003);
        assert_eq!(s.pairs.len(), 74613);
        assert!(matches!(JetSpace::with_limits(60, 6, 6, DEFAULT_BUDGET), Err(Error::JetBudget { .. })));
        assert!(matches!(JetSpace::new(2, 7), Err(Error::OrderTooLarge { .. })));
    }

    #[test]
    fn product_of_univariate_series() {
        // (1 + x)(1 − x) = 1 − x² at x = 0
        let s = JetSpace::new(1, 4).unwrap();
        let x = s.variable(0, 0.0);
        let p = &x.add_scalar(1.0) * &x.scale(-1.0).add_scalar(1.0);
        assert_eq!(p.coefficients(), &[1.0, 0.0, -1.0, 0.0, 0.0]);
        // 1/(1 − x) = Σ xⁿ
        let r = x.scale(-1.0).add_scalar(1.0).recip().unwrap();
        assert_eq!(r.coefficients(), &[1.0; 5]);
    }

    #[test]
    fn partial_lowers_order() {
        let s = JetSpace::new(2, 3).unwrap();
        let x = s.variable(0, 2.0);
        let y = s.variable(1, -1.0);
        let f = &(&x * &x) * &y; // x²y
        let fx = f.partial(0).unwrap();
        assert_eq!(fx.order(), 2);
        assert_eq!(fx.value(), -4.0);
        assert_eq!(f.derivative(&[2, 1]), Some(2.0));
        assert_eq!(fx.derivative(&[1, 1]), Some(2.0));
        assert!(s.constant(1.0).truncate(0).partial(0).is_err());
    }

    #[test]
    fn recip_guard() {
        let s = JetSpace::new(1, 2).unwrap();
        assert!(matches!(s.zero().recip(), Err(Error::SingularEvaluation { .. })));
    }
}
