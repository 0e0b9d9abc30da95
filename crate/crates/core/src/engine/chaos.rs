//! Polynomials in Gaussian coordinates and their Wiener chaos expansions in
//! the tensor Hermite basis `∏ H_{aᵢ}(Xᵢ)`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::functional::Functional;
use crate::hermite::hermite_eval;
use crate::linalg::Matrix;
use crate::special::factorial;
use crate::{Error, Result};

/// Multi-degree, one entry per coordinate.
pub type MultiIndex = Vec<u32>;

fn add_term(map: &mut BTreeMap<MultiIndex, f64>, key: MultiIndex, c: f64) {
    if c == 0.0 {
        return;
    }
    let e = map.entry(key).or_insert(0.0);
    *e += c;
}

fn prune(map: &mut BTreeMap<MultiIndex, f64>) {
    map.retain(|_, c| *c != 0.0);
}

/// Sparse polynomial `Σ c_a x^a` in `dim` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    dim: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = Self::zero(dim);
        add_term(&mut p.terms, vec![0; dim], c);
        p
    }

    pub fn var(dim: usize, i: usize) -> Self {
        let mut key = vec![0; dim];
        key[i] = 1;
        let mut p = Self::zero(dim);
        p.terms.insert(key, 1.0);
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &BTreeMap<MultiIndex, f64> {
        &self.terms
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (k, &c) in &other.terms {
            add_term(&mut out.terms, k.clone(), c);
        }
        prune(&mut out.terms);
        out
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        let mut out = self.clone();
        out.terms.values_mut().for_each(|c| *c *= s);
        prune(&mut out.terms);
        out
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero(self.dim);
        for (ka, &ca) in &self.terms {
            for (kb, &cb) in &other.terms {
                let key = ka.iter().zip(kb).map(|(a, b)| a + b).collect();
                add_term(&mut out.terms, key, ca * cb);
            }
        }
        prune(&mut out.terms);
        out
    }

    pub fn pow(&self, n: u32) -> Polynomial {
        (0..n).fold(Polynomial::constant(self.dim, 1.0), |acc, _| acc.mul(self))
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|k| k.iter().sum()).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(k, &c)| c * k.iter().zip(x).map(|(&e, &xi)| libm::pow(xi, e as f64)).product::<f64>())
            .sum()
    }

    pub fn to_functional(&self) -> Functional {
        Functional::sum(self.terms.iter().map(|(k, &c)| {
            k.iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .fold(Functional::constant(c), |acc, (i, &e)| acc * Functional::var(i).powi(e as i32))
        }))
    }
}

/// `x^k = Σ_j m_{k,j} H_j(x)`, from `x·H_j = H_{j+1} + j·H_{j−1}` in exact
/// integer arithmetic.
pub fn monomial_in_hermite(k: u32) -> Vec<i128> {
    let mut c = vec![1i128];
    for _ in 0..k {
        let mut next = vec![0i128; c.len() + 1];
        for (j, &v) in c.iter().enumerate() {
            next[j + 1] += v;
            if j > 0 {
                next[j - 1] += j as i128 * v;
            }
        }
        c = next;
    }
    c
}

/// `H_k(x) = Σ_j h_{k,j} x^j`, from `H_{k+1} = x·H_k − k·H_{k−1}` exactly.
pub fn hermite_in_monomials(k: u32) -> Vec<i128> {
    let (mut prev, mut cur) = (Vec::<i128>::new(), vec![1i128]);
    for j in 0..k {
        let mut next = vec![0i128; cur.len() + 1];
        for (i, &v) in cur.iter().enumerate() {
            next[i + 1] += v;
        }
        for (i, &v) in prev.iter().enumerate() {
            next[i] -= j as i128 * v;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// Finite Wiener chaos expansion `F = Σ_a c_a ∏ H_{aᵢ}(Xᵢ)`.
///
/// The grade of a basis element is `q = Σ aᵢ`; the `q`-th chaos projection
/// `J_q F` collects the terms of grade `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosExpansion {
    dim: usize,
    coeffs: BTreeMap<MultiIndex, f64>,
}

impl ChaosExpansion {
    pub fn zero(dim: usize) -> Self {
        Self { dim, coeffs: BTreeMap::new() }
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (MultiIndex, f64)>) -> Result<Self> {
        let mut out = Self::zero(dim);
        for (k, c) in terms {
            if k.len() != dim {
                return Err(Error::ShapeMismatch(alloc::format!(
                    "multi-index of length {} in dimension {dim}",
                    k.len()
                )));
            }
            add_term(&mut out.coeffs, k, c);
        }
        prune(&mut out.coeffs);
        Ok(out)
    }

    /// `I₁(h) = Σ hᵢ H₁(Xᵢ)`.
    pub fn first_chaos(h: &[f64]) -> Self {
        let dim = h.len();
        let terms = h.iter().enumerate().map(|(i, &c)| {
            let mut k = vec![0; dim];
            k[i] = 1;
            (k, c)
        });
        Self::from_terms(dim, terms).expect("indices sized to dim")
    }

    /// `Σ λᵢ H₂(Xᵢ)`.
    pub fn second_chaos(lambda: &[f64]) -> Self {
        let dim = lambda.len();
        let terms = lambda.iter().enumerate().map(|(i, &c)| {
            let mut k = vec![0; dim];
            k[i] = 2;
            (k, c)
        });
        Self::from_terms(dim, terms).expect("indices sized to dim")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coefficients(&self) -> &BTreeMap<MultiIndex, f64> {
        &self.coeffs
    }

    pub fn coefficient(&self, key: &[u32]) -> f64 {
        self.coeffs.get(key).copied().unwrap_or(0.0)
    }

    /// Grades carrying a nonzero coefficient, ascending.
    pub fn grades(&self) -> Vec<u32> {
        let mut g: Vec<u32> = self.coeffs.keys().map(|k| k.iter().sum()).collect();
        g.sort_unstable();
        g.dedup();
        g
    }

    /// `J_q F`.
    pub fn project(&self, q: u32) -> ChaosExpansion {
        self.map_grades(|g| if g == q { 1.0 } else { 0.0 })
    }

    /// Multiplies the grade-`q` part by `factor(q)`.
    pub fn map_grades(&self, factor: impl Fn(u32) -> f64) -> ChaosExpansion {
        let mut out = self.clone();
        for (k, c) in out.coeffs.iter_mut() {
            *c *= factor(k.iter().sum());
        }
        prune(&mut out.coeffs);
        out
    }

    /// `E[F]`, the grade-0 coefficient.
    pub fn expectation(&self) -> f64 {
        self.coefficient(&vec![0; self.dim])
    }

    /// `E[F²] = Σ c_a² a!`.
    pub fn second_moment(&self) -> f64 {
        self.coeffs.iter().map(|(k, &c)| c * c * k.iter().map(|&e| factorial(e as usize)).product::<f64>()).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.expectation();
        self.second_moment() - m * m
    }

    pub fn add(&self, other: &ChaosExpansion) -> ChaosExpansion {
        let mut out = self.clone();
        for (k, &c) in &other.coeffs {
            add_term(&mut out.coeffs, k.clone(), c);
        }
        prune(&mut out.coeffs);
        out
    }

    pub fn scale(&self, s: f64) -> ChaosExpansion {
        self.map_grades(|_| s)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .map(|(k, &c)| c * k.iter().zip(x).map(|(&e, &xi)| hermite_eval(e as usize, xi)).product::<f64>())
            .sum()
    }

    /// `∂F/∂x_var`, using `H_k′ = k H_{k−1}`.
    pub fn partial(&self, var: usize) -> ChaosExpansion {
        let mut out = ChaosExpansion::zero(self.dim);
        for (k, &c) in &self.coeffs {
            if k[var] > 0 {
                let mut key = k.clone();
                key[var] -= 1;
                add_term(&mut out.coeffs, key, c * k[var] as f64);
            }
        }
        out
    }

    /// Exact gradient at `x`.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|i| self.partial(i).eval(x)).collect()
    }

    /// Exact Hessian at `x`.
    pub fn hessian(&self, x: &[f64]) -> Matrix {
        let first: Vec<ChaosExpansion> = (0..self.dim).map(|i| self.partial(i)).collect();
        Matrix::from_fn(self.dim, self.dim, |i, j| first[i].partial(j).eval(x))
    }

    /// Expansion in monomials.
    pub fn to_polynomial(&self) -> Polynomial {
        let mut out = Polynomial::zero(self.dim);
        for (k, &c) in &self.coeffs {
            let mut term = Polynomial::constant(self.dim, c);
            for (i, &e) in k.iter().enumerate() {
                let mut factor = Polynomial::zero(self.dim);
                for (p, &h) in hermite_in_monomials(e).iter().enumerate() {
                    let mut key = vec![0; self.dim];
                    key[i] = p as u32;
                    add_term(&mut factor.terms, key, h as f64);
                }
                term = term.mul(&factor);
            }
            out = out.add(&term);
        }
        out
    }

    pub fn to_functional(&self) -> Functional {
        self.to_polynomial().to_functional()
    }
}

/// Chaos decomposition of a polynomial functional over `dim` coordinates.
///
/// Each monomial `∏ xᵢ^{kᵢ}` is rewritten exactly through
/// [`monomial_in_hermite`]; no quadrature is involved.
pub fn chaos_decompose(p: &Functional, dim: usize) -> Result<ChaosExpansion> {
    if !p.is_polynomial() {
        return Err(Error::NonPolynomial);
    }
    let poly = p.to_polynomial(dim.max(p.arity()))?;
    decompose_polynomial(&poly)
}

pub fn decompose_polynomial(poly: &Polynomial) -> Result<ChaosExpansion> {
    let dim = poly.dim();
    let mut out = ChaosExpansion::zero(dim);
    for (k, &c) in poly.terms() {
        // tensor product of the one-dimensional expansions
        let mut partial: Vec<(MultiIndex, f64)> = vec![(vec![0; dim], c)];
        for (i, &e) in k.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let m = monomial_in_hermite(e);
            let mut next = Vec::with_capacity(partial.len() * m.len());
            for (key, v) in &partial {
                for (j, &mj) in m.iter().enumerate() {
                    if mj != 0 {
                        let mut nk = key.clone();
                        nk[i] = j as u32;
                        next.push((nk, v * mj as f64));
                    }
                }
            }
            partial = next;
        }
        for (key, v) in partial {
            add_term(&mut out.coeffs, key, v);
        }
    }
    prune(&mut out.coeffs);
    Ok(out)
}

/// Generator `L = Σ_q (−q) J_q`.
pub fn apply_l(c: &ChaosExpansion) -> ChaosExpansion {
    c.map_grades(|q| -(q as f64))
}

/// Pseudo-inverse `L⁻¹ = −Σ_{q≥1} q⁻¹ J_q`.
pub fn apply_l_inverse(c: &ChaosExpansion) -> ChaosExpansion {
    c.map_grades(|q| if q == 0 { 0.0 } else { -1.0 / q as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_tables() {
        assert_eq!(monomial_in_hermite(2), vec![1, 0, 1]);
        assert_eq!(monomial_in_hermite(3), vec![0, 3, 0, 1]);
        assert_eq!(hermite_in_monomials(4), vec![3, 0, -6, 0, 1]);
    }

    #[test]
    fn decompositions() {
        let x = Functional::var(0);
        let c = chaos_decompose(&x.powi(2), 1).unwrap();
        assert_eq!(c.grades(), vec![0, 2]);
        assert_eq!(c.coefficient(&[0]), 1.0);
        assert_eq!(c.coefficient(&[2]), 1.0);
        let c = chaos_decompose(&x.powi(3), 1).unwrap();
        assert_eq!((c.coefficient(&[1]), c.coefficient(&[3])), (3.0, 1.0));
        let l = [1.0, 0.5];
        let c = chaos_decompose(&Functional::second_chaos(&l), 2).unwrap();
        assert_eq!(c, ChaosExpansion::second_chaos(&l));
        assert!(chaos_decompose(&x.recip(), 1).is_err());
    }

    #[test]
    fn generator_and_inverse() {
        let c = ChaosExpansion::from_terms(2, [(vec![0, 0], 2.0), (vec![2, 0], 1.0), (vec![1, 2], -0.5)]).unwrap();
        assert_eq!(apply_l(&ChaosExpansion::second_chaos(&[1.0])).coefficient(&[2]), -2.0);
        let back = apply_l(&apply_l_inverse(&c));
        let mut centered = c.clone();
        centered.coeffs.remove(&vec![0, 0]);
        assert_eq!(back, centered);
    }

    #[test]
    fn round_trip_through_monomials() {
        let c = ChaosExpansion::from_terms(2, [(vec![3, 1], 0.7), (vec![0, 4], -1.1), (vec![1, 0], 2.0)]).unwrap();
        let back = decompose_polynomial(&c.to_polynomial()).unwrap();
        for (k, v) in c.coefficients() {
            assert!((back.coefficient(k) - v).abs() < 1e-12);
        }
        let p = [0.4, -1.3];
        assert!((c.eval(&p) - c.to_functional().eval(&p).unwrap()).abs() < 1e-12);
    }
}
