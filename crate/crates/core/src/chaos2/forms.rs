//! Exact Malliavin weights of `F = Σ λᵢ(xᵢ² − 1)` as Laurent polynomials in
//! the weighted power sums `P_m = Σ λᵢ^m xᵢ²`.
//!
//! With `DF = (2λᵢxᵢ)`, `w = ‖DF‖² = 4P₂` and `u = DF/w`, the derivative along
//! `u` maps a function of the power sums to
//! `D_u g = Σ_m (∂g/∂P_m)·P_{m+1}/P₂`, and
//! `δ_u = (P₁ − Σλᵢ)/(2P₂) + P₃/P₂²`. Every `G_k` is therefore a finite sum of
//! monomials `∏ P_m^{e_m}` with `e₂` possibly negative.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

/// Number of power sums tracked (`P₁ … P_NP`).
pub const NP: usize = 12;

type Exps = [i8; NP];

/// Laurent polynomial in `P₁ … P_NP`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PowerForm {
    terms: Vec<(Exps, f64)>,
}

impl PowerForm {
    fn from_map(map: BTreeMap<Exps, f64>) -> Self {
        Self { terms: map.into_iter().filter(|(_, c)| *c != 0.0).collect() }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_map(BTreeMap::from([([0; NP], c)]))
    }

    /// `c·∏ P_m^{e_m}` from `(m, e)` pairs (1-based `m`).
    pub fn monomial(c: f64, powers: &[(usize, i8)]) -> Self {
        let mut e = [0; NP];
        for &(m, p) in powers {
            e[m - 1] += p;
        }
        Self::from_map(BTreeMap::from([(e, c)]))
    }

    pub fn terms(&self) -> usize {
        self.terms.len()
    }

    /// Largest power-sum index present.
    pub fn max_index(&self) -> usize {
        self.terms
            .iter()
            .flat_map(|(e, _)| e.iter().enumerate().filter(|(_, &v)| v != 0).map(|(m, _)| m + 1))
            .max()
            .unwrap_or(0)
    }

    fn accumulate(map: &mut BTreeMap<Exps, f64>, e: Exps, c: f64) {
        *map.entry(e).or_insert(0.0) += c;
    }

    pub fn add(&self, other: &PowerForm) -> PowerForm {
        let mut map = BTreeMap::new();
        for (e, c) in self.terms.iter().chain(&other.terms) {
            Self::accumulate(&mut map, *e, *c);
        }
        Self::from_map(map)
    }

    pub fn scale(&self, s: f64) -> PowerForm {
        Self { terms: self.terms.iter().map(|(e, c)| (*e, c * s)).collect() }
    }

    pub fn mul(&self, other: &PowerForm) -> PowerForm {
        let mut map = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let mut e = *ea;
                for (x, y) in e.iter_mut().zip(eb) {
                    *x += y;
                }
                Self::accumulate(&mut map, e, ca * cb);
            }
        }
        Self::from_map(map)
    }

    /// `D_u` applied to the form.
    pub fn du(&self) -> PowerForm {
        let mut map = BTreeMap::new();
        for (e, c) in &self.terms {
            for m in 0..NP {
                if e[m] == 0 {
                    continue;
                }
                assert!(m + 1 < NP, "power-sum index beyond P_{NP}");
                let mut d = *e;
                d[m] -= 1;
                d[m + 1] += 1;
                d[1] -= 1;
                Self::accumulate(&mut map, d, c * e[m] as f64);
            }
        }
        Self::from_map(map)
    }

    /// Evaluates at power sums `p[m − 1] = P_m`.
    pub fn eval(&self, p: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut v = *c;
                for (m, &k) in e.iter().enumerate() {
                    if k != 0 {
                        v *= ipow(p[m], k);
                    }
                }
                v
            })
            .sum()
    }
}

fn ipow(x: f64, k: i8) -> f64 {
    let mut n = k.unsigned_abs();
    let mut base = if k < 0 { 1.0 / x } else { x };
    let mut acc = 1.0;
    while n > 0 {
        if n & 1 == 1 {
            acc *= base;
        }
        base *= base;
        n >>= 1;
    }
    acc
}

/// Largest `k` for which `G_k` forms are built.
pub const MAX_GK_ORDER: usize = 6;

/// `δ_u`, `D_uδ_u`, `D_u²δ_u`, `D_u³δ_u` and `G_0 … G_K` for one spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightForms {
    pub delta: PowerForm,
    /// `D_u^j δ_u` for `j = 1, 2, 3`.
    pub du_delta: [PowerForm; 3],
    pub gk: Vec<PowerForm>,
    /// Number of power sums needed to evaluate every form.
    pub powers_needed: usize,
}

impl WeightForms {
    /// `trace = Σ λᵢ`; `max_order` is clamped to [`MAX_GK_ORDER`].
    pub fn new(trace: f64, max_order: usize) -> Self {
        let k = max_order.min(MAX_GK_ORDER);
        let delta = PowerForm::monomial(0.5, &[(1, 1), (2, -1)])
            .add(&PowerForm::monomial(-0.5 * trace, &[(2, -1)]))
            .add(&PowerForm::monomial(1.0, &[(3, 1), (2, -2)]));
        let d1 = delta.du();
        let d2 = d1.du();
        let d3 = d2.du();
        let mut gk = alloc::vec![PowerForm::constant(1.0)];
        for j in 0..k {
            let next = gk[j].mul(&delta).add(&gk[j].du().scale(-1.0));
            gk.push(next);
        }
        let powers_needed = gk.iter().chain([&delta, &d1, &d2, &d3]).map(PowerForm::max_index).max().unwrap_or(3);
        Self { delta, du_delta: [d1, d2, d3], gk, powers_needed }
    }
}
