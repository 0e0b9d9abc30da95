//! Malliavin derivative, divergence and directional derivatives on `ℝ^N`
//! under the standard Gaussian measure, and the `G_k` / `T_k` sequences.
//!
//! With `X ~ N(0, I_N)`, the derivative of a smooth functional is its
//! gradient, and the divergence of a vector field is
//! `δ(u) = Σ uᵢ xᵢ − Σ ∂ᵢuᵢ`. Everything is evaluated pointwise through jets.

use alloc::sync::Arc;
use alloc::vec::Vec;

use super::functional::Functional;
use super::jet::{Jet, JetSpace, DEFAULT_MAX_ORDER};
use crate::{Error, Result};

/// Jet machinery for functionals of `dim` coordinates up to a fixed order.
#[derive(Debug, Clone)]
pub struct Engine {
    space: Arc<JetSpace>,
}

impl Engine {
    pub fn new(dim: usize, order: usize) -> Result<Self> {
        Ok(Self { space: JetSpace::new(dim, order)? })
    }

    pub fn from_space(space: Arc<JetSpace>) -> Self {
        Self { space }
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn order(&self) -> usize {
        self.space.order()
    }

    pub fn jet(&self, f: &Functional, point: &[f64]) -> Result<Jet> {
        f.jet(&self.space, point)
    }

    pub fn coordinates(&self, point: &[f64]) -> Vec<Jet> {
        self.space.coordinates(point)
    }

    /// Weights of the density formula at `point`: see [`MalliavinWeights`].
    pub fn weights(&self, f: &Functional, point: &[f64]) -> Result<MalliavinWeights> {
        let fj = self.jet(f, point)?;
        MalliavinWeights::from_jet(&fj, &self.coordinates(point))
    }
}

fn check_dim(point: &[f64], dim: usize) -> Result<()> {
    if point.len() != dim {
        return Err(Error::ShapeMismatch(alloc::format!("point of dimension {} for {dim} coordinates", point.len())));
    }
    Ok(())
}

/// All mixed partials of `f` at `point` up to total order `order`.
pub fn jet_eval(f: &Functional, point: &[f64], order: usize) -> Result<Jet> {
    Engine::new(point.len(), order)?.jet(f, point)
}

/// `DF` at `point`: the gradient.
pub fn malliavin_derivative(f: &Functional, point: &[f64]) -> Result<Vec<f64>> {
    Ok(jet_eval(f, point, 1)?.gradient())
}

/// `δ(u) = Σ uᵢ·xᵢ − Σ ∂ᵢuᵢ` as a jet one order below the inputs.
pub fn divergence_jets(u: &[Jet], coords: &[Jet]) -> Result<Jet> {
    if u.len() != coords.len() {
        return Err(Error::ShapeMismatch(alloc::format!(
            "vector field with {} components in dimension {}",
            u.len(),
            coords.len()
        )));
    }
    let mut acc: Option<Jet> = None;
    for (i, (ui, xi)) in u.iter().zip(coords).enumerate() {
        let term = &(ui * xi) - &ui.partial(i)?;
        acc = Some(match acc {
            None => term,
            Some(a) => &a + &term,
        });
    }
    acc.ok_or_else(|| Error::ShapeMismatch("empty vector field".into()))
}

/// Pointwise divergence of a vector field of functionals.
pub fn divergence(u: &[Functional], point: &[f64]) -> Result<f64> {
    check_dim(point, u.len())?;
    let engine = Engine::new(point.len(), 1)?;
    let uj = u.iter().map(|ui| engine.jet(ui, point)).collect::<Result<Vec<_>>>()?;
    Ok(divergence_jets(&uj, &engine.coordinates(point))?.value())
}

/// `D_u G = ⟨DG, u⟩`, one order below `g`.
pub fn directional(g: &Jet, u: &[Jet]) -> Result<Jet> {
    let mut acc: Option<Jet> = None;
    for (i, ui) in u.iter().enumerate() {
        let term = &g.partial(i)? * ui;
        acc = Some(match acc {
            None => term,
            Some(a) => &a + &term,
        });
    }
    acc.ok_or_else(|| Error::ShapeMismatch("empty vector field".into()))
}

/// `D_u^k g` at `point` by `k` nested directional derivatives.
pub fn iterated_directional(g: &Functional, u: &[Functional], k: usize, point: &[f64]) -> Result<f64> {
    check_dim(point, u.len())?;
    if k > DEFAULT_MAX_ORDER {
        return Err(Error::OrderOverflow { needed: k, available: DEFAULT_MAX_ORDER });
    }
    let engine = Engine::new(point.len(), k)?;
    let mut cur = engine.jet(g, point)?;
    let uj = u.iter().map(|ui| engine.jet(ui, point)).collect::<Result<Vec<_>>>()?;
    for _ in 0..k {
        cur = directional(&cur, &uj)?;
    }
    Ok(cur.value())
}

/// `w = ‖DF‖²`, `u = DF/w` and `δ_u = δ(u)` as jets, from a jet of `F`.
///
/// With `F` of order `R`, `w` and `u` have order `R − 1` and `δ_u` order `R − 2`.
#[derive(Debug, Clone)]
pub struct MalliavinWeights {
    pub f: Jet,
    pub w: Jet,
    pub u: Vec<Jet>,
    pub delta: Jet,
}

impl MalliavinWeights {
    pub fn from_jet(f: &Jet, coords: &[Jet]) -> Result<Self> {
        if f.order() < 2 {
            return Err(Error::OrderOverflow { needed: 2, available: f.order() });
        }
        let grad = (0..coords.len()).map(|i| f.partial(i)).collect::<Result<Vec<_>>>()?;
        let w = grad.iter().skip(1).fold(&grad[0] * &grad[0], |acc, g| &acc + &(g * g));
        let inv = w.recip()?;
        let u: Vec<Jet> = grad.iter().map(|g| g * &inv).collect();
        let delta = divergence_jets(&u, coords)?;
        Ok(Self { f: f.clone(), w, u, delta })
    }

    pub fn directional(&self, g: &Jet) -> Result<Jet> {
        directional(g, &self.u)
    }
}

/// Pointwise values of `G_k`, `T_k` and `H_k(D_uδ_u, δ_u)` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct GkDecomposition {
    /// `G_0, …, G_{m+1}`.
    pub g: Vec<f64>,
    /// `T_1, …, T_{m+1}`.
    pub t: Vec<f64>,
    /// `H_k(D_uδ_u, δ_u)` for `k = 0, …, m+1`.
    pub hermite: Vec<f64>,
    pub delta_u: f64,
    /// `D_u^j δ_u` for `j = 1, 2, …` as far as the jet order allows.
    pub du_delta: Vec<f64>,
}

impl GkDecomposition {
    /// `G_k − H_k(D_uδ_u, δ_u) − T_k` for `k = 1, …, m+1`.
    pub fn residuals(&self) -> Vec<f64> {
        (1..self.g.len()).map(|k| self.g[k] - self.hermite[k] - self.t[k - 1]).collect()
    }
}

fn jet_hermite(k: usize, lambda: &Jet, x: &Jet) -> Vec<Jet> {
    let one = x.space().constant(1.0);
    let mut out = alloc::vec![one.truncate(lambda.order().min(x.order()))];
    if k >= 1 {
        out.push(x.truncate(lambda.order()));
    }
    for j in 1..k {
        let next = &(x * &out[j]) - &(lambda * &out[j - 1]).scale(j as f64);
        out.push(next);
    }
    out
}

/// Computes `G_0 … G_{m+1}` by `G_{k+1} = G_k δ_u − D_u G_k`, the
/// higher-order terms `T_1 … T_{m+1}` by their own recursion
/// `T_{k+1} = δ_u T_k − D_u T_k − ∂_λH_k(D_uδ_u, δ_u)·D_u²δ_u` with
/// `T_1 = T_2 = 0`, and `H_k(D_uδ_u, δ_u)`, all at `point`.
///
/// Uses jets of order `max(m + 2, 3)`.
pub fn gk_decomposition(f: &Functional, m: usize, point: &[f64]) -> Result<GkDecomposition> {
    let order = (m + 2).max(3);
    if order > DEFAULT_MAX_ORDER {
        return Err(Error::OrderOverflow { needed: order, available: DEFAULT_MAX_ORDER });
    }
    let engine = Engine::new(point.len(), order)?;
    let wts = engine.weights(f, point)?;
    gk_from_weights(&wts, m)
}

/// [`gk_decomposition`] from precomputed weights; the jet of `F` must have
/// order at least `max(m + 2, 3)`.
pub fn gk_from_weights(wts: &MalliavinWeights, m: usize) -> Result<GkDecomposition> {
    let order = wts.f.order();
    let needed = (m + 2).max(3);
    if order < needed {
        return Err(Error::OrderOverflow { needed, available: order });
    }
    let delta = &wts.delta;
    let space = delta.space().clone();

    let mut g = alloc::vec![1.0];
    let mut gj = space.constant(1.0);
    for _ in 0..=m {
        let next = &(&gj * delta) - &wts.directional(&gj)?;
        g.push(next.value());
        gj = next;
    }

    // D_u^j δ_u while the order lasts
    let mut chain = alloc::vec![delta.clone()];
    while chain.last().is_some_and(|j| j.order() > 0) {
        let next = wts.directional(chain.last().expect("nonempty"))?;
        chain.push(next);
    }
    let du_delta: Vec<f64> = chain[1..].iter().map(Jet::value).collect();

    let lambda = &chain[1];
    let herm = jet_hermite(m + 1, lambda, delta);
    let hermite = herm.iter().map(Jet::value).collect();

    let mut t = alloc::vec![0.0; m + 1];
    if m + 1 >= 3 {
        let d2 = &chain[2];
        let mut tj = space.zero();
        for k in 2..=m {
            let dl = herm[k - 2].scale(-((k * (k - 1)) as f64) / 2.0);
            let next = &(&(delta * &tj) - &wts.directional(&tj)?) - &(&dl * d2);
            t[k] = next.value();
            tj = next;
        }
    }
    Ok(GkDecomposition { g, t, hermite, delta_u: delta.value(), du_delta })
}

/// `G_0, …, G_{m+1}` with `u = DF/‖DF‖²`.
pub fn gk_sequence(f: &Functional, m: usize, point: &[f64]) -> Result<Vec<f64>> {
    Ok(gk_decomposition(f, m, point)?.g)
}

/// `T_1, …, T_{m+1}`.
pub fn tk_sequence(f: &Functional, m: usize, point: &[f64]) -> Result<Vec<f64>> {
    Ok(gk_decomposition(f, m, point)?.t)
}
