//! Finite-dimensional Malliavin calculus.
//!
//! The isonormal process is truncated to `N` standard Gaussian coordinates.
//! Functionals are symbolic expressions ([`Functional`]) evaluated to
//! truncated Taylor jets ([`Jet`]); the Malliavin derivative is the gradient
//! and the divergence is `δ(u) = Σ uᵢxᵢ − Σ ∂ᵢuᵢ`. Polynomial functionals
//! also admit exact chaos expansions ([`ChaosExpansion`]) on which the
//! generator `L` and its pseudo-inverse act by grade.

mod calculus;
mod chaos;
mod contract;
mod functional;
mod jet;

pub use calculus::{
    directional, divergence, divergence_jets, gk_decomposition, gk_from_weights, gk_sequence, iterated_directional,
    jet_eval, malliavin_derivative, tk_sequence, Engine, GkDecomposition, MalliavinWeights,
};
pub use chaos::{
    apply_l, apply_l_inverse, chaos_decompose, decompose_polynomial, hermite_in_monomials, monomial_in_hermite,
    ChaosExpansion, MultiIndex, Polynomial,
};
pub use contract::{contract, Kernel};
pub use functional::Functional;
pub use jet::{Jet, JetSpace, DEFAULT_BUDGET, DEFAULT_MAX_ORDER, DIVISION_GUARD};
