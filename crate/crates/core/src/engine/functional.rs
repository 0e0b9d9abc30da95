//! Symbolic functionals of the Gaussian coordinates `X₁ … X_N`.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};

use super::jet::{Jet, JetSpace, DIVISION_GUARD};
use crate::{Error, Result};

#[derive(Debug)]
enum Node {
    Const(f64),
    Var(usize),
    Add(Functional, Functional),
    Sub(Functional, Functional),
    Mul(Functional, Functional),
    /// Quotient; the denominator is checked against the division guard
    /// whenever it is evaluated.
    Div(Functional, Functional),
    Neg(Functional),
    Powi(Functional, i32),
}

/// Immutable expression DAG; cloning shares the tree.
#[derive(Clone)]
pub struct Functional(Arc<Node>);

impl fmt::Debug for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Node::Const(c) => write!(f, "{c}"),
            Node::Var(i) => write!(f, "X{}", i + 1),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "{a}*{b}"),
            Node::Div(a, b) => write!(f, "{a}/{b}"),
            Node::Neg(a) => write!(f, "-{a}"),
            Node::Powi(a, n) => write!(f, "{a}^{n}"),
        }
    }
}

impl Functional {
    fn node(n: Node) -> Self {
        Functional(Arc::new(n))
    }

    pub fn constant(c: f64) -> Self {
        Self::node(Node::Const(c))
    }

    /// Coordinate `X_{i+1}` (zero-based index).
    pub fn var(i: usize) -> Self {
        Self::node(Node::Var(i))
    }

    pub fn powi(&self, n: i32) -> Self {
        match n {
            0 => Self::constant(1.0),
            1 => self.clone(),
            _ => Self::node(Node::Powi(self.clone(), n)),
        }
    }

    pub fn recip(&self) -> Self {
        Self::constant(1.0) / self.clone()
    }

    /// `Σ terms`; the empty sum is zero.
    pub fn sum(terms: impl IntoIterator<Item = Functional>) -> Self {
        terms.into_iter().reduce(|a, b| a + b).unwrap_or_else(|| Self::constant(0.0))
    }

    /// First-chaos variable `I₁(h) = Σ hᵢ Xᵢ`.
    pub fn first_chaos(h: &[f64]) -> Self {
        Self::sum(h.iter().enumerate().map(|(i, &c)| Self::var(i) * c))
    }

    /// Second-chaos variable `Σ λᵢ (Xᵢ² − 1)`.
    pub fn second_chaos(lambda: &[f64]) -> Self {
        Self::sum(lambda.iter().enumerate().map(|(i, &l)| (Self::var(i).powi(2) - 1.0) * l))
    }

    pub fn as_constant(&self) -> Option<f64> {
        match &*self.0 {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// One past the largest coordinate index referenced (0 for constants).
    pub fn arity(&self) -> usize {
        match &*self.0 {
            Node::Const(_) => 0,
            Node::Var(i) => i + 1,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => a.arity().max(b.arity()),
            Node::Neg(a) | Node::Powi(a, _) => a.arity(),
        }
    }

    /// True when the expression has no quotient and no negative power.
    pub fn is_polynomial(&self) -> bool {
        match &*self.0 {
            Node::Const(_) | Node::Var(_) => true,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) => a.is_polynomial() && b.is_polynomial(),
            Node::Div(..) => false,
            Node::Neg(a) => a.is_polynomial(),
            Node::Powi(a, n) => *n >= 0 && a.is_polynomial(),
        }
    }

    /// Plain floating-point evaluation.
    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        Ok(match &*self.0 {
            Node::Const(c) => *c,
            Node::Var(i) => *point.get(*i).ok_or_else(|| arity_error(*i, point.len()))?,
            Node::Add(a, b) => a.eval(point)? + b.eval(point)?,
            Node::Sub(a, b) => a.eval(point)? - b.eval(point)?,
            Node::Mul(a, b) => a.eval(point)? * b.eval(point)?,
            Node::Div(a, b) => {
                let d = b.eval(point)?;
                guard(d)?;
                a.eval(point)? / d
            }
            Node::Neg(a) => -a.eval(point)?,
            Node::Powi(a, n) => {
                let v = a.eval(point)?;
                if *n < 0 {
                    guard(v)?;
                }
                libm::pow(v, *n as f64)
            }
        })
    }

    /// Jet of the functional at `point`, at the full order of `space`.
    ///
    /// Shared subexpressions are evaluated once.
    pub fn jet(&self, space: &Arc<JetSpace>, point: &[f64]) -> Result<Jet> {
        if point.len() != space.dim() {
            return Err(Error::ShapeMismatch(alloc::format!(
                "point of dimension {} for a {}-variable jet space",
                point.len(),
                space.dim()
            )));
        }
        let mut memo = BTreeMap::new();
        self.jet_memo(space, point, &mut memo)
    }

    fn jet_memo(&self, space: &Arc<JetSpace>, point: &[f64], memo: &mut BTreeMap<usize, Jet>) -> Result<Jet> {
        let key = Arc::as_ptr(&self.0) as usize;
        if let Some(j) = memo.get(&key) {
            return Ok(j.clone());
        }
        let j = match &*self.0 {
            Node::Const(c) => space.constant(*c),
            Node::Var(i) => {
                let x = *point.get(*i).ok_or_else(|| arity_error(*i, point.len()))?;
                space.variable(*i, x)
            }
            Node::Add(a, b) => &a.jet_memo(space, point, memo)? + &b.jet_memo(space, point, memo)?,
            Node::Sub(a, b) => &a.jet_memo(space, point, memo)? - &b.jet_memo(space, point, memo)?,
            Node::Mul(a, b) => &a.jet_memo(space, point, memo)? * &b.jet_memo(space, point, memo)?,
            Node::Div(a, b) => {
                let d = b.jet_memo(space, point, memo)?;
                a.jet_memo(space, point, memo)?.div_jet(&d)?
            }
            Node::Neg(a) => -&a.jet_memo(space, point, memo)?,
            Node::Powi(a, n) => a.jet_memo(space, point, memo)?.powi(*n)?,
        };
        memo.insert(key, j.clone());
        Ok(j)
    }

    /// Symbolic partial derivative `∂/∂X_{var+1}`, with light constant folding.
    pub fn partial(&self, var: usize) -> Functional {
        match &*self.0 {
            Node::Const(_) => Self::constant(0.0),
            Node::Var(i) => Self::constant(if *i == var { 1.0 } else { 0.0 }),
            Node::Add(a, b) => a.partial(var) + b.partial(var),
            Node::Sub(a, b) => a.partial(var) - b.partial(var),
            Node::Mul(a, b) => a.partial(var) * b.clone() + a.clone() * b.partial(var),
            Node::Div(a, b) => (a.partial(var) * b.clone() - a.clone() * b.partial(var)) / b.powi(2),
            Node::Neg(a) => -a.partial(var),
            Node::Powi(a, n) => a.powi(n - 1) * a.partial(var) * (*n as f64),
        }
    }

    /// Symbolic gradient over `dim` coordinates.
    pub fn gradient(&self, dim: usize) -> Vec<Functional> {
        (0..dim).map(|i| self.partial(i)).collect()
    }

    /// Expands a polynomial functional into monomials in `dim` variables.
    pub fn to_polynomial(&self, dim: usize) -> Result<super::chaos::Polynomial> {
        use super::chaos::Polynomial;
        Ok(match &*self.0 {
            Node::Const(c) => Polynomial::constant(dim, *c),
            Node::Var(i) => {
                if *i >= dim {
                    return Err(arity_error(*i, dim));
                }
                Polynomial::var(dim, *i)
            }
            Node::Add(a, b) => a.to_polynomial(dim)?.add(&b.to_polynomial(dim)?),
            Node::Sub(a, b) => a.to_polynomial(dim)?.add(&b.to_polynomial(dim)?.scale(-1.0)),
            Node::Mul(a, b) => a.to_polynomial(dim)?.mul(&b.to_polynomial(dim)?),
            Node::Div(..) => return Err(Error::NonPolynomial),
            Node::Neg(a) => a.to_polynomial(dim)?.scale(-1.0),
            Node::Powi(a, n) => {
                if *n < 0 {
                    return Err(Error::NonPolynomial);
                }
                a.to_polynomial(dim)?.pow(*n as u32)
            }
        })
    }
}

fn guard(v: f64) -> Result<()> {
    if v.abs() > DIVISION_GUARD && v.is_finite() {
        Ok(())
    } else {
        Err(Error::SingularEvaluation { value: v })
    }
}

fn arity_error(i: usize, n: usize) -> Error {
    Error::ShapeMismatch(alloc::format!("coordinate X{} used with a {n}-dimensional point", i + 1))
}

fn simplify_add(a: Functional, b: Functional) -> Functional {
    match (a.as_constant(), b.as_constant()) {
        (Some(x), Some(y)) => Functional::constant(x + y),
        (Some(0.0), _) => b,
        (_, Some(0.0)) => a,
        _ => Functional::node(Node::Add(a, b)),
    }
}

fn simplify_sub(a: Functional, b: Functional) -> Functional {
    match (a.as_constant(), b.as_constant()) {
        (Some(x), Some(y)) => Functional::constant(x - y),
        (_, Some(0.0)) => a,
        (Some(0.0), _) => -b,
        _ => Functional::node(Node::Sub(a, b)),
    }
}

fn simplify_mul(a: Functional, b: Functional) -> Functional {
    match (a.as_constant(), b.as_constant()) {
        (Some(x), Some(y)) => Functional::constant(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => Functional::constant(0.0),
        (Some(1.0), _) => b,
        (_, Some(1.0)) => a,
        _ => Functional::node(Node::Mul(a, b)),
    }
}

fn simplify_div(a: Functional, b: Functional) -> Functional {
    match (a.as_constant(), b.as_constant()) {
        (Some(0.0), _) => Functional::constant(0.0),
        (_, Some(1.0)) => a,
        _ => Functional::node(Node::Div(a, b)),
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $simp:ident) => {
        impl $tr<Functional> for Functional {
            type Output = Functional;
            fn $method(self, rhs: Functional) -> Functional {
                $simp(self, rhs)
            }
        }
        impl $tr<&Functional> for &Functional {
            type Output = Functional;
            fn $method(self, rhs: &Functional) -> Functional {
                $simp(self.clone(), rhs.clone())
            }
        }
        impl $tr<f64> for Functional {
            type Output = Functional;
            fn $method(self, rhs: f64) -> Functional {
                $simp(self, Functional::constant(rhs))
            }
        }
        impl $tr<Functional> for f64 {
            type Output = Functional;
            fn $method(self, rhs: Functional) -> Functional {
                $simp(Functional::constant(self), rhs)
            }
        }
    };
}

binop!(Add, add, simplify_add);
binop!(Sub, sub, simplify_sub);
binop!(Mul, mul, simplify_mul);
binop!(Div, div, simplify_div);

impl Neg for Functional {
    type Output = Functional;
    fn neg(self) -> Functional {
        match self.as_constant() {
            Some(c) => Functional::constant(-c),
            None => Functional::node(Node::Neg(self)),
        }
    }
}

impl Neg for &Functional {
    type Output = Functional;
    fn neg(self) -> Functional {
        -self.clone()
    }
}
