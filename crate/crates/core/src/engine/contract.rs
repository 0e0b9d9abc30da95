//! Contractions `f ⊗_r g` of kernels of order at most two.

use alloc::vec::Vec;

use crate::linalg::Matrix;
use crate::{Error, Result};

/// A kernel on `ℝ^N`: scalar (order 0), vector (order 1), matrix (order 2),
/// or, as the output of an `r = 0` contraction, a dense tensor.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    Scalar(f64),
    Vector(Vec<f64>),
    Matrix(Matrix),
    Tensor { dims: Vec<usize>, data: Vec<f64> },
}

impl Kernel {
    pub fn order(&self) -> usize {
        match self {
            Kernel::Scalar(_) => 0,
            Kernel::Vector(_) => 1,
            Kernel::Matrix(_) => 2,
            Kernel::Tensor { dims, .. } => dims.len(),
        }
    }

    pub fn diag(values: &[f64]) -> Kernel {
        Kernel::Matrix(Matrix::diag(values))
    }

    fn flat(&self) -> (Vec<usize>, &[f64]) {
        match self {
            Kernel::Scalar(v) => (Vec::new(), core::slice::from_ref(v)),
            Kernel::Vector(v) => (alloc::vec![v.len()], v),
            Kernel::Matrix(m) => (alloc::vec![m.rows(), m.cols()], m.as_slice()),
            Kernel::Tensor { dims, data } => (dims.clone(), data),
        }
    }

    /// Hilbert-Schmidt norm `‖f‖`.
    pub fn norm(&self) -> f64 {
        libm::sqrt(self.flat().1.iter().map(|v| v * v).sum())
    }
}

fn mismatch(msg: alloc::string::String) -> Error {
    Error::ShapeMismatch(msg)
}

/// `f ⊗_r g`: contracts the last `r` arguments of `f` with the first `r` of
/// `g`. For symmetric kernels this is the usual contraction; for two
/// matrices `r = 1` is the matrix product and `r = 2` the trace inner product.
pub fn contract(f: &Kernel, g: &Kernel, r: usize) -> Result<Kernel> {
    let (p, q) = (f.order(), g.order());
    if p > 2 || q > 2 {
        return Err(mismatch(alloc::format!("contractions need kernels of order at most 2, got {p} and {q}")));
    }
    if r > p.min(q) {
        return Err(mismatch(alloc::format!("cannot contract {r} arguments of kernels of order {p} and {q}")));
    }
    let (fd, fv) = f.flat();
    let (gd, gv) = g.flat();
    if fd[p - r..] != gd[..r] {
        return Err(mismatch(alloc::format!("contracted dimensions {:?} and {:?} differ", &fd[p - r..], &gd[..r])));
    }
    let inner: usize = gd[..r].iter().product();
    let outer_f: usize = fd[..p - r].iter().product();
    let outer_g: usize = gd[r..].iter().product();
    let mut data = alloc::vec![0.0; outer_f * outer_g];
    for a in 0..outer_f {
        for b in 0..outer_g {
            data[a * outer_g + b] = (0..inner).map(|k| fv[a * inner + k] * gv[k * outer_g + b]).sum();
        }
    }
    let dims: Vec<usize> = fd[..p - r].iter().chain(&gd[r..]).copied().collect();
    Ok(match dims.len() {
        0 => Kernel::Scalar(data[0]),
        1 => Kernel::Vector(data),
        2 => Kernel::Matrix(Matrix::from_rows(dims[0], dims[1], data)?),
        _ => Kernel::Tensor { dims, data },
    })
}
