//! Bracketed scalar root finding.

use crate::{Error, Result};

/// Bisection on `[lo, hi]`; the endpoints must carry opposite signs (or one of
/// them is a root). Stops after `max_iter` halvings or when the bracket can no
/// longer be split in floating point.
pub fn bisect(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, max_iter: usize, index: usize) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return Err(Error::BracketSignFailure { index, lo, hi });
    }
    for _ in 0..max_iter {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 200, 0).unwrap();
        assert!((r - core::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn rejects_bracket_without_sign_change() {
        assert!(matches!(bisect(|x| x * x + 1.0, -1.0, 1.0, 10, 4), Err(Error::BracketSignFailure { index: 4, .. })));
    }
}
