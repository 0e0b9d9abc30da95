//! Exact moments, negative moments of `‖DF‖²`, and bound certificates.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use libm::{exp, log, log1p, pow, sqrt};

use super::Spectrum;
use crate::quad::{adaptive_upper, Tolerance};
use crate::report::{BoundReport, ConditionReport};
use crate::rng::{chunks, normal, substream, CHUNK};
use crate::special::ln_gamma;
use crate::stats::mean_se;
use crate::{Error, Result};

/// Closed-form moments of `F = Σ λᵢ(Xᵢ² − 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactMoments {
    /// `σ² = E[F²] = 2Σλᵢ²`.
    pub sigma2: f64,
    /// `Var(‖DF‖²) = 32Σλᵢ⁴`.
    pub var_dfnorm: f64,
    /// `E[F⁴] − 3σ⁴ = 48Σλᵢ⁴`.
    pub excess_kurtosis: f64,
    /// `E[F⁴]`.
    pub fourth_moment: f64,
}

pub fn exact_moments(s: &Spectrum) -> ExactMoments {
    let s2 = s.power_sum(2);
    let s4 = s.power_sum(4);
    let sigma2 = 2.0 * s2;
    ExactMoments {
        sigma2,
        var_dfnorm: 32.0 * s4,
        excess_kurtosis: 48.0 * s4,
        fourth_moment: 3.0 * sigma2 * sigma2 + 48.0 * s4,
    }
}

/// `E[(Σ λᵢ² Xᵢ²)^{−α}]` with its quadrature error and the comparison bound
/// `min_{2α < n ≤ N₀} |λ_n|^{−2α} E[(χ²_n)^{−α}]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegativeMoment {
    pub value: f64,
    pub abserr: f64,
    pub bound: f64,
    pub evaluations: usize,
}

/// Exact negative moment via
/// `E[Q^{−α}] = Γ(α)⁻¹ ∫₀^∞ y^{α−1} ∏ (1 + 2λᵢ²y)^{−1/2} dy`.
///
/// The integral is taken in `s = ln y`, centered at the maximum of the
/// log-integrand, with the product accumulated as a sum of `log1p` terms.
pub fn negative_moment(s: &Spectrum, alpha: f64) -> Result<NegativeMoment> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::invalid("alpha", format!("must be positive and finite, got {alpha}")));
    }
    let sq: Vec<f64> = s.eigenvalues().iter().filter(|&&l| l != 0.0).map(|&l| 2.0 * l * l).collect();
    let n0 = sq.len();
    if (n0 as f64) <= 2.0 * alpha {
        return Err(Error::DivergentMoment { nonzero: n0, alpha });
    }
    let log_integrand = |t: f64| {
        let y = exp(t);
        alpha * t - 0.5 * sq.iter().map(|&c| log1p(c * y)).sum::<f64>()
    };
    // slope α − ½Σ cy/(1 + cy) decreases from α to α − N₀/2 < 0
    let slope = |t: f64| {
        let y = exp(t);
        alpha - 0.5 * sq.iter().map(|&c| c * y / (1.0 + c * y)).sum::<f64>()
    };
    let mut lo = -log(sq[0]) - 1.0;
    while slope(lo) <= 0.0 {
        lo -= 10.0;
    }
    let mut hi = -log(sq[n0 - 1]) + 1.0;
    while slope(hi) >= 0.0 {
        hi += 10.0;
    }
    let center = crate::root::bisect(slope, lo, hi, 200, 0)?;
    let peak = log_integrand(center);

    let tol = Tolerance { abs: 1e-14, rel: 1e-12, max_intervals: 4000 };
    let right = adaptive_upper(|v| exp(log_integrand(center + v) - peak), 0.0, tol)?;
    let left = adaptive_upper(|v| exp(log_integrand(center - v) - peak), 0.0, tol)?;
    let scale = exp(peak - ln_gamma(alpha));

    let mut bound = f64::INFINITY;
    for n in 1..=n0 {
        let nf = n as f64;
        if nf <= 2.0 * alpha {
            continue;
        }
        // sq[n−1] = 2λ_n²
        let b = exp(ln_gamma(nf / 2.0 - alpha) - ln_gamma(nf / 2.0)) * pow(sq[n - 1], -alpha);
        bound = bound.min(b);
    }
    Ok(NegativeMoment {
        value: (right.value + left.value) * scale,
        abserr: (right.abserr + left.abserr) * scale,
        bound,
        evaluations: right.evaluations + left.evaluations,
    })
}

/// Sums of `Q^{−α}` and `Q^{−2α}`, `Q = Σλᵢ²Xᵢ²`, over one chunk of
/// substream `stream`.
pub fn negative_moment_chunk(s: &Spectrum, alpha: f64, seed: u64, stream: u64, len: usize) -> (f64, f64) {
    let mut rng = substream(seed, stream);
    let sq: Vec<f64> = s.eigenvalues().iter().map(|l| l * l).collect();
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..len {
        let q: f64 = sq
            .iter()
            .map(|l2| {
                let x = normal(&mut rng);
                l2 * x * x
            })
            .sum();
        let v = pow(q, -alpha);
        s1 += v;
        s2 += v * v;
    }
    (s1, s2)
}

/// Monte Carlo mean and standard error of `E[Q^{−α}]`.
pub fn negative_moment_mc(s: &Spectrum, alpha: f64, n: usize, seed: u64) -> Result<(f64, f64)> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::invalid("alpha", format!("must be positive and finite, got {alpha}")));
    }
    if n < 2 {
        return Err(Error::EmptySample);
    }
    let (mut s1, mut s2) = (0.0, 0.0);
    for (stream, len) in chunks(n, CHUNK) {
        let (a, b) = negative_moment_chunk(s, alpha, seed, stream, len);
        s1 += a;
        s2 += b;
    }
    Ok(mean_se(s1, s2, n as u64))
}

/// `M_β(F) = (E‖DF‖^{−β})^{1/β} = ½·(E[(Σλᵢ²Xᵢ²)^{−β/2}])^{1/β}`.
pub fn m_beta(s: &Spectrum, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::invalid("beta", format!("must be positive, got {beta}")));
    }
    Ok(0.5 * pow(negative_moment(s, beta / 2.0)?.value, 1.0 / beta))
}

/// Assembles `C·√(E[F⁴] − 3σ⁴)` with
/// `C = C_q(σ⁻¹M₆² + M₆³ + σ⁻³)`; `C_q` is the caller's constant.
pub fn certificate_qrate(s: &Spectrum, cq: f64) -> Result<BoundReport> {
    let n0 = s.nonzero_count();
    if n0 <= 6 {
        return Err(Error::CertificateUnavailable(format!(
            "M_6(F) is infinite: {n0} nonzero eigenvalues, more than 6 required"
        )));
    }
    let m = exact_moments(s);
    let sigma = sqrt(m.sigma2);
    let m6 = m_beta(s, 6.0)?;
    let gap = sqrt(m.excess_kurtosis);
    let c = cq * (m6 * m6 / sigma + m6 * m6 * m6 + 1.0 / (sigma * sigma * sigma));
    let mut report = BoundReport::new("qrate")
        .with_component("sigma2", m.sigma2)
        .with_component("M6", m6)
        .with_component("fourth_moment_gap", gap)
        .with_component("C", c)
        .with_constant("C_q", cq);
    report.value = c * gap;
    if let Some(t) = s.tail() {
        report = report.with_component("sigma2_tail_bound", 2.0 * t.bound);
        report.notes.push(format!("{} truncated eigenvalues are not included in the components", t.count));
    }
    Ok(report)
}

/// Both readings of the second-chaos sandwich
/// `¼Var(‖DF‖²) ≤ ⅙·gap ≤ Var(‖DF‖²)`: `gap = E[F⁴] − (E[F²])²` as
/// displayed, and `gap = E[F⁴] − 3σ⁴`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquiReport {
    pub lower: f64,
    pub middle_displayed: f64,
    pub middle_excess: f64,
    pub upper: f64,
    pub displayed_lower_holds: bool,
    pub displayed_upper_holds: bool,
    pub excess_lower_holds: bool,
    pub excess_upper_holds: bool,
}

pub fn equi_report(s: &Spectrum) -> EquiReport {
    let m = exact_moments(s);
    let q = 2.0;
    let lower = m.var_dfnorm / (q * q);
    let upper = (q - 1.0) * m.var_dfnorm;
    let k = (q - 1.0) / (3.0 * q);
    let middle_displayed = k * (m.fourth_moment - m.sigma2 * m.sigma2);
    let middle_excess = k * m.excess_kurtosis;
    let le = |a: f64, b: f64| a <= b + 1e-12 * b.abs().max(a.abs());
    EquiReport {
        lower,
        middle_displayed,
        middle_excess,
        upper,
        displayed_lower_holds: le(lower, middle_displayed),
        displayed_upper_holds: le(middle_displayed, upper),
        excess_lower_holds: le(lower, middle_excess),
        excess_upper_holds: le(middle_excess, upper),
    }
}

/// Thresholds for [`check_i2th_conditions`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct I2thThresholds {
    /// Target `σ²`; `None` takes the last element's `2Σλ²`.
    pub sigma2: Option<f64>,
    /// Relative tolerance on `|2Σλ² − σ²|` at the last element.
    pub sigma_rel_tol: f64,
    /// Largest acceptable `Σλ⁴` at the last element.
    pub fourth_tol: f64,
    /// Required lower bound on `inf_n sup_{i>K} |λ_{n,i}|√i`.
    pub delta: f64,
}

impl Default for I2thThresholds {
    fn default() -> Self {
        Self { sigma2: None, sigma_rel_tol: 1e-2, fourth_tol: 1e-2, delta: 1e-2 }
    }
}

/// Evaluates the three spectral conditions on a sequence of spectra. Indices
/// in `sup_{i>K}` are 1-based positions in the magnitude-sorted spectrum,
/// with `K = 6m + 6·max(⌊m/2⌋, 1)`.
pub fn check_i2th_conditions(spectra: &[Spectrum], m: usize, th: &I2thThresholds) -> ConditionReport {
    let k = 6 * m + 6 * (m / 2).max(1);
    let mut report = ConditionReport {
        columns: ["two_sum_sq", "sum_fourth", "tail_sup", "rate"].iter().map(|c| c.to_string()).collect(),
        ..Default::default()
    };
    report.notes.push(format!("tail index threshold K = {k}"));
    if spectra.is_empty() {
        report.notes.push("empty sequence".to_string());
        for name in ["i", "ii", "iii"] {
            report.verdicts.push((name.to_string(), false));
        }
        return report;
    }
    let last_two = 2.0 * spectra[spectra.len() - 1].power_sum(2);
    let sigma2 = th.sigma2.unwrap_or(last_two);
    for s in spectra {
        let two = 2.0 * s.power_sum(2);
        let four = s.power_sum(4);
        let sup =
            s.eigenvalues().iter().enumerate().skip(k).map(|(i, l)| l.abs() * sqrt((i + 1) as f64)).fold(0.0, f64::max);
        let rate = sqrt(four) + sqrt((two - sigma2).abs());
        report.rows.push(alloc::vec![two, four, sup, rate]);
    }
    let last = report.rows.last().expect("nonempty");
    let inf_sup = report.rows.iter().map(|r| r[2]).fold(f64::INFINITY, f64::min);
    report.verdicts.push(("i".to_string(), sigma2 > 0.0 && (last[0] - sigma2).abs() <= th.sigma_rel_tol * sigma2));
    report.verdicts.push(("ii".to_string(), last[1] <= th.fourth_tol));
    report.verdicts.push(("iii".to_string(), inf_sup >= th.delta && th.delta > 0.0));
    report.notes.push(format!("inf over the sequence of the tail supremum = {inf_sup}"));
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monte_carlo_negative_moment_matches_quadrature() {
        let s = Spectrum::new(alloc::vec![1.0, -0.7, 0.5, 0.3, 0.2, 0.1]).unwrap();
        let exact = negative_moment(&s, 1.0).unwrap().value;
        let (m, se) = negative_moment_mc(&s, 1.0, 200_000, 4).unwrap();
        assert!((m - exact).abs() < 4.0 * se, "{m} ± {se} vs {exact}");
    }
    use alloc::vec;

    #[test]
    fn moments_of_two_unit_eigenvalues() {
        let m = exact_moments(&Spectrum::new(vec![1.0, 1.0]).unwrap());
        assert_eq!((m.sigma2, m.var_dfnorm, m.excess_kurtosis), (4.0, 64.0, 96.0));
        assert_eq!(exact_moments(&Spectrum::new(vec![0.5]).unwrap()).sigma2, 0.5);
    }

    #[test]
    fn negative_moment_of_chi_square() {
        let s = Spectrum::constant(6, 1.0).unwrap();
        let nm = negative_moment(&s, 1.0).unwrap();
        assert!((nm.value - 0.25).abs() < 1e-10);
        assert!(nm.bound >= nm.value * (1.0 - 1e-12));
        let err = negative_moment(&Spectrum::constant(2, 1.0).unwrap(), 1.0).unwrap_err();
        assert!(matches!(err, Error::DivergentMoment { nonzero: 2, .. }));
    }

    #[test]
    fn m_beta_scaling() {
        let s = Spectrum::constant(6, 1.0).unwrap();
        assert!((m_beta(&s, 2.0).unwrap() - 0.25).abs() < 1e-10);
        let l = Spectrum::harmonic(9);
        let a = m_beta(&l, 3.0).unwrap();
        let b = m_beta(&l.scaled(2.0).unwrap(), 3.0).unwrap();
        assert!((b - a / 2.0).abs() < 1e-10 * a);
        assert!(m_beta(&Spectrum::constant(4, 1.0).unwrap(), 6.0).is_err());
    }

    #[test]
    fn certificate_requires_seven_eigenvalues() {
        assert!(matches!(
            certificate_qrate(&Spectrum::constant(3, 1.0).unwrap(), 1.0),
            Err(Error::CertificateUnavailable(_))
        ));
        let s = Spectrum::harmonic(50);
        let r = certificate_qrate(&s, 1.0).unwrap();
        let gap = sqrt(48.0 * s.power_sum(4));
        assert!((r.component("fourth_moment_gap").unwrap() - gap).abs() < 1e-14);
        assert!((r.value - r.component("C").unwrap() * gap).abs() < 1e-12 * r.value);
    }

    #[test]
    fn i2th_family() {
        let spectra: Vec<Spectrum> =
            [4usize, 16, 64, 256].iter().map(|&n| Spectrum::constant(n, 1.0 / sqrt(n as f64)).unwrap()).collect();
        let r = check_i2th_conditions(&spectra, 0, &I2thThresholds::default());
        let two = r.column("two_sum_sq").unwrap();
        assert!(two.iter().all(|v| (v - 2.0).abs() < 1e-12));
        let four = r.column("sum_fourth").unwrap();
        assert!((four[3] - 1.0 / 256.0).abs() < 1e-15);
        let sup = r.column("tail_sup").unwrap();
        assert_eq!(sup[0], 0.0);
        assert!((sup[1] - 1.0).abs() < 1e-12);
        assert_eq!(r.verdict("iii"), Some(false));
    }
}
