//! Subcommand implementations. Each writes its artifacts through
//! [`Artifacts`] and returns the JSON summary.

use std::path::Path;

use chaoslab_core::chaos2::{
    certificate_qrate, equi_report, exact_moments, negative_moment, sample, Sampler, Spectrum,
};
use chaoslab_core::density::{
    default_grid, fourth_moment_report, kde, uniform_distance, DensityEstimate, KernelInput, SourceDensity,
};
use chaoslab_core::engine::ChaosExpansion;
use chaoslab_core::hermite::{hermite_gen_eval, normal_density_derivative};
use chaoslab_core::ou::{exact_f_t_moment, kernel_matrix, kernel_spectrum_nystrom, kernel_spectrum_sl};
use chaoslab_core::report::{BoundReport, ConditionReport};
use chaoslab_core::stein::{solve_stein, SteinSolver, TestFunction};
use serde_json::{json, Value};

use crate::artifacts::Artifacts;
use crate::config::{
    CertificateArgs, Command, DensityArgs, EstimatorKind, ExperimentConfig, Format, FourthMomentArgs, HermiteArgs,
    NegmomentArgs, OuEigsArgs, OuLseArgs, OuRateArgs, SteinArgs,
};
use crate::error::{Context, LabError, LabResult};
use crate::formats::{finite_or_null, parse_grid, parse_list, parse_spectrum, parse_test_function, Table};
use crate::parallel;
use crate::svg::{Plot, Series};

/// Output sink for one run.
pub struct Sink<'a> {
    pub art: &'a mut Artifacts,
    pub format: Format,
}

impl Sink<'_> {
    fn table(&mut self, stem: &str, t: &Table) -> LabResult<()> {
        match self.format {
            Format::Json => self.art.write_json(&format!("{stem}.json"), &t.to_json())?,
            Format::Csv | Format::Svg => self.art.write(&format!("{stem}.csv"), t.to_csv().as_bytes())?,
        };
        Ok(())
    }

    fn plot(&mut self, explicit: Option<&Path>, default: &str, plot: impl FnOnce() -> Plot) -> LabResult<()> {
        let name = match explicit {
            Some(p) => p.to_string_lossy().into_owned(),
            None if self.format == Format::Svg => default.to_string(),
            None => return Ok(()),
        };
        self.art.write(&name, plot().to_svg().as_bytes())?;
        Ok(())
    }
}

pub fn read_spectrum(path: &Path) -> LabResult<Spectrum> {
    let text =
        std::fs::read_to_string(path).map_err(|e| LabError::usage(format!("spectrum file {}: {e}", path.display())))?;
    parse_spectrum(&text).map_err(|e| LabError::usage(format!("{}: {e}", path.display())))
}

fn bound_json(r: &BoundReport) -> Value {
    let pairs = |v: &[(String, f64)]| Value::Object(v.iter().map(|(k, x)| (k.clone(), finite_or_null(*x))).collect());
    json!({
        "name": r.name,
        "components": pairs(&r.components),
        "constants": pairs(&r.constants),
        "value": finite_or_null(r.value),
        "notes": r.notes,
    })
}

fn condition_json(r: &ConditionReport) -> Value {
    json!({
        "columns": r.columns,
        "rows": r.rows.iter().map(|row| row.iter().map(|v| finite_or_null(*v)).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "verdicts": Value::Object(r.verdicts.iter().map(|(k, v)| (k.clone(), json!(v))).collect()),
        "notes": r.notes,
    })
}

/// Runs a resolved config, writing artifacts. A statistical check that
/// fails is reported as [`LabError::Failed`] after its artifacts are
/// written.
pub fn execute(cfg: &ExperimentConfig, art: &mut Artifacts) -> LabResult<Value> {
    let mut sink = Sink { art, format: cfg.format };
    let seed = cfg.seed;
    match &cfg.command {
        Command::HermiteTable(a) => hermite_table(a, &mut sink),
        Command::Chaos2Density(a) => chaos2_density(a, seed, &mut sink),
        Command::Negmoment(a) => negmoment(a, seed, &mut sink),
        Command::Certificate(a) => certificate(a, &mut sink),
        Command::SteinCheck(a) => stein_check(a, seed, &mut sink),
        Command::FourthMoment(a) => fourth_moment(a, &mut sink),
        Command::OuEigs(a) => ou_eigs(a, &mut sink),
        Command::OuRate(a) => ou_rate(a, seed, &mut sink),
        Command::OuLse(a) => ou_lse(a, seed, &mut sink),
    }
}

const RESOLVED: &str = "resolved config";

fn hermite_table(a: &HermiteArgs, sink: &mut Sink) -> LabResult<Value> {
    let kmax = a.kmax.expect(RESOLVED);
    let lambda = a.lambda.expect(RESOLVED);
    let grid = parse_grid(a.grid.as_deref().expect(RESOLVED))?;
    let header: Vec<String> = std::iter::once("x".to_string()).chain((0..=kmax).map(|k| format!("H{k}"))).collect();
    let mut t = Table { header, rows: Vec::new() };
    for &x in &grid {
        let mut row = vec![x];
        for k in 0..=kmax {
            row.push(hermite_gen_eval(k, lambda, x).context(format!("H_{k}"))?);
        }
        t.push(row);
    }
    sink.table("hermite", &t)?;
    let summary = json!({"kmax": kmax, "lambda": lambda, "points": grid.len()});
    sink.art.write_json("summary.json", &summary)?;
    Ok(summary)
}

fn density_grid(spec: Option<&str>, sigma: f64) -> LabResult<Vec<f64>> {
    match spec {
        Some(s) => parse_grid(s),
        None => Ok(default_grid(sigma)),
    }
}

fn chaos2_density(a: &DensityArgs, seed: u64, sink: &mut Sink) -> LabResult<Value> {
    let path = a.spectrum.as_deref().expect(RESOLVED);
    let s = read_spectrum(path)?;
    let n = a.n.expect(RESOLVED);
    let k = a.deriv.expect(RESOLVED);
    let estimator = a.estimator.expect(RESOLVED);
    let sigma2 = exact_moments(&s).sigma2;
    let sigma = sigma2.sqrt();
    let grid = density_grid(a.grid.as_deref(), sigma)?;
    let mut extra = json!({});
    let est: DensityEstimate = match estimator {
        EstimatorKind::Fmla1 => {
            let sampler = Sampler::new(&s, if k == 0 { 0 } else { k + 1 }).context("sampler")?;
            let sd = SourceDensity::new(&sampler, &grid, &[k]).context("density")?;
            parallel::source_density(&sd, n, seed).context("density")?.remove(0)
        }
        EstimatorKind::Fmla3 => {
            let f = ChaosExpansion::second_chaos(s.eigenvalues());
            parallel::general_density(&f, &grid, n, seed).context("density")?
        }
        EstimatorKind::Kde => {
            let xs: Vec<f64> = sample(&s, n, seed, 0).context("sampler")?.map(|w| w.f).collect();
            let r = kde(&xs, &grid).context("kde")?;
            extra = json!({"bandwidth": r.bandwidth, "bias_allowance": r.bias_allowance});
            r.estimate
        }
    };
    let target = |x: f64| normal_density_derivative(k, sigma, x).expect("order checked");
    let mut t = Table::new(&["x", "estimate", "se", "target"]);
    for ((&x, &v), &se) in est.grid().iter().zip(&est.estimate).zip(&est.se) {
        t.push(vec![x, v, se, target(x)]);
    }
    sink.table("density", &t)?;
    let d = uniform_distance(&est, target);
    let mut summary = json!({
        "estimator": est.estimator.tag(),
        "derivative": k,
        "n": est.n,
        "rejected": est.rejected,
        "rejection_rate": est.rejection_rate(),
        "sigma2": sigma2,
        "sup_gap": d.sup_gap,
        "argmax": d.argmax,
        "l1": d.l1,
        "l2": d.l2,
        "integral": est.integral(),
    });
    if let (Value::Object(m), Value::Object(e)) = (&mut summary, extra) {
        m.extend(e);
    }
    sink.art.write_json("summary.json", &summary)?;
    sink.plot(a.svg.as_deref(), "density.svg", || Plot {
        title: format!("{} estimate, n = {}", est.estimator.tag(), est.n),
        x_label: "x".into(),
        y_label: if k == 0 { "density".into() } else { format!("derivative {k}") },
        series: vec![
            Series::line("estimate", est.grid().to_vec(), est.estimate.clone()),
            Series::line("normal", est.grid().to_vec(), est.grid().iter().map(|&x| target(x)).collect()),
        ],
        ..Default::default()
    })?;
    Ok(summary)
}

fn negmoment(a: &NegmomentArgs, seed: u64, sink: &mut Sink) -> LabResult<Value> {
    let s = read_spectrum(a.spectrum.as_deref().expect(RESOLVED))?;
    let alpha = a.alpha.expect(RESOLVED);
    let r = negative_moment(&s, alpha).context("negative moment")?;
    let mut summary = json!({
        "alpha": alpha,
        "nonzero": s.nonzero_count(),
        "value": r.value,
        "abserr": r.abserr,
        "bound": finite_or_null(r.bound),
        "evaluations": r.evaluations,
    });
    let mc_n = a.mc_n.expect(RESOLVED);
    if mc_n > 0 {
        let (m, se) = parallel::negative_moment_mc(&s, alpha, mc_n, seed).context("Monte Carlo")?;
        summary["monte_carlo"] = json!({"n": mc_n, "mean": m, "se": se, "z": finite_or_null((m - r.value) / se)});
    }
    sink.art.write_json("negmoment.json", &summary)?;
    Ok(summary)
}

fn certificate(a: &CertificateArgs, sink: &mut Sink) -> LabResult<Value> {
    let s = read_spectrum(a.spectrum.as_deref().expect(RESOLVED))?;
    let r = certificate_qrate(&s, a.cq.expect(RESOLVED)).context("certificate")?;
    let m = exact_moments(&s);
    let e = equi_report(&s);
    let summary = json!({
        "certificate": bound_json(&r),
        "moments": {
            "sigma2": m.sigma2,
            "fourth_moment": m.fourth_moment,
            "excess_kurtosis": m.excess_kurtosis,
            "var_dfnorm": m.var_dfnorm,
        },
        "equi": {
            "lower": e.lower,
            "middle_displayed": e.middle_displayed,
            "middle_excess": e.middle_excess,
            "upper": e.upper,
            "displayed_holds": e.displayed_lower_holds && e.displayed_upper_holds,
            "excess_holds": e.excess_lower_holds && e.excess_upper_holds,
        },
    });
    sink.art.write_json("certificate.json", &summary)?;
    Ok(summary)
}

/// Jumps of `h` that the residual check keeps away from.
fn discontinuities(h: &TestFunction) -> Vec<f64> {
    match h {
        TestFunction::IndicatorPolynomial { threshold, .. } => vec![*threshold],
        TestFunction::Combination(parts) => parts.iter().flat_map(|(_, h)| discontinuities(h)).collect(),
        _ => Vec::new(),
    }
}

/// Central-difference residual `|f′ − (x/σ²)f − h + E[h]|` on `grid`,
/// skipping points within `10·eps` of a jump of `h`.
pub fn ode_residual(h: &TestFunction, sigma: f64, grid: &[f64]) -> LabResult<f64> {
    let solver = SteinSolver::new(h.clone(), sigma).context("Stein solver")?;
    let jumps = discontinuities(h);
    let eps = 1e-4;
    let mut worst: f64 = 0.0;
    for &x in grid {
        if jumps.iter().any(|j| (x - j).abs() < 10.0 * eps) {
            continue;
        }
        let f = |y: f64| solver.f(y).context("Stein solution");
        let fd = (f(x + eps)? - f(x - eps)?) / (2.0 * eps);
        let r = fd - x / (sigma * sigma) * f(x)? - h.eval(x) + solver.expectation();
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

fn stein_check(a: &SteinArgs, seed: u64, sink: &mut Sink) -> LabResult<Value> {
    let s = read_spectrum(a.spectrum.as_deref().expect(RESOLVED))?;
    let h = parse_test_function(a.h.as_deref().expect(RESOLVED))?;
    let n = a.n.expect(RESOLVED);
    let f = ChaosExpansion::second_chaos(s.eigenvalues());
    let sigma = f.second_moment().sqrt();
    let grid = match a.grid.as_deref() {
        Some(g) => parse_grid(g)?,
        None => chaoslab_core::density::uniform_grid(-4.0 * sigma, 4.0 * sigma, 81).context("grid")?,
    };
    let sol = solve_stein(&h, h.natural_growth(), sigma, &grid).context("Stein solution")?;
    let residual = ode_residual(&h, sigma, &grid)?;
    let ms = parallel::ms_check(&f, h, n, seed).context("Malliavin-Stein check")?;
    let mut t = Table::new(&["x", "f", "df"]);
    for ((&x, &fx), &d) in sol.grid.iter().zip(&sol.f).zip(&sol.df) {
        t.push(vec![x, fx, d]);
    }
    sink.table("stein", &t)?;
    let pass = ms.z.abs() <= 3.0 && residual <= 1e-6;
    let summary = json!({
        "sigma2": ms.sigma2,
        "expectation_h": sol.expectation,
        "ode_residual_max": residual,
        "ms": {
            "n": ms.n,
            "lhs": ms.lhs, "lhs_se": ms.lhs_se,
            "rhs": ms.rhs, "rhs_se": ms.rhs_se,
            "diff": ms.diff, "diff_se": ms.diff_se,
            "z": finite_or_null(ms.z),
        },
        "pass": pass,
    });
    sink.art.write_json("stein.json", &summary)?;
    if !pass {
        return Err(LabError::Failed(format!("stein check failed: z = {}, ODE residual = {residual:e}", ms.z)));
    }
    Ok(summary)
}

fn fourth_moment(a: &FourthMomentArgs, sink: &mut Sink) -> LabResult<Value> {
    let (labels, kernels): (Vec<String>, Vec<KernelInput>) = if let Some(dir) = &a.spectra {
        let mut files: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| LabError::usage(format!("spectra directory {}: {e}", dir.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(LabError::usage(format!("spectra directory {} has no .json files", dir.display())));
        }
        let mut out = (Vec::new(), Vec::new());
        for p in files {
            out.0.push(p.file_name().unwrap_or_default().to_string_lossy().into_owned());
            out.1.push(KernelInput::Spectrum(read_spectrum(&p)?));
        }
        out
    } else {
        let ts = parse_list("ou_t_list", a.ou_t_list.as_deref().expect(RESOLVED))?;
        let (theta, gamma, nodes) = (a.theta.expect(RESOLVED), a.gamma.expect(RESOLVED), a.nodes.expect(RESOLVED));
        let mut out = (Vec::new(), Vec::new());
        for t in ts {
            out.0.push(format!("T={t}"));
            out.1.push(KernelInput::Matrix(kernel_matrix(theta, gamma, t, nodes).context("kernel matrix")?));
        }
        out
    };
    let r = fourth_moment_report(&kernels).context("fourth-moment report")?;
    let mut header = vec!["index"];
    header.extend(r.columns.iter().map(String::as_str));
    let mut t = Table::new(&header);
    for (i, row) in r.rows.iter().enumerate() {
        let mut v = vec![i as f64];
        v.extend(row);
        t.push(v);
    }
    sink.table("fourth_moment", &t)?;
    let mut summary = condition_json(&r);
    summary["labels"] = json!(labels);
    sink.art.write_json("summary.json", &summary)?;
    Ok(summary)
}

fn ou_eigs(a: &OuEigsArgs, sink: &mut Sink) -> LabResult<Value> {
    let (theta, gamma, t, count) =
        (a.theta.expect(RESOLVED), a.gamma.expect(RESOLVED), a.t.expect(RESOLVED), a.count.expect(RESOLVED));
    let r = kernel_spectrum_sl(theta, gamma, t, count).context("eigenvalues")?;
    let mut tab = Table::new(&["i", "lo", "lambda", "hi", "residual", "mu", "bracket", "extra"]);
    for e in &r.roots {
        tab.push(vec![
            e.ordinal as f64,
            e.lo,
            e.lambda,
            e.hi,
            e.residual,
            e.mu,
            e.bracket as f64,
            if e.extra { 1.0 } else { 0.0 },
        ]);
    }
    sink.table("eigs", &tab)?;
    let outside: Vec<Value> = r
        .roots
        .iter()
        .filter(|e| !e.inside())
        .map(|e| json!({"i": e.ordinal, "bracket": e.bracket, "lambda": e.lambda, "lo": e.lo, "hi": e.hi}))
        .collect();
    let two_sum: f64 = 2.0 * r.roots.iter().map(|e| e.lambda * e.lambda).sum::<f64>();
    let exact = exact_f_t_moment(theta, gamma, t);
    let mut summary = json!({
        "theta": theta, "gamma": gamma, "T": t, "count": count,
        "max_residual": r.max_residual(),
        "outside_brackets": outside,
        "two_sum_sq": two_sum,
        "exact_second_moment": exact,
        "tail_bound": r.tail_bound,
        "moment_gap": exact - two_sum,
        "moment_gap_within_tail": (exact - two_sum).abs() <= 2.0 * r.tail_bound,
    });
    if let Some(nodes) = a.nystrom_nodes {
        let ny = kernel_spectrum_nystrom(theta, gamma, t, nodes).context("Nyström")?;
        let gap = r
            .roots
            .iter()
            .zip(ny.eigenvalues())
            .take(10)
            .map(|(e, v)| ((e.lambda - v) / e.lambda).abs())
            .fold(0.0, f64::max);
        summary["nystrom"] =
            json!({"nodes": nodes, "top10_max_rel_gap": gap, "eigenvalues": &ny.eigenvalues()[..count.min(ny.len())]});
    }
    sink.art.write_json("summary.json", &summary)?;
    Ok(summary)
}

fn ou_rate(a: &OuRateArgs, seed: u64, sink: &mut Sink) -> LabResult<Value> {
    let (theta, gamma, n) = (a.theta.expect(RESOLVED), a.gamma.expect(RESOLVED), a.n.expect(RESOLVED));
    let ts = parse_list("t_list", a.t_list.as_deref().expect(RESOLVED))?;
    let grid = a.grid.as_deref().map(parse_grid).transpose()?;
    let r = parallel::rate_experiment(theta, gamma, &ts, n, seed, grid.as_deref()).context("rate experiment")?;
    let mut tab = Table::new(&["T", "m", "sigma2_T", "sup_gap", "argmax", "max_se", "se_at_argmax", "exact_cumulant"]);
    for (p, &c) in r.points.iter().zip(&r.exact_values) {
        tab.push(vec![p.t, p.m as f64, p.sigma2_t, p.sup_gap, p.argmax, p.max_se, p.se_at_argmax, c]);
    }
    sink.table("rate", &tab)?;
    let summary = json!({
        "theta": theta, "gamma": gamma, "n": n, "sigma2": r.sigma2,
        "slope": r.fit.slope, "intercept": r.fit.intercept, "slope_se": r.fit.slope_se,
        "monotone_ok": r.fit.monotone_ok,
        "exact_slope": r.exact_fit.slope, "exact_intercept": r.exact_fit.intercept,
        "points": r.points.iter().map(|p| json!({
            "T": p.t, "m": p.m, "sup_gap": p.sup_gap, "argmax": p.argmax,
            "max_se": p.max_se, "se_at_argmax": p.se_at_argmax,
        })).collect::<Vec<_>>(),
    });
    sink.art.write_json("rate.json", &summary)?;
    sink.plot(a.svg.as_deref(), "rate.svg", || {
        let fit: Vec<f64> = ts.iter().map(|t| (r.fit.intercept + r.fit.slope * t.ln()).exp()).collect();
        Plot {
            title: format!("sup-distance vs T, slope {:.3}", r.fit.slope),
            x_label: "T".into(),
            y_label: "sup |f_T - phi|".into(),
            log_x: true,
            log_y: true,
            series: vec![
                Series::points(
                    "Monte Carlo",
                    ts.clone(),
                    r.points.iter().map(|p| p.sup_gap).collect(),
                    Some(r.points.iter().map(|p| p.se_at_argmax).collect()),
                ),
                Series::line("log-log fit", ts.clone(), fit),
                Series::line("sqrt(48 sum lambda^4)", ts.clone(), r.exact_values.clone()),
            ],
        }
    })?;
    Ok(summary)
}

fn ou_lse(a: &OuLseArgs, seed: u64, sink: &mut Sink) -> LabResult<Value> {
    let (theta, gamma, t, dt, paths) = (
        a.theta.expect(RESOLVED),
        a.gamma.expect(RESOLVED),
        a.t.expect(RESOLVED),
        a.dt.expect(RESOLVED),
        a.seeds.expect(RESOLVED),
    );
    let draws = parallel::lse_draws(theta, gamma, t, dt, paths, seed).context("least-squares estimates")?;
    let mut tab = Table::new(&["path", "theta_hat", "scaled_error"]);
    let mut scaled = Vec::with_capacity(draws.len());
    for (i, &d) in draws.iter().enumerate() {
        let z = t.sqrt() * (d - theta);
        scaled.push(z);
        tab.push(vec![i as f64, d, z]);
    }
    sink.table("lse", &tab)?;
    let run: chaoslab_core::stats::Running = scaled.iter().copied().collect();
    let mean_hat = draws.iter().sum::<f64>() / draws.len() as f64;
    let summary = json!({
        "theta": theta, "gamma": gamma, "T": t, "dt": dt, "paths": paths,
        "mean_theta_hat": mean_hat,
        "var_scaled_error": run.variance(),
        "target_variance": 2.0 * theta,
        "variance_ratio": run.variance() / (2.0 * theta),
    });
    sink.art.write_json("summary.json", &summary)?;
    Ok(summary)
}
