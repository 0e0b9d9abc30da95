//! Experiment configuration: command-line flags, JSON config files and the
//! fully resolved form recorded in the manifest.
//!
//! A config file is a JSON object
//! `{"command": "<subcommand>", "seed": u64, "threads": usize, "out": path,
//! "format": "csv"|"json"|"svg", "params": {...}}` where every key is
//! optional and `params` uses the snake_case flag names (`t` for `--T`,
//! `t_list` for `--T-list`). Flags given on the command line override the
//! file.

use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{LabError, LabResult};

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// CSV tables plus a JSON summary.
    #[default]
    Csv,
    /// Tables as JSON columns plus a JSON summary.
    Json,
    /// CSV tables, JSON summary and an SVG plot where the command has one.
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    #[default]
    Fmla1,
    Fmla3,
    Kde,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HermiteArgs {
    /// Largest order.
    #[arg(long)]
    pub kmax: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Abscissae as a:b:k.
    #[arg(long)]
    pub grid: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityArgs {
    #[arg(long)]
    pub spectrum: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    /// a:b:k; defaults to 241 points on ±6σ.
    #[arg(long)]
    pub grid: Option<String>,
    /// Derivative order (Fmla1 only).
    #[arg(long)]
    pub deriv: Option<usize>,
    #[arg(long, value_enum)]
    pub estimator: Option<EstimatorKind>,
    /// Also write a line plot to this file in the output directory.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NegmomentArgs {
    #[arg(long)]
    pub spectrum: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Monte Carlo cross-check sample size; 0 skips it.
    #[arg(long)]
    pub mc_n: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateArgs {
    #[arg(long)]
    pub spectrum: Option<PathBuf>,
    /// The constant C_q of the bound.
    #[arg(long)]
    pub cq: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteinArgs {
    #[arg(long)]
    pub spectrum: Option<PathBuf>,
    /// poly:c0,c1,… | ind:a:c0,… | hermite:a:k | table:x/y,…
    #[arg(long)]
    pub h: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Grid for the ODE residual, a:b:k.
    #[arg(long)]
    pub grid: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourthMomentArgs {
    /// Directory of spectrum files, taken in file-name order.
    #[arg(long)]
    pub spectra: Option<PathBuf>,
    /// Use Nyström matrices of OU kernels at these horizons instead.
    #[arg(long = "ou-T-list")]
    pub ou_t_list: Option<String>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub nodes: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuEigsArgs {
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long = "T")]
    pub t: Option<f64>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub nystrom_nodes: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuRateArgs {
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long = "T-list")]
    pub t_list: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// a:b:k; defaults to 241 points on ±6σ.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuLseArgs {
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long = "T")]
    pub t: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Number of independent paths.
    #[arg(long)]
    pub seeds: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", content = "params", rename_all = "kebab-case")]
pub enum Command {
    /// Generalized Hermite polynomials H_k(λ, x) on a grid.
    HermiteTable(HermiteArgs),
    /// Density (or derivative) of a second-chaos variable.
    #[command(name = "chaos2-density")]
    #[serde(rename = "chaos2-density")]
    Chaos2Density(DensityArgs),
    /// Exact negative moment E[(Σλ²X²)^−α].
    Negmoment(NegmomentArgs),
    /// Bound certificate for the density distance.
    Certificate(CertificateArgs),
    /// Malliavin-Stein identity check and Stein solution residuals.
    SteinCheck(SteinArgs),
    /// Fourth-moment conditions along a sequence of kernels.
    FourthMoment(FourthMomentArgs),
    /// OU kernel eigenvalues with their brackets.
    OuEigs(OuEigsArgs),
    /// Empirical density-distance rate of the OU fluctuation.
    OuRate(OuRateArgs),
    /// Least-squares drift estimates over independent paths.
    OuLse(OuLseArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::HermiteTable(_) => "hermite-table",
            Command::Chaos2Density(_) => "chaos2-density",
            Command::Negmoment(_) => "negmoment",
            Command::Certificate(_) => "certificate",
            Command::SteinCheck(_) => "stein-check",
            Command::FourthMoment(_) => "fourth-moment",
            Command::OuEigs(_) => "ou-eigs",
            Command::OuRate(_) => "ou-rate",
            Command::OuLse(_) => "ou-lse",
        }
    }
}

/// A fully specified run. Round-trips through JSON unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Worker threads; 0 lets rayon choose.
    pub threads: usize,
    pub out: PathBuf,
    pub format: Format,
    #[serde(flatten)]
    pub command: Command,
}

impl ExperimentConfig {
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn from_json(text: &str) -> LabResult<Self> {
        serde_json::from_str(text).map_err(|e| LabError::usage(format!("config: {e}")))
    }
}

/// Global flags as given on the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GlobalFlags {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

fn strip_nulls(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m.into_iter().filter(|(_, v)| !v.is_null()).collect(),
        _ => Map::new(),
    }
}

fn params_of<T: Serialize>(args: &T) -> Map<String, Value> {
    strip_nulls(serde_json::to_value(args).expect("flags serialize"))
}

fn overlay<T: Serialize + DeserializeOwned>(file: Option<&Value>, flags: &T) -> LabResult<T> {
    let mut merged = match file {
        None => Map::new(),
        Some(Value::Object(m)) => m.clone(),
        Some(_) => return Err(LabError::usage("config: `params` must be an object")),
    };
    merged.extend(params_of(flags));
    serde_json::from_value(Value::Object(merged)).map_err(|e| LabError::usage(format!("config params: {e}")))
}

/// Merges an optional config file (parsed JSON) under the command-line
/// flags. Every parameter is still optional at this stage.
pub fn merge(file: Option<&Value>, globals: &GlobalFlags, command: Command) -> LabResult<(GlobalFlags, Command)> {
    let empty = Map::new();
    let obj = match file {
        None => &empty,
        Some(Value::Object(m)) => m,
        Some(_) => return Err(LabError::usage("config: expected a JSON object")),
    };
    for key in obj.keys() {
        if !matches!(key.as_str(), "command" | "seed" | "threads" | "out" | "format" | "params") {
            return Err(LabError::usage(format!("config: unknown field `{key}`")));
        }
    }
    if let Some(c) = obj.get("command") {
        if c.as_str() != Some(command.name()) {
            return Err(LabError::usage(format!(
                "config: field `command` is {c}, but `{}` was invoked",
                command.name()
            )));
        }
    }
    let field = |name: &str| obj.get(name).filter(|v| !v.is_null());
    let typed = |name: &'static str| -> LabResult<Option<Value>> { Ok(field(name).cloned()) };
    let seed = match (globals.seed, typed("seed")?) {
        (Some(s), _) => Some(s),
        (None, Some(v)) => Some(v.as_u64().ok_or_else(|| LabError::usage("config: field `seed` must be a u64"))?),
        (None, None) => None,
    };
    let threads = match (globals.threads, typed("threads")?) {
        (Some(t), _) => Some(t),
        (None, Some(v)) => {
            Some(v.as_u64().ok_or_else(|| LabError::usage("config: field `threads` must be a nonnegative integer"))?
                as usize)
        }
        (None, None) => None,
    };
    let out = match (&globals.out, typed("out")?) {
        (Some(o), _) => Some(o.clone()),
        (None, Some(Value::String(s))) => Some(PathBuf::from(s)),
        (None, Some(_)) => return Err(LabError::usage("config: field `out` must be a string")),
        (None, None) => None,
    };
    let format = match (globals.format, typed("format")?) {
        (Some(f), _) => Some(f),
        (None, Some(v)) => Some(
            serde_json::from_value(v)
                .map_err(|_| LabError::usage("config: field `format` must be csv, json or svg"))?,
        ),
        (None, None) => None,
    };
    let p = obj.get("params");
    let command = match command {
        Command::HermiteTable(a) => Command::HermiteTable(overlay(p, &a)?),
        Command::Chaos2Density(a) => Command::Chaos2Density(overlay(p, &a)?),
        Command::Negmoment(a) => Command::Negmoment(overlay(p, &a)?),
        Command::Certificate(a) => Command::Certificate(overlay(p, &a)?),
        Command::SteinCheck(a) => Command::SteinCheck(overlay(p, &a)?),
        Command::FourthMoment(a) => Command::FourthMoment(overlay(p, &a)?),
        Command::OuEigs(a) => Command::OuEigs(overlay(p, &a)?),
        Command::OuRate(a) => Command::OuRate(overlay(p, &a)?),
        Command::OuLse(a) => Command::OuLse(overlay(p, &a)?),
    };
    Ok((GlobalFlags { seed, threads, out, format }, command))
}

fn required<T>(v: Option<T>, name: &str) -> LabResult<T> {
    v.ok_or_else(|| LabError::usage(format!("missing required parameter `{name}`")))
}

fn positive(v: f64, name: &str) -> LabResult<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(LabError::usage(format!("parameter `{name}` must be positive and finite, got {v}")))
    }
}

fn at_least(v: usize, min: usize, name: &str) -> LabResult<usize> {
    if v >= min {
        Ok(v)
    } else {
        Err(LabError::usage(format!("parameter `{name}` must be at least {min}, got {v}")))
    }
}

/// Fills defaults and checks required parameters and ranges.
pub fn resolve(globals: GlobalFlags, command: Command) -> LabResult<ExperimentConfig> {
    let command = match command {
        Command::HermiteTable(a) => Command::HermiteTable(HermiteArgs {
            kmax: Some(a.kmax.unwrap_or(8)),
            lambda: Some(a.lambda.unwrap_or(1.0)),
            grid: Some(a.grid.unwrap_or_else(|| "-4:4:81".into())),
        }),
        Command::Chaos2Density(a) => {
            let deriv = a.deriv.unwrap_or(0);
            let estimator = a.estimator.unwrap_or_default();
            if deriv > 0 && estimator != EstimatorKind::Fmla1 {
                return Err(LabError::usage("parameter `deriv` requires estimator fmla1"));
            }
            Command::Chaos2Density(DensityArgs {
                spectrum: Some(required(a.spectrum, "spectrum")?),
                n: Some(at_least(a.n.unwrap_or(100_000), 100, "n")?),
                grid: a.grid,
                deriv: Some(deriv),
                estimator: Some(estimator),
                svg: a.svg,
            })
        }
        Command::Negmoment(a) => Command::Negmoment(NegmomentArgs {
            spectrum: Some(required(a.spectrum, "spectrum")?),
            alpha: Some(positive(required(a.alpha, "alpha")?, "alpha")?),
            mc_n: Some(a.mc_n.unwrap_or(0)),
        }),
        Command::Certificate(a) => Command::Certificate(CertificateArgs {
            spectrum: Some(required(a.spectrum, "spectrum")?),
            cq: Some(positive(required(a.cq, "cq")?, "cq")?),
        }),
        Command::SteinCheck(a) => Command::SteinCheck(SteinArgs {
            spectrum: Some(required(a.spectrum, "spectrum")?),
            h: Some(required(a.h, "h")?),
            n: Some(at_least(a.n.unwrap_or(100_000), 2, "n")?),
            grid: a.grid,
        }),
        Command::FourthMoment(a) => {
            if a.spectra.is_some() == a.ou_t_list.is_some() {
                return Err(LabError::usage("give exactly one of `spectra` and `ou_t_list`"));
            }
            let ou = a.ou_t_list.is_some();
            Command::FourthMoment(FourthMomentArgs {
                spectra: a.spectra,
                ou_t_list: a.ou_t_list,
                theta: ou.then(|| a.theta.unwrap_or(1.0)),
                gamma: ou.then(|| a.gamma.unwrap_or(1.0)),
                nodes: ou.then(|| a.nodes.unwrap_or(200)),
            })
        }
        Command::OuEigs(a) => Command::OuEigs(OuEigsArgs {
            theta: Some(positive(a.theta.unwrap_or(1.0), "theta")?),
            gamma: Some(positive(a.gamma.unwrap_or(1.0), "gamma")?),
            t: Some(positive(a.t.unwrap_or(10.0), "T")?),
            count: Some(at_least(a.count.unwrap_or(10), 1, "count")?),
            nystrom_nodes: a.nystrom_nodes.map(|n| at_least(n, 16, "nystrom_nodes")).transpose()?,
        }),
        Command::OuRate(a) => Command::OuRate(OuRateArgs {
            theta: Some(positive(a.theta.unwrap_or(1.0), "theta")?),
            gamma: Some(positive(a.gamma.unwrap_or(1.0), "gamma")?),
            t_list: Some(a.t_list.unwrap_or_else(|| "5,10,20,40,80".into())),
            n: Some(at_least(a.n.unwrap_or(1_000_000), 100, "n")?),
            grid: a.grid,
            svg: a.svg,
        }),
        Command::OuLse(a) => Command::OuLse(OuLseArgs {
            theta: Some(positive(a.theta.unwrap_or(1.0), "theta")?),
            gamma: Some(positive(a.gamma.unwrap_or(1.0), "gamma")?),
            t: Some(positive(a.t.unwrap_or(200.0), "T")?),
            dt: Some(positive(a.dt.unwrap_or(0.01), "dt")?),
            seeds: Some(at_least(a.seeds.unwrap_or(400), 2, "seeds")?),
        }),
    };
    Ok(ExperimentConfig {
        seed: globals.seed.unwrap_or(DEFAULT_SEED),
        threads: globals.threads.unwrap_or(0),
        out: globals.out.unwrap_or_else(|| PathBuf::from("out")),
        format: globals.format.unwrap_or_default(),
        command,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn flags_override_file() {
        let file = json!({"command": "ou-lse", "seed": 5, "threads": 2, "params": {"theta": 2.0, "seeds": 10}});
        let flags = GlobalFlags { seed: Some(9), ..Default::default() };
        let cmd = Command::OuLse(OuLseArgs { theta: Some(3.0), ..Default::default() });
        let (g, c) = merge(Some(&file), &flags, cmd).unwrap();
        let cfg = resolve(g, c).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.threads, 2);
        match &cfg.command {
            Command::OuLse(a) => {
                assert_eq!(a.theta, Some(3.0));
                assert_eq!(a.seeds, Some(10));
                assert_eq!(a.t, Some(200.0));
            }
            other => panic!("{other:?}"),
        }
        let text = cfg.to_json().to_string();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn file_errors_name_the_field() {
        let cmd = || Command::OuLse(OuLseArgs::default());
        let g = GlobalFlags::default();
        for (file, field) in [
            (json!({"command": "ou-rate"}), "command"),
            (json!({"sed": 1}), "sed"),
            (json!({"seed": -1}), "seed"),
            (json!({"params": {"thetta": 1}}), "thetta"),
            (json!({"params": {"theta": "x"}}), "params"),
            (json!({"format": "png"}), "format"),
        ] {
            let e = merge(Some(&file), &g, cmd()).unwrap_err();
            assert!(e.to_string().contains(field), "{file}: {e}");
            assert_eq!(e.exit_code(), 2);
        }
        let e = resolve(g.clone(), Command::Negmoment(NegmomentArgs::default())).unwrap_err();
        assert!(e.to_string().contains("spectrum"));
        let e = resolve(g, Command::OuLse(OuLseArgs { dt: Some(-1.0), ..Default::default() })).unwrap_err();
        assert!(e.to_string().contains("dt"));
    }
}
