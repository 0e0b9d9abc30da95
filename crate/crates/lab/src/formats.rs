//! Spectrum files, flag value grammars and CSV tables.

use chaoslab_core::chaos2::{Spectrum, Tail};
use chaoslab_core::density::uniform_grid;
use chaoslab_core::stein::TestFunction;
use serde_json::{json, Map, Value};

use crate::error::{LabError, LabResult};

/// Parses a spectrum file: either a bare JSON array of eigenvalues or an
/// object `{"eigenvalues": [...], "tail_count": n, "tail_bound": b}` with
/// the tail fields optional.
pub fn parse_spectrum(text: &str) -> LabResult<Spectrum> {
    let v: Value = serde_json::from_str(text).map_err(|e| LabError::usage(format!("spectrum: not valid JSON: {e}")))?;
    let (values, obj) = match &v {
        Value::Array(a) => (a, None),
        Value::Object(m) => {
            for key in m.keys() {
                if !matches!(key.as_str(), "eigenvalues" | "tail_count" | "tail_bound") {
                    return Err(LabError::usage(format!("spectrum: unknown field `{key}`")));
                }
            }
            match m.get("eigenvalues") {
                Some(Value::Array(a)) => (a, Some(m)),
                Some(_) => return Err(LabError::usage("spectrum: field `eigenvalues` must be an array")),
                None => return Err(LabError::usage("spectrum: missing field `eigenvalues`")),
            }
        }
        _ => return Err(LabError::usage("spectrum: expected an array or an object")),
    };
    let mut lambda = Vec::with_capacity(values.len());
    for (i, x) in values.iter().enumerate() {
        match x.as_f64() {
            Some(f) if f.is_finite() => lambda.push(f),
            _ => {
                return Err(LabError::usage(format!(
                    "spectrum: field `eigenvalues[{i}]` must be a finite number, got {x}"
                )))
            }
        }
    }
    if lambda.iter().all(|&l| l == 0.0) {
        return Err(LabError::usage("spectrum: field `eigenvalues` has no nonzero entry"));
    }
    let mut s = Spectrum::new(lambda).map_err(|e| LabError::usage(format!("spectrum: {e}")))?;
    if let Some(m) = obj {
        let count = m.get("tail_count").map(|c| {
            c.as_u64().ok_or_else(|| LabError::usage("spectrum: field `tail_count` must be a nonnegative integer"))
        });
        let bound = m.get("tail_bound").map(|b| match b.as_f64() {
            Some(f) if f.is_finite() && f >= 0.0 => Ok(f),
            _ => Err(LabError::usage("spectrum: field `tail_bound` must be a finite nonnegative number")),
        });
        match (count, bound) {
            (None, None) => {}
            (Some(c), Some(b)) => {
                s = s
                    .with_tail(Tail { count: c?, bound: b? })
                    .map_err(|e| LabError::usage(format!("spectrum: {e}")))?;
            }
            (Some(_), None) => {
                return Err(LabError::usage("spectrum: field `tail_bound` is required with `tail_count`"))
            }
            (None, Some(_)) => {
                return Err(LabError::usage("spectrum: field `tail_count` is required with `tail_bound`"))
            }
        }
    }
    Ok(s)
}

pub fn spectrum_to_json(s: &Spectrum) -> Value {
    let mut m = Map::new();
    m.insert("eigenvalues".into(), json!(s.eigenvalues()));
    if let Some(t) = s.tail() {
        m.insert("tail_count".into(), json!(t.count));
        m.insert("tail_bound".into(), json!(t.bound));
    }
    Value::Object(m)
}

/// `a:b:k`, `k` uniform points on `[a, b]`.
pub fn parse_grid(spec: &str) -> LabResult<Vec<f64>> {
    let bad = || LabError::usage(format!("grid: expected a:b:k, got `{spec}`"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let k: usize = parts[2].trim().parse().map_err(|_| bad())?;
    uniform_grid(a, b, k).map_err(|e| LabError::usage(format!("grid: {e}")))
}

/// Comma-separated numbers.
pub fn parse_list(name: &str, spec: &str) -> LabResult<Vec<f64>> {
    spec.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| LabError::usage(format!("{name}: `{p}` is not a number"))))
        .collect()
}

/// Test functions for the Stein check:
/// `poly:c0,c1,...` for `Σ cᵢxⁱ`, `ind:a:c0,c1,...` for `1_{x>a}Σ cᵢxⁱ`,
/// `hermite:a:k` for `1_{x>a}H_k(x)` and `table:x0/y0,x1/y1,...` for linear
/// interpolation with flat extension.
pub fn parse_test_function(spec: &str) -> LabResult<TestFunction> {
    let bad = |why: &str| LabError::usage(format!("h: {why} in `{spec}`"));
    let (kind, rest) = spec.split_once(':').ok_or_else(|| bad("missing `kind:`"))?;
    match kind {
        "poly" => Ok(TestFunction::Polynomial(parse_list("h", rest)?)),
        "ind" => {
            let (a, c) = rest.split_once(':').ok_or_else(|| bad("expected ind:a:coeffs"))?;
            let threshold = a.trim().parse().map_err(|_| bad("bad threshold"))?;
            Ok(TestFunction::IndicatorPolynomial { threshold, coeffs: parse_list("h", c)? })
        }
        "hermite" => {
            let (a, k) = rest.split_once(':').ok_or_else(|| bad("expected hermite:a:k"))?;
            let z = a.trim().parse().map_err(|_| bad("bad threshold"))?;
            let k = k.trim().parse().map_err(|_| bad("bad order"))?;
            Ok(TestFunction::indicator_hermite(z, k))
        }
        "table" => {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for pair in rest.split(',') {
                let (x, y) = pair.split_once('/').ok_or_else(|| bad("expected x/y pairs"))?;
                xs.push(x.trim().parse().map_err(|_| bad("bad abscissa"))?);
                ys.push(y.trim().parse().map_err(|_| bad("bad value"))?);
            }
            TestFunction::tabulated(xs, ys).map_err(|e| LabError::usage(format!("h: {e}")))
        }
        _ => Err(bad("unknown kind")),
    }
}

/// A header plus numeric rows, rendered as CSV or as a JSON object of
/// columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        for (j, h) in self.header.iter().enumerate() {
            m.insert(h.clone(), self.rows.iter().map(|r| finite_or_null(r[j])).collect());
        }
        Value::Object(m)
    }
}

/// JSON has no infinities or NaN.
pub fn finite_or_null(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

/// Parses CSV produced by [`Table::to_csv`].
pub fn parse_csv(text: &str) -> LabResult<Table> {
    let mut lines = text.lines();
    let header: Vec<String> =
        lines.next().ok_or_else(|| LabError::usage("csv: empty"))?.split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|c| c.parse::<f64>().map_err(|_| LabError::usage(format!("csv: row {} has bad cell `{c}`", i + 1))))
            .collect::<LabResult<Vec<f64>>>()?;
        if row.len() != header.len() {
            return Err(LabError::usage(format!(
                "csv: row {} has {} cells, expected {}",
                i + 1,
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok(Table { header, rows })
}
