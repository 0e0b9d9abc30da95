//! Named-component reports shared by the certificate and condition checkers.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

/// A bound assembled from named components and user-supplied constants.
///
/// `value` is a deterministic function of the components and constants; the
/// optional observed distance is compared against it but never used to
/// build it.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub name: String,
    pub components: Vec<(String, f64)>,
    pub constants: Vec<(String, f64)>,
    pub value: f64,
    pub observed: Option<f64>,
    pub notes: Vec<String>,
}

impl BoundReport {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            components: Vec::new(),
            constants: Vec::new(),
            value: f64::NAN,
            observed: None,
            notes: Vec::new(),
        }
    }

    pub fn with_component(mut self, name: &str, value: f64) -> Self {
        self.components.push((name.to_string(), value));
        self
    }

    pub fn with_constant(mut self, name: &str, value: f64) -> Self {
        self.constants.push((name.to_string(), value));
        self
    }

    pub fn component(&self, name: &str) -> Option<f64> {
        self.components.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    /// `Some(observed ≤ value)` once an observation is attached.
    pub fn pass(&self) -> Option<bool> {
        self.observed.map(|d| d <= self.value)
    }
}

/// Per-index values of named quantities plus named pass/fail verdicts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConditionReport {
    pub columns: Vec<String>,
    /// One row per sequence element, aligned with `columns`.
    pub rows: Vec<Vec<f64>>,
    pub verdicts: Vec<(String, bool)>,
    pub notes: Vec<String>,
}

impl ConditionReport {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn verdict(&self, name: &str) -> Option<bool> {
        self.verdicts.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}
