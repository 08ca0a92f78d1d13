//! Hypothesis files: `{"M": [..], "C": [[..]], "t": [..], "family": .., "alpha": ..}`.
//!
//! `M` holds 1-based positions among the feature columns (the response
//! excluded). `C` defaults to the identity and `t` to zeros.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use pptest::{GlmFamily, HypothesisSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisFile {
    #[serde(rename = "M", alias = "m")]
    pub m: Vec<usize>,
    #[serde(rename = "C", alias = "c", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<GlmFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

impl HypothesisFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    /// Rows of `C`, the identity when absent.
    pub fn c_rows(&self) -> Vec<Vec<f64>> {
        self.c.clone().unwrap_or_else(|| {
            (0..self.m.len())
                .map(|i| (0..self.m.len()).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect()
        })
    }

    pub fn t_values(&self) -> Vec<f64> {
        self.t.clone().unwrap_or_else(|| vec![0.0; self.c_rows().len()])
    }

    /// The hypothesis in coefficient indices. `M` may be listed in any
    /// order; columns of `C` follow it.
    pub fn to_spec(&self, n_features: usize, intercept: bool) -> Result<HypothesisSpec, CliError> {
        if self.m.is_empty() {
            return Err(CliError::Input("hypothesis needs at least one tested column".into()));
        }
        if let Some(&j) = self.m.iter().find(|&&j| j == 0 || j > n_features) {
            return Err(CliError::Input(format!(
                "tested column {j} is outside 1..={n_features} (indices are 1-based)"
            )));
        }
        let rows = self.c_rows();
        let t = self.t_values();
        if rows.is_empty() {
            return Err(CliError::Input("constraint matrix C has no rows".into()));
        }
        if let Some(row) = rows.iter().find(|r| r.len() != self.m.len()) {
            return Err(CliError::Input(format!(
                "each row of C needs {} entries, found {}",
                self.m.len(),
                row.len()
            )));
        }
        if t.len() != rows.len() {
            return Err(CliError::Input(format!("t has {} entries but C has {} rows", t.len(), rows.len())));
        }
        let mut order: Vec<usize> = (0..self.m.len()).collect();
        order.sort_by_key(|&k| self.m[k]);
        if order.windows(2).any(|w| self.m[w[0]] == self.m[w[1]]) {
            return Err(CliError::Input("tested columns must be distinct".into()));
        }
        let shift = usize::from(intercept);
        let m: Vec<usize> = order.iter().map(|&k| self.m[k] - 1 + shift).collect();
        let c = DMatrix::from_fn(rows.len(), order.len(), |i, j| rows[i][order[j]]);
        Ok(HypothesisSpec::new(m, c, DVector::from_vec(t))?)
    }
}
