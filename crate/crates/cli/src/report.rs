//! Report files and their text tables. Numbers in the tables are printed
//! with the shortest round-trip representation, so they parse back to the
//! exact values stored in the JSON.

use std::fmt::Write as _;

use pptest::inference::{StatisticKind, TestDiagnostics, TestReport};
use pptest::lla::GicEntry;
use pptest::{GlmFamily, PenaltyKind};
use serde::{Deserialize, Serialize};

use crate::hypothesis::HypothesisFile;

pub const INTERCEPT_NAME: &str = "(intercept)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientPair {
    pub name: String,
    pub full: f64,
    pub reduced: f64,
}

/// Contents of `report.json` written by `pptest test`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestReportFile {
    pub data: String,
    pub response: String,
    pub family: GlmFamily,
    pub penalty: PenaltyKind,
    pub alpha: f64,
    pub seed: u64,
    pub n: usize,
    pub intercept: bool,
    pub features: Vec<String>,
    pub hypothesis: HypothesisFile,
    pub lambda_hat: f64,
    pub lambda_fixed: bool,
    pub critical_value: f64,
    /// LRT, Wald, score.
    pub reports: Vec<TestReport>,
    pub selected_full: Vec<String>,
    pub selected_reduced: Vec<String>,
    pub coefficients: Vec<CoefficientPair>,
    pub warnings: Vec<String>,
    pub diagnostics: TestDiagnostics,
}

impl TestReportFile {
    pub fn report(&self, kind: StatisticKind) -> Option<&TestReport> {
        self.reports.iter().find(|r| r.statistic_kind == kind)
    }
}

pub fn render_test_table(f: &TestReportFile) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "family={} n={} features={} alpha={} lambda_hat={}{} critical_value={}",
        f.family.name(),
        f.n,
        f.features.len(),
        f.alpha,
        f.lambda_hat,
        if f.lambda_fixed { " (fixed)" } else { "" },
        f.critical_value
    );
    let _ = writeln!(
        out,
        "{:<10} {:>24} {:>4} {:>24} {:>7} {:>24}",
        "statistic", "value", "dof", "p_value", "reject", "phi_hat"
    );
    for r in &f.reports {
        let _ = writeln!(
            out,
            "{:<10} {:>24} {:>4} {:>24} {:>7} {:>24}",
            r.statistic_kind.name(),
            r.value,
            r.dof,
            r.p_value,
            if r.reject { "yes" } else { "no" },
            r.phi_hat
        );
    }
    let _ = writeln!(out, "selected (full): {}", list(&f.selected_full));
    let _ = writeln!(out, "selected (reduced): {}", list(&f.selected_reduced));
    out
}

/// Contents of `coefficients.json` written by `pptest fit`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReportFile {
    pub data: String,
    pub response: String,
    pub family: GlmFamily,
    pub penalty: PenaltyKind,
    pub seed: u64,
    pub n: usize,
    pub intercept: bool,
    pub lambda_hat: f64,
    pub lambda_fixed: bool,
    pub lasso_lambda: f64,
    pub coefficients: Vec<Coefficient>,
    /// Selected features by name, and by 1-based column position.
    pub support: Vec<String>,
    pub support_columns: Vec<usize>,
    pub gic: Option<Vec<GicEntry>>,
    pub warnings: Vec<String>,
}

pub fn render_fit_table(f: &FitReportFile) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "family={} n={} lambda={}{}",
        f.family.name(),
        f.n,
        f.lambda_hat,
        if f.lambda_fixed { " (fixed)" } else { " (GIC)" }
    );
    let _ = writeln!(out, "support: {}", list(&f.support));
    for c in f.coefficients.iter().filter(|c| c.value != 0.0) {
        let _ = writeln!(out, "{:<20} {:>24}", c.name, c.value);
    }
    out
}

fn list(names: &[String]) -> String {
    if names.is_empty() {
        "(none)".to_string()
    } else {
        names.join(" ")
    }
}
