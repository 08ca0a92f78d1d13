use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use pptest::{GlmFamily, PenaltyKind};

#[derive(Debug, Parser)]
#[command(name = "pptest", version, about = "Partial penalized tests for high-dimensional GLMs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Wald, score and likelihood-ratio tests of C·β_M = t.
    Test(TestArgs),
    /// Penalized fit with a GIC-selected (or fixed) λ.
    Fit(FitArgs),
    /// Monte-Carlo rejection-rate or estimator-comparison study.
    Simulate(SimulateArgs),
}

fn parse_family(s: &str) -> Result<GlmFamily, String> {
    s.parse().map_err(|e: pptest::Error| e.to_string())
}

fn parse_penalty(s: &str) -> Result<PenaltyKind, String> {
    s.parse().map_err(|e: pptest::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    pub data: PathBuf,
    /// Name of the response column; every other column is a feature.
    #[arg(long, default_value = "y")]
    pub response: String,
    /// gaussian, logistic or poisson.
    #[arg(long, value_parser = parse_family)]
    pub family: Option<GlmFamily>,
    /// scad, mcp or l1.
    #[arg(long, value_parser = parse_penalty, default_value = "scad")]
    pub penalty: PenaltyKind,
    /// Fixed λ; skips the GIC search.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Fit without an intercept.
    #[arg(long)]
    pub no_intercept: bool,
    /// Seed for the cross-validation folds; drawn and printed when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// JSON hypothesis file with `M` (1-based feature columns), `C` and `t`.
    #[arg(long)]
    pub hypothesis: PathBuf,
    /// Test level; overrides the hypothesis file, default 0.05.
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario JSON file, or the name of a bundled scenario.
    pub scenario: String,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for replications; defaults to all cores.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
}
