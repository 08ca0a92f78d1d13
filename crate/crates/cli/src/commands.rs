use std::fmt;
use std::fs;
use std::path::Path;

use pptest::inference::{self, TestConfig};
use pptest::sim::{self, BetaStarSpec, SimScenario};
use pptest::{Dataset, GlmFamily};
use serde::Serialize;

use crate::args::{Cli, Command, DataArgs, FitArgs, SimulateArgs, TestArgs};
use crate::data::{read_csv, CsvData};
use crate::hypothesis::HypothesisFile;
use crate::report::{
    render_fit_table, render_test_table, Coefficient, CoefficientPair, FitReportFile, TestReportFile, INTERCEPT_NAME,
};
use crate::scenarios;

/// Failure of a subcommand, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad files, flags or hypotheses (exit 2).
    Input(String),
    /// A solver failed on valid input (exit 3).
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Solver(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<pptest::Error> for CliError {
    fn from(e: pptest::Error) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Solver(e.to_string())
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Simulate(a) => cmd_simulate(a),
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s: u64 = rand::random();
        eprintln!("seed: {s}");
        s
    })
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Solver(format!("serializing {name}: {e}")))?;
    write_text(dir, name, &text)
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn coefficient_names(csv: &CsvData, intercept: bool) -> Vec<String> {
    let lead = intercept.then(|| INTERCEPT_NAME.to_string());
    lead.into_iter().chain(csv.features.iter().cloned()).collect()
}

struct Loaded {
    csv: CsvData,
    dataset: Dataset,
    intercept: bool,
    names: Vec<String>,
}

fn load(args: &DataArgs) -> Result<Loaded, CliError> {
    let csv = read_csv(&args.data, &args.response)?;
    let intercept = !args.no_intercept;
    let dataset = Dataset::new(csv.x.clone(), csv.y.clone(), intercept)?;
    let names = coefficient_names(&csv, intercept);
    Ok(Loaded {
        csv,
        dataset,
        intercept,
        names,
    })
}

fn cmd_test(args: &TestArgs) -> Result<(), CliError> {
    let d = &args.data;
    let hyp_file = HypothesisFile::load(&args.hypothesis)?;
    let family = d.family.or(hyp_file.family).unwrap_or(GlmFamily::Gaussian);
    let alpha = args.alpha.or(hyp_file.alpha).unwrap_or(0.05);
    let loaded = load(d)?;
    let hyp = hyp_file.to_spec(loaded.csv.features.len(), loaded.intercept)?;
    let seed = resolve_seed(d.seed);
    let mut config = TestConfig {
        alpha,
        penalty: d.penalty,
        lambda: d.lambda,
        ..Default::default()
    };
    config.lasso.seed = seed;

    let outcome = inference::run_test(family, &loaded.dataset, &hyp, &config)?;
    let diag = outcome.diagnostics;
    let names = &loaded.names;
    let pick = |idx: &[usize]| idx.iter().map(|&j| names[j].clone()).collect::<Vec<_>>();
    let report = TestReportFile {
        data: d.data.display().to_string(),
        response: loaded.csv.response.clone(),
        family,
        penalty: d.penalty,
        alpha,
        seed,
        n: loaded.dataset.n(),
        intercept: loaded.intercept,
        features: loaded.csv.features.clone(),
        hypothesis: HypothesisFile {
            c: Some(hyp_file.c_rows()),
            t: Some(hyp_file.t_values()),
            family: None,
            alpha: None,
            ..hyp_file
        },
        lambda_hat: diag.lambda_hat,
        lambda_fixed: d.lambda.is_some(),
        critical_value: diag.critical_value,
        selected_full: pick(&outcome.reports[0].support_full),
        selected_reduced: pick(&outcome.reports[0].support_reduced),
        reports: outcome.reports,
        coefficients: names
            .iter()
            .enumerate()
            .map(|(j, name)| CoefficientPair {
                name: name.clone(),
                full: diag.fit_full.beta[j],
                reduced: diag.fit_reduced.beta[j],
            })
            .collect(),
        warnings: diag.warnings.clone(),
        diagnostics: diag,
    };
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    write_json(&d.output_dir, "report.json", &report)?;
    print!("{}", render_test_table(&report));
    Ok(())
}

fn cmd_fit(args: &FitArgs) -> Result<(), CliError> {
    let d = &args.data;
    let family = d.family.unwrap_or(GlmFamily::Gaussian);
    let loaded = load(d)?;
    let seed = resolve_seed(d.seed);
    let mut config = TestConfig {
        penalty: d.penalty,
        lambda: d.lambda,
        ..Default::default()
    };
    config.lasso.seed = seed;

    let out = inference::run_fit(family, &loaded.dataset, &[], &config)?;
    let shift = usize::from(loaded.intercept);
    let report = FitReportFile {
        data: d.data.display().to_string(),
        response: loaded.csv.response.clone(),
        family,
        penalty: d.penalty,
        seed,
        n: loaded.dataset.n(),
        intercept: loaded.intercept,
        lambda_hat: out.lambda_hat,
        lambda_fixed: d.lambda.is_some(),
        lasso_lambda: out.lasso_lambda,
        coefficients: loaded
            .names
            .iter()
            .enumerate()
            .map(|(j, name)| Coefficient {
                name: name.clone(),
                value: out.fit.beta[j],
            })
            .collect(),
        support: out.support.iter().map(|&j| loaded.names[j].clone()).collect(),
        support_columns: out.support.iter().map(|&j| j + 1 - shift).collect(),
        gic: out.gic,
        warnings: out.warnings,
    };
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    write_json(&d.output_dir, "coefficients.json", &report)?;
    print!("{}", render_fit_table(&report));
    Ok(())
}

#[derive(Serialize)]
struct RejectionOutput<'a> {
    scenario: &'a SimScenario,
    table: &'a sim::RejectionTable,
    summary: &'a sim::SimSummary,
    failure_messages: &'a [String],
}

#[derive(Serialize)]
struct LossOutput<'a> {
    scenario: &'a SimScenario,
    methods: &'a [sim::LossSummary],
    reps_completed: usize,
    failures: usize,
    failure_messages: &'a [String],
}

/// A scenario from a file path or a bundled name. The seed comes from
/// `--seed`, else the file, else a fresh draw.
pub fn load_scenario(args: &SimulateArgs) -> Result<SimScenario, CliError> {
    let path = Path::new(&args.scenario);
    let text = if path.is_file() {
        fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?
    } else if let Some(s) = scenarios::bundled(&args.scenario) {
        s.to_string()
    } else {
        let names: Vec<&str> = scenarios::BUNDLED.iter().map(|(n, _)| *n).collect();
        return Err(CliError::Input(format!(
            "'{}' is neither a scenario file nor a bundled scenario ({})",
            args.scenario,
            names.join(", ")
        )));
    };
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("scenario: {e}")))?;
    let has_seed = value.get("seed").is_some();
    let mut scenario: SimScenario =
        serde_json::from_value(value).map_err(|e| CliError::Input(format!("scenario: {e}")))?;
    if let Some(r) = args.reps {
        scenario.reps = r;
    }
    scenario.seed = match args.seed {
        Some(s) => s,
        None if has_seed => scenario.seed,
        None => resolve_seed(None),
    };
    scenario.validate()?;
    Ok(scenario)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    if args.jobs == Some(0) {
        return Err(CliError::Input("--jobs must be at least 1".into()));
    }
    let scenario = load_scenario(args)?;
    let dir = &args.output_dir;
    if scenario.beta_star == BetaStarSpec::Comparison {
        let report = sim::estimator_comparison(&scenario, args.jobs)?;
        let text = sim::render_loss_table(&report);
        write_json(
            dir,
            "loss_table.json",
            &LossOutput {
                scenario: &report.scenario,
                methods: &report.methods,
                reps_completed: report.reps_completed,
                failures: report.failures,
                failure_messages: &report.failure_messages,
            },
        )?;
        write_json(dir, "loss_records.json", &report.records)?;
        write_text(dir, "loss_table.txt", &text)?;
        print!("{text}");
    } else {
        let report = sim::run_replications(&scenario, args.jobs)?;
        let text = sim::render_rejection_table(&report);
        write_json(
            dir,
            "rejection_table.json",
            &RejectionOutput {
                scenario: &report.scenario,
                table: &report.table,
                summary: &report.summary,
                failure_messages: &report.failure_messages,
            },
        )?;
        write_json(dir, "replications.json", &report.records)?;
        write_text(dir, "rejection_table.txt", &text)?;
        print!("{text}");
    }
    Ok(())
}
