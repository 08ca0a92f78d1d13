//! Seeded Monte-Carlo engine for rejection-rate and estimator-comparison
//! tables.
//!
//! Replication `i` draws everything from a ChaCha20 stream keyed by
//! `(seed, i)`, so results do not depend on scheduling or thread count.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::{Dataset, GlmFamily};
use crate::inference::{self, StatisticKind, TestConfig, TestOutcome};
use crate::lla::HypothesisSpec;
use crate::oracle::{self, OracleProblem};
use crate::penalty::PenaltyKind;

/// Tolerance for counting an LLA fit as equal to its oracle.
pub const ORACLE_MATCH_TOL: f64 = 1e-6;

/// Largest tolerated share of failed replications.
pub const MAX_FAILURE_RATE: f64 = 0.05;

/// Builder for `β*` over the features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaStarSpec {
    /// `(2, −2−h₁, 0, …)`.
    Testing,
    /// `(3, 1.5, 0, 0, 2, 0, …)`.
    Comparison,
    /// Leading coefficients, zero-padded to `p`.
    Custom(Vec<f64>),
}

/// Hypotheses on the features, 1-based as written in the tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisChoice {
    /// `β₁ + β₂ = 0`.
    H1,
    /// `β₂ = −2`.
    H2,
    /// `β₁ + β₂ + β₃ + β₄ = 0`.
    H3,
    /// `C β_M = t` with 1-based feature indices `m` and row-major `c`.
    Custom {
        m: Vec<usize>,
        c: Vec<Vec<f64>>,
        t: Vec<f64>,
    },
}

fn default_rho() -> f64 {
    0.5
}

fn default_alpha() -> f64 {
    0.05
}

fn default_penalty() -> PenaltyKind {
    PenaltyKind::Scad
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    #[serde(default)]
    pub name: Option<String>,
    pub family: GlmFamily,
    pub n: usize,
    pub p: usize,
    #[serde(default = "default_rho")]
    pub rho: f64,
    pub beta_star: BetaStarSpec,
    #[serde(default)]
    pub h1: f64,
    pub hypothesis: HypothesisChoice,
    pub reps: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub intercept: bool,
    #[serde(default = "default_penalty")]
    pub penalty: PenaltyKind,
}

impl SimScenario {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::invalid("scenario needs at least one replication"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid("scenario alpha must lie in (0, 1)"));
        }
        if !(self.rho.abs() < 1.0) {
            return Err(Error::invalid("AR(1) correlation must satisfy |rho| < 1"));
        }
        if self.n == 0 || self.p == 0 {
            return Err(Error::invalid("scenario needs n >= 1 and p >= 1"));
        }
        if !self.h1.is_finite() {
            return Err(Error::invalid("h1 must be finite"));
        }
        self.beta_star()?;
        self.hypothesis_features()?;
        Ok(())
    }

    /// `β*` over the `p` features.
    pub fn beta_star(&self) -> Result<DVector<f64>> {
        let lead: Vec<f64> = match &self.beta_star {
            BetaStarSpec::Testing => vec![2.0, -2.0 - self.h1],
            BetaStarSpec::Comparison => vec![3.0, 1.5, 0.0, 0.0, 2.0],
            BetaStarSpec::Custom(v) => v.clone(),
        };
        if lead.len() > self.p {
            return Err(Error::invalid(format!(
                "beta_star needs {} features but p = {}",
                lead.len(),
                self.p
            )));
        }
        let mut b = DVector::zeros(self.p);
        for (j, v) in lead.into_iter().enumerate() {
            b[j] = v;
        }
        Ok(b)
    }

    /// `(M, C, t)` with 0-based feature indices.
    fn hypothesis_features(&self) -> Result<(Vec<usize>, DMatrix<f64>, DVector<f64>)> {
        let (m, c, t) = match &self.hypothesis {
            HypothesisChoice::H1 => (vec![0, 1], DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), DVector::zeros(1)),
            HypothesisChoice::H2 => (vec![1], DMatrix::from_element(1, 1, 1.0), DVector::from_element(1, -2.0)),
            HypothesisChoice::H3 => (vec![0, 1, 2, 3], DMatrix::from_element(1, 4, 1.0), DVector::zeros(1)),
            HypothesisChoice::Custom { m, c, t } => {
                if m.contains(&0) {
                    return Err(Error::invalid("custom hypothesis indices are 1-based"));
                }
                let rows = c.len();
                if c.iter().any(|row| row.len() != m.len()) {
                    return Err(Error::invalid("custom hypothesis rows must have |M| entries"));
                }
                let flat: Vec<f64> = c.iter().flatten().copied().collect();
                (
                    m.iter().map(|&j| j - 1).collect(),
                    DMatrix::from_row_slice(rows, m.len(), &flat),
                    DVector::from_vec(t.clone()),
                )
            }
        };
        if let Some(&j) = m.iter().find(|&&j| j >= self.p) {
            return Err(Error::invalid(format!("hypothesis feature {} exceeds p = {}", j + 1, self.p)));
        }
        Ok((m, c, t))
    }

    /// The hypothesis in coefficient indices of a dataset built from this
    /// scenario.
    pub fn hypothesis_spec(&self) -> Result<HypothesisSpec> {
        let (m, c, t) = self.hypothesis_features()?;
        let shift = usize::from(self.intercept);
        HypothesisSpec::new(m.into_iter().map(|j| j + shift).collect(), c, t)
    }

    /// `β*` in coefficient indices (intercept 0).
    pub fn beta_star_coef(&self) -> Result<DVector<f64>> {
        let b = self.beta_star()?;
        Ok(if self.intercept { b.insert_row(0, 0.0) } else { b })
    }

    pub fn test_config(&self) -> TestConfig {
        TestConfig {
            alpha: self.alpha,
            penalty: self.penalty,
            ..Default::default()
        }
    }

    /// RNG for replication `rep`.
    pub fn rep_rng(&self, rep: usize) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(rep as u64);
        rng
    }

    /// Dataset for replication `rep` and a seed for its cross-validation.
    pub fn generate(&self, rep: usize) -> Result<(Dataset, u64)> {
        let mut rng = self.rep_rng(rep);
        let x = gen_design(self.n, self.p, self.rho, &mut rng)?;
        let y = gen_response(self.family, &x, &self.beta_star()?, &mut rng)?;
        let cv_seed = rng.next_u64();
        Ok((Dataset::new(x, y, self.intercept)?, cv_seed))
    }
}

/// Rows i.i.d. `N(0, Σ)` with `Σ_jk = ρ^|j−k|`, by the AR(1) recursion.
pub fn gen_design<R: Rng + ?Sized>(n: usize, p: usize, rho: f64, rng: &mut R) -> Result<DMatrix<f64>> {
    if !(rho.abs() < 1.0) {
        return Err(Error::invalid("AR(1) correlation must satisfy |rho| < 1"));
    }
    let s = (1.0 - rho * rho).sqrt();
    let mut x = DMatrix::zeros(n, p);
    for i in 0..n {
        let mut prev = 0.0;
        for j in 0..p {
            let z: f64 = rng.sample(StandardNormal);
            let v = if j == 0 { z } else { rho * prev + s * z };
            x[(i, j)] = v;
            prev = v;
        }
    }
    Ok(x)
}

/// Draw `y` given `Xβ*`.
pub fn gen_response<R: Rng + ?Sized>(
    family: GlmFamily,
    x: &DMatrix<f64>,
    beta_star: &DVector<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    crate::error::ensure_len("beta_star", x.ncols(), beta_star.len())?;
    let eta = x * beta_star;
    let mut y = DVector::zeros(x.nrows());
    for i in 0..x.nrows() {
        y[i] = match family {
            GlmFamily::Gaussian => eta[i] + rng.sample::<f64, _>(StandardNormal),
            GlmFamily::Logistic => {
                let p = 1.0 / (1.0 + (-eta[i]).exp());
                f64::from(rng.random::<f64>() < p)
            }
            GlmFamily::Poisson => {
                let mu = crate::glm::mean_value(GlmFamily::Poisson, eta[i]);
                if !mu.is_finite() || mu > 1e15 {
                    return Err(Error::Overflow("poisson"));
                }
                if mu <= 0.0 {
                    0.0
                } else {
                    Poisson::new(mu)
                        .map_err(|e| Error::invalid(format!("poisson mean {mu}: {e}")))?
                        .sample(rng)
                }
            }
        };
    }
    Ok(y)
}

/// Decisions and values of the three statistics, in [`StatisticKind::ALL`]
/// order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decisions {
    pub values: [f64; 3],
    pub reject: [bool; 3],
}

impl Decisions {
    fn from_reports(reports: &[inference::TestReport]) -> Self {
        let mut values = [0.0; 3];
        let mut reject = [false; 3];
        for (k, kind) in StatisticKind::ALL.iter().enumerate() {
            let r = reports
                .iter()
                .find(|r| r.statistic_kind == *kind)
                .expect("three reports");
            values[k] = r.value;
            reject[k] = r.reject;
        }
        Self { values, reject }
    }

    /// All three statistics agree.
    pub fn unanimous(&self) -> bool {
        self.reject[0] == self.reject[1] && self.reject[1] == self.reject[2]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub rep: usize,
    pub lambda_hat: f64,
    pub lla: Decisions,
    pub oracle: Decisions,
    pub full_matches_oracle: bool,
    pub reduced_matches_oracle: bool,
    /// Max-norm distances between the LLA and oracle fits.
    pub full_oracle_gap: f64,
    pub reduced_oracle_gap: f64,
    pub events_full: bool,
    pub events_reduced: bool,
    pub power_approx: f64,
    pub negative_lrt: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionEntry {
    pub statistic: StatisticKind,
    /// `"lla"` or `"oracle"`.
    pub estimator: String,
    pub percent: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionTable {
    pub entries: Vec<RejectionEntry>,
    pub reps_completed: usize,
    pub failures: usize,
}

impl RejectionTable {
    pub fn get(&self, statistic: StatisticKind, estimator: &str) -> &RejectionEntry {
        self.entries
            .iter()
            .find(|e| e.statistic == statistic && e.estimator == estimator)
            .expect("every statistic/estimator pair is tabulated")
    }
}

/// Rates computed from the per-replication records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    /// LLA and oracle decisions coincide for all three statistics.
    pub lla_oracle_decision_agreement: f64,
    /// Both LLA fits equal their oracles within [`ORACLE_MATCH_TOL`].
    pub oracle_match_rate: f64,
    pub full_oracle_match_rate: f64,
    pub reduced_oracle_match_rate: f64,
    /// Events hold for both oracle fits.
    pub events_rate: f64,
    /// Pairwise agreement of LLA decisions: (LRT, Wald), (LRT, score),
    /// (Wald, score).
    pub pairwise_agreement: [f64; 3],
    pub mean_power_approx: f64,
    pub negative_lrt_count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimReport {
    pub scenario: SimScenario,
    pub table: RejectionTable,
    pub summary: SimSummary,
    pub records: Vec<RepRecord>,
    pub failure_messages: Vec<String>,
}

fn max_gap(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax()
}

/// True support of `β*` in coefficient indices.
fn true_support(beta: &DVector<f64>, intercept: bool) -> Vec<usize> {
    beta.iter()
        .enumerate()
        .filter(|&(j, &v)| v != 0.0 && !(intercept && j == 0))
        .map(|(j, _)| j)
        .collect()
}

fn one_replication(scenario: &SimScenario, rep: usize) -> Result<RepRecord> {
    let (data, cv_seed) = scenario.generate(rep)?;
    let hyp = scenario.hypothesis_spec()?;
    let beta_star = scenario.beta_star_coef()?;
    let family = scenario.family;
    let mut config = scenario.test_config();
    config.lasso.seed = cv_seed;
    let outcome: TestOutcome = inference::run_test(family, &data, &hyp, &config)?;
    let diag = &outcome.diagnostics;

    let support = true_support(&beta_star, scenario.intercept);
    let problem = OracleProblem::new(family, &data, hyp.m(), &support, Some(hyp.clone()))?;
    let of = oracle::fit_oracle_full(&problem)?;
    let or = oracle::fit_oracle_reduced(&problem)?;
    let (oracle_reports, _, _) =
        inference::reports_from_fits(family, &data, &hyp, &of, &or, scenario.alpha, diag.lambda_hat)
            .map_err(|e| e.at("oracle statistics"))?;

    let pen = config.penalty_spec(diag.lambda_hat)?;
    let ev_full = oracle::check_lla_events(&problem, &of, &pen, &diag.beta_init, Some(&beta_star))?;
    let ev_red = oracle::check_lla_events(&problem, &or, &pen, &diag.beta_init, Some(&beta_star))?;

    let phi_star = 1.0;
    let power = inference::power_approx(family, &data, &beta_star, &hyp, phi_star, problem.s(), scenario.alpha)
        .map_err(|e| e.at("power approximation"))?;

    let full_gap = max_gap(&diag.fit_full.beta, &of.beta);
    let reduced_gap = max_gap(&diag.fit_reduced.beta, &or.beta);
    Ok(RepRecord {
        rep,
        lambda_hat: diag.lambda_hat,
        lla: Decisions::from_reports(&outcome.reports),
        oracle: Decisions::from_reports(&oracle_reports),
        full_matches_oracle: full_gap <= ORACLE_MATCH_TOL,
        reduced_matches_oracle: reduced_gap <= ORACLE_MATCH_TOL,
        full_oracle_gap: full_gap,
        reduced_oracle_gap: reduced_gap,
        events_full: ev_full.all_hold(),
        events_reduced: ev_red.all_hold(),
        power_approx: power,
        negative_lrt: outcome.reports.iter().any(|r| r.negative_warning),
    })
}

/// Run `f` over `0..reps` on `jobs` threads (all cores when `None`), keeping
/// replication order.
fn par_reps<T: Send>(reps: usize, jobs: Option<usize>, f: impl Fn(usize) -> T + Sync + Send) -> Result<Vec<T>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        if j == 0 {
            return Err(Error::invalid("--jobs must be at least 1"));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker threads: {e}")))?;
    Ok(pool.install(|| (0..reps).into_par_iter().map(&f).collect()))
}

fn split_failures<T>(reps: usize, results: Vec<Result<T>>) -> Result<(Vec<T>, Vec<String>)> {
    let mut ok = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    let mut first: Option<Error> = None;
    for (rep, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => {
                log::warn!("replication {rep} failed: {e}");
                failures.push(format!("replication {rep}: {e}"));
                first.get_or_insert(e);
            }
        }
    }
    if failures.len() as f64 > MAX_FAILURE_RATE * reps as f64 {
        let e = first.expect("failures recorded");
        return Err(e.at(format!(
            "simulation: {} of {reps} replications failed",
            failures.len()
        )));
    }
    Ok((ok, failures))
}

fn percent_se(hits: usize, total: usize) -> (f64, f64) {
    if total == 0 {
        return (f64::NAN, f64::NAN);
    }
    let p = hits as f64 / total as f64;
    (100.0 * p, 100.0 * (p * (1.0 - p) / total as f64).sqrt())
}

fn rate(records: &[RepRecord], f: impl Fn(&RepRecord) -> bool) -> f64 {
    if records.is_empty() {
        return f64::NAN;
    }
    records.iter().filter(|r| f(r)).count() as f64 / records.len() as f64
}

/// Tally a rejection table and summary from replication records.
pub fn tabulate(records: &[RepRecord], failures: usize) -> (RejectionTable, SimSummary) {
    let total = records.len();
    let mut entries = Vec::new();
    for estimator in ["lla", "oracle"] {
        for (k, kind) in StatisticKind::ALL.iter().enumerate() {
            let hits = records
                .iter()
                .filter(|r| {
                    if estimator == "lla" {
                        r.lla.reject[k]
                    } else {
                        r.oracle.reject[k]
                    }
                })
                .count();
            let (percent, se) = percent_se(hits, total);
            entries.push(RejectionEntry {
                statistic: *kind,
                estimator: estimator.to_string(),
                percent,
                se,
            });
        }
    }
    let pair = |a: usize, b: usize| rate(records, |r| r.lla.reject[a] == r.lla.reject[b]);
    let summary = SimSummary {
        lla_oracle_decision_agreement: rate(records, |r| r.lla.reject == r.oracle.reject),
        oracle_match_rate: rate(records, |r| r.full_matches_oracle && r.reduced_matches_oracle),
        full_oracle_match_rate: rate(records, |r| r.full_matches_oracle),
        reduced_oracle_match_rate: rate(records, |r| r.reduced_matches_oracle),
        events_rate: rate(records, |r| r.events_full && r.events_reduced),
        pairwise_agreement: [pair(0, 1), pair(0, 2), pair(1, 2)],
        mean_power_approx: if total == 0 {
            f64::NAN
        } else {
            records.iter().map(|r| r.power_approx).sum::<f64>() / total as f64
        },
        negative_lrt_count: records.iter().filter(|r| r.negative_lrt).count(),
    };
    (
        RejectionTable {
            entries,
            reps_completed: total,
            failures,
        },
        summary,
    )
}

/// Rejection rates of the LLA and oracle tests over seeded replications.
pub fn run_replications(scenario: &SimScenario, jobs: Option<usize>) -> Result<SimReport> {
    scenario.validate()?;
    scenario.hypothesis_spec()?;
    let results = par_reps(scenario.reps, jobs, |rep| one_replication(scenario, rep))?;
    let (records, failure_messages) = split_failures(scenario.reps, results)?;
    let (table, summary) = tabulate(&records, failure_messages.len());
    Ok(SimReport {
        scenario: scenario.clone(),
        table,
        summary,
        records,
        failure_messages,
    })
}

/// Estimation error of one fit against `β*` (features only).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationLoss {
    pub l1: f64,
    pub l2: f64,
    pub false_positives: usize,
    pub false_negatives: usize,
}

/// Losses and selection errors. Coordinates in `always_selected` count as
/// selected regardless of their value.
pub fn estimation_loss(
    beta_hat: &DVector<f64>,
    beta_star: &DVector<f64>,
    intercept: Option<usize>,
    always_selected: &[usize],
) -> Result<EstimationLoss> {
    crate::error::ensure_len("beta_hat", beta_star.len(), beta_hat.len())?;
    let mut out = EstimationLoss {
        l1: 0.0,
        l2: 0.0,
        false_positives: 0,
        false_negatives: 0,
    };
    for j in 0..beta_star.len() {
        if Some(j) == intercept {
            continue;
        }
        let d = beta_hat[j] - beta_star[j];
        out.l1 += d.abs();
        out.l2 += d * d;
        let selected = beta_hat[j] != 0.0 || always_selected.contains(&j);
        let truth = beta_star[j] != 0.0;
        out.false_positives += usize::from(selected && !truth);
        out.false_negatives += usize::from(!selected && truth);
    }
    out.l2 = out.l2.sqrt();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

fn mean_se(v: &[f64]) -> MeanSe {
    let n = v.len() as f64;
    if v.is_empty() {
        return MeanSe {
            mean: f64::NAN,
            se: f64::NAN,
        };
    }
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    MeanSe {
        mean,
        se: (var / n).sqrt(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSummary {
    pub method: String,
    pub l1: MeanSe,
    pub l2: MeanSe,
    pub false_positives: MeanSe,
    pub false_negatives: MeanSe,
}

impl LossSummary {
    fn from_losses(method: &str, losses: &[EstimationLoss]) -> Self {
        let col = |f: &dyn Fn(&EstimationLoss) -> f64| mean_se(&losses.iter().map(f).collect::<Vec<_>>());
        Self {
            method: method.to_string(),
            l1: col(&|l| l.l1),
            l2: col(&|l| l.l2),
            false_positives: col(&|l| l.false_positives as f64),
            false_negatives: col(&|l| l.false_negatives as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub rep: usize,
    pub lambda_hat: f64,
    pub full: EstimationLoss,
    pub reduced: EstimationLoss,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LossReport {
    pub scenario: SimScenario,
    /// `lla_full` then `lla_reduced`.
    pub methods: Vec<LossSummary>,
    pub records: Vec<LossRecord>,
    pub reps_completed: usize,
    pub failures: usize,
    pub failure_messages: Vec<String>,
}

impl LossReport {
    pub fn method(&self, name: &str) -> &LossSummary {
        self.methods
            .iter()
            .find(|m| m.method == name)
            .expect("both methods are summarized")
    }
}

fn one_comparison(scenario: &SimScenario, rep: usize) -> Result<LossRecord> {
    let (data, cv_seed) = scenario.generate(rep)?;
    let hyp = scenario.hypothesis_spec()?;
    let beta_star = scenario.beta_star_coef()?;
    let mut config = scenario.test_config();
    config.lasso.seed = cv_seed;
    let outcome = inference::run_test(scenario.family, &data, &hyp, &config)?;
    let d = &outcome.diagnostics;
    let icpt = data.intercept_index();
    Ok(LossRecord {
        rep,
        lambda_hat: d.lambda_hat,
        full: estimation_loss(&d.fit_full.beta, &beta_star, icpt, hyp.m())?,
        reduced: estimation_loss(&d.fit_reduced.beta, &beta_star, icpt, &[])?,
    })
}

/// `ℓ₁`/`ℓ₂` losses and false positives/negatives of the two LLA fits.
pub fn estimator_comparison(scenario: &SimScenario, jobs: Option<usize>) -> Result<LossReport> {
    scenario.validate()?;
    let results = par_reps(scenario.reps, jobs, |rep| one_comparison(scenario, rep))?;
    let (records, failure_messages) = split_failures(scenario.reps, results)?;
    let full: Vec<EstimationLoss> = records.iter().map(|r| r.full).collect();
    let reduced: Vec<EstimationLoss> = records.iter().map(|r| r.reduced).collect();
    Ok(LossReport {
        scenario: scenario.clone(),
        methods: vec![
            LossSummary::from_losses("lla_full", &full),
            LossSummary::from_losses("lla_reduced", &reduced),
        ],
        reps_completed: records.len(),
        failures: failure_messages.len(),
        records,
        failure_messages,
    })
}

/// Aligned text layout of a rejection table.
pub fn render_rejection_table(report: &SimReport) -> String {
    let s = &report.scenario;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} n={} p={} h1={} alpha={} reps={} failures={}",
        s.name.as_deref().unwrap_or("scenario"),
        s.n,
        s.p,
        s.h1,
        s.alpha,
        report.table.reps_completed,
        report.table.failures
    );
    let _ = writeln!(out, "{:<10} {:>16} {:>16}", "statistic", "LLA % (SE)", "oracle % (SE)");
    for kind in StatisticKind::ALL {
        let a = report.table.get(kind, "lla");
        let b = report.table.get(kind, "oracle");
        let _ = writeln!(
            out,
            "{:<10} {:>16} {:>16}",
            kind.name(),
            format!("{:.2} ({:.2})", a.percent, a.se),
            format!("{:.2} ({:.2})", b.percent, b.se)
        );
    }
    out
}

/// Aligned text layout of an estimator comparison.
pub fn render_loss_table(report: &LossReport) -> String {
    let s = &report.scenario;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} n={} p={} reps={} failures={}",
        s.name.as_deref().unwrap_or("scenario"),
        s.n,
        s.p,
        report.reps_completed,
        report.failures
    );
    let _ = writeln!(
        out,
        "{:<12} {:>14} {:>14} {:>14} {:>14}",
        "method", "l1 (SE)", "l2 (SE)", "#FP (SE)", "#FN (SE)"
    );
    for m in &report.methods {
        let f = |v: &MeanSe| format!("{:.3} ({:.3})", v.mean, v.se);
        let _ = writeln!(
            out,
            "{:<12} {:>14} {:>14} {:>14} {:>14}",
            m.method,
            f(&m.l1),
            f(&m.l2),
            f(&m.false_positives),
            f(&m.false_negatives)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario() -> SimScenario {
        SimScenario {
            name: Some("t".into()),
            family: GlmFamily::Gaussian,
            n: 100,
            p: 20,
            rho: 0.5,
            beta_star: BetaStarSpec::Testing,
            h1: 0.0,
            hypothesis: HypothesisChoice::H1,
            reps: 2,
            alpha: 0.05,
            seed: 7,
            intercept: false,
            penalty: PenaltyKind::Scad,
        }
    }

    #[test]
    fn design_moments() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let x = gen_design(10_000, 4, 0.0, &mut rng).unwrap();
        for j in 0..4 {
            let c = x.column(j);
            let m = c.mean();
            let v = c.iter().map(|a| (a - m).powi(2)).sum::<f64>() / 9_999.0;
            assert!((0.8..=1.2).contains(&v));
        }
        let x = gen_design(10_000, 4, 0.5, &mut rng).unwrap();
        for j in 0..3 {
            let (a, b) = (x.column(j), x.column(j + 1));
            let (ma, mb) = (a.mean(), b.mean());
            let cov: f64 = a.iter().zip(b.iter()).map(|(u, v)| (u - ma) * (v - mb)).sum();
            let va: f64 = a.iter().map(|u| (u - ma).powi(2)).sum();
            let vb: f64 = b.iter().map(|v| (v - mb).powi(2)).sum();
            assert!((cov / (va * vb).sqrt() - 0.5).abs() < 0.05);
        }
        assert!(gen_design(3, 3, 1.0, &mut rng).is_err());
    }

    #[test]
    fn design_is_deterministic() {
        let s = scenario();
        let (a, _) = s.generate(3).unwrap();
        let (b, _) = s.generate(3).unwrap();
        assert_eq!(a.x(), b.x());
        assert_eq!(a.y(), b.y());
        let (c, _) = s.generate(4).unwrap();
        assert_ne!(a.x(), c.x());
    }

    #[test]
    fn response_means() {
        let n = 20_000;
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let x = gen_design(n, 3, 0.5, &mut rng).unwrap();
        let y = gen_response(GlmFamily::Gaussian, &x, &DVector::zeros(3), &mut rng).unwrap();
        assert!(y.mean().abs() < 3.0 / (n as f64).sqrt());
        let y = gen_response(GlmFamily::Logistic, &x, &DVector::zeros(3), &mut rng).unwrap();
        assert!((y.mean() - 0.5).abs() < 3.0 * 0.5 / (n as f64).sqrt());
        let y = gen_response(GlmFamily::Poisson, &x, &DVector::zeros(3), &mut rng).unwrap();
        assert!((y.mean() - 1.0).abs() < 0.05);
    }

    #[test]
    fn scenario_builders() {
        let mut s = scenario();
        s.h1 = 0.2;
        let b = s.beta_star().unwrap();
        assert_eq!((b[0], b[1], b[2]), (2.0, -2.2, 0.0));
        s.beta_star = BetaStarSpec::Comparison;
        let b = s.beta_star().unwrap();
        assert_eq!(&b.as_slice()[..6], &[3.0, 1.5, 0.0, 0.0, 2.0, 0.0]);
        s.hypothesis = HypothesisChoice::Custom {
            m: vec![3],
            c: vec![vec![1.0]],
            t: vec![0.0],
        };
        assert_eq!(s.hypothesis_spec().unwrap().m(), &[2]);
        s.intercept = true;
        assert_eq!(s.hypothesis_spec().unwrap().m(), &[3]);
        s.reps = 0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn injected_truth_has_zero_loss() {
        let b = DVector::from_vec(vec![3.0, 1.5, 0.0, 0.0, 2.0, 0.0]);
        let l = estimation_loss(&b, &b, None, &[]).unwrap();
        assert_eq!((l.l1, l.l2, l.false_positives, l.false_negatives), (0.0, 0.0, 0, 0));
        let l = estimation_loss(&b, &b, None, &[2]).unwrap();
        assert_eq!(l.false_positives, 1);
    }

    #[test]
    fn se_formula() {
        let (p, se) = percent_se(7, 100);
        assert!((p - 7.0).abs() < 1e-12);
        assert!((se - 100.0 * (0.07f64 * 0.93 / 100.0).sqrt()).abs() < 1e-10);
    }
}
