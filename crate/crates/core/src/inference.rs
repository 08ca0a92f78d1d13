//! Partial penalized Wald, score and likelihood-ratio statistics, dispersion
//! estimation, chi-square calibration and the end-to-end test pipeline.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::error::{Error, Result};
use crate::fit::FitResult;
use crate::glm::{self, Dataset, GlmFamily};
use crate::init::{self, CvResult, LassoConfig};
use crate::lla::{self, GicEntry, HypothesisSpec, LlaConfig};
use crate::penalty::{PenaltyKind, PenaltySpec, DEFAULT_MCP_A, DEFAULT_SCAD_A};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatisticKind {
    Wald,
    Score,
    Lrt,
}

impl StatisticKind {
    pub const ALL: [StatisticKind; 3] = [StatisticKind::Lrt, StatisticKind::Wald, StatisticKind::Score];

    pub fn name(self) -> &'static str {
        match self {
            StatisticKind::Wald => "wald",
            StatisticKind::Score => "score",
            StatisticKind::Lrt => "lrt",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic_kind: StatisticKind,
    pub value: f64,
    pub dof: usize,
    pub p_value: f64,
    pub reject: bool,
    pub phi_hat: f64,
    pub support_full: Vec<usize>,
    pub support_reduced: Vec<usize>,
    pub lambda_hat: f64,
    /// Set when the statistic came out negative and is reported unclipped.
    pub negative_warning: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoncentralParams {
    pub psi: DMatrix<f64>,
    pub h: DVector<f64>,
    pub nu: f64,
}

/// `{j ∉ M : β_j ≠ 0}`.
pub fn support_set(beta: &DVector<f64>, m: &[usize]) -> Vec<usize> {
    crate::fit::support_outside(beta, m)
}

/// Free coordinates of a fitted model: intercept, `M` and `Ŝ(β)`.
fn model_columns(data: &Dataset, m: &[usize], beta: &DVector<f64>) -> (Vec<usize>, Vec<usize>) {
    let unpen = data.unpenalized_indices(m);
    let support = support_set(beta, &unpen);
    let mut cols: Vec<usize> = unpen.into_iter().chain(support.iter().copied()).collect();
    cols.sort_unstable();
    (cols, support)
}

/// `C` embedded in the columns `cols`.
fn embed_constraint(hyp: &HypothesisSpec, cols: &[usize]) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(hyp.r(), cols.len());
    for (k, &j) in hyp.m().iter().enumerate() {
        let pos = cols.iter().position(|&c| c == j).expect("M is always free");
        a.set_column(pos, &hyp.c().column(k));
    }
    a
}

fn factor(m: DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular(format!("{what} has non-finite entries")));
    }
    Cholesky::new(m).ok_or_else(|| Error::Singular(format!("{what} is not positive definite")))
}

fn check_phi(phi: f64) -> Result<()> {
    if !(phi > 0.0) || !phi.is_finite() {
        return Err(Error::invalid(format!("dispersion must be positive and finite, got {phi}")));
    }
    Ok(())
}

fn check_fit(data: &Dataset, fit: &FitResult) -> Result<()> {
    crate::error::ensure_len("fitted coefficients", data.n_coef(), fit.beta.len())
}

/// `n (Cβ̂_M − t)'[C K̂⁻¹_{MM} C']⁻¹(Cβ̂_M − t)/φ̂` with `K̂` the Hessian over
/// `M ∪ Ŝ(β̂_a)` (plus intercept) at the full-model fit.
pub fn wald_statistic(
    family: GlmFamily,
    data: &Dataset,
    fit_full: &FitResult,
    hyp: &HypothesisSpec,
    phi_hat: f64,
) -> Result<f64> {
    check_phi(phi_hat)?;
    check_fit(data, fit_full)?;
    hyp.validate_for(data)?;
    let (cols, _) = model_columns(data, hyp.m(), &fit_full.beta);
    let k = glm::hessian_block(family, data, &fit_full.beta, &cols)?;
    let kf = factor(k, "Hessian block over M and the full-model support")?;
    let a = embed_constraint(hyp, &cols);
    let middle = &a * kf.solve(&a.transpose());
    let mf = factor(
        (&middle + middle.transpose()) * 0.5,
        "Wald middle matrix C K^-1 C'",
    )?;
    let h = hyp.residual(&fit_full.beta);
    Ok(data.n() as f64 * h.dot(&mf.solve(&h)) / phi_hat)
}

/// `n ∇'K̂⁻¹∇/φ̂` with gradient and Hessian over `M ∪ Ŝ(β̂₀)` (plus intercept)
/// at the reduced-model fit.
pub fn score_statistic(
    family: GlmFamily,
    data: &Dataset,
    fit_reduced: &FitResult,
    hyp: &HypothesisSpec,
    phi_hat: f64,
) -> Result<f64> {
    check_phi(phi_hat)?;
    check_fit(data, fit_reduced)?;
    hyp.validate_for(data)?;
    let (cols, _) = model_columns(data, hyp.m(), &fit_reduced.beta);
    let g_all = glm::gradient(family, data, &fit_reduced.beta)?;
    let g = DVector::from_iterator(cols.len(), cols.iter().map(|&j| g_all[j]));
    let k = glm::hessian_block(family, data, &fit_reduced.beta, &cols)?;
    let kf = factor(k, "Hessian block over M and the reduced-model support")?;
    Ok(data.n() as f64 * g.dot(&kf.solve(&g)) / phi_hat)
}

/// `−2n(ℓ_n(β̂_a) − ℓ_n(β̂₀))/φ̂`, unclipped.
pub fn lrt_statistic(
    family: GlmFamily,
    data: &Dataset,
    fit_full: &FitResult,
    fit_reduced: &FitResult,
    phi_hat: f64,
) -> Result<f64> {
    check_phi(phi_hat)?;
    let la = glm::loss(family, data, &fit_full.beta)?;
    let l0 = glm::loss(family, data, &fit_reduced.beta)?;
    Ok(-2.0 * data.n() as f64 * (la - l0) / phi_hat)
}

/// Gaussian: `RSS/(n − |Ŝ| − |M| − 1)`; logistic and Poisson: 1. A perfect
/// Gaussian fit returns 0, which the statistics reject as degenerate.
pub fn dispersion_estimate(family: GlmFamily, data: &Dataset, fit: &FitResult, m: &[usize]) -> Result<f64> {
    if family.dispersion_known() {
        return Ok(1.0);
    }
    check_fit(data, fit)?;
    let excluded = data.unpenalized_indices(m);
    let s = support_set(&fit.beta, &excluded).len();
    let denom = data.n() as i64 - s as i64 - m.len() as i64 - 1;
    if denom <= 0 {
        return Err(Error::invalid(format!(
            "dispersion denominator n - |S| - |M| - 1 = {denom} is not positive"
        )));
    }
    let resid = data.y() - data.x() * &fit.beta;
    Ok(resid.norm_squared() / denom as f64)
}

fn check_dof(r: usize) -> Result<()> {
    if r == 0 {
        return Err(Error::invalid("chi-square degrees of freedom must be at least 1"));
    }
    Ok(())
}

/// `P(χ²_r ≤ x)`.
pub fn central_chisq_cdf(x: f64, r: usize) -> Result<f64> {
    check_dof(r)?;
    if x.is_nan() {
        return Err(Error::invalid("chi-square argument is NaN"));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(1.0);
    }
    Ok(gamma_lr(r as f64 / 2.0, x / 2.0))
}

fn chisq_density(x: f64, r: usize) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let k = r as f64 / 2.0;
    ((k - 1.0) * x.ln() - x / 2.0 - k * std::f64::consts::LN_2 - ln_gamma(k)).exp()
}

/// `χ²_α(r)`: the `x` with `P(χ²_r > x) = α`.
pub fn chisq_upper_quantile(alpha: f64, r: usize) -> Result<f64> {
    check_dof(r)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let target = 1.0 - alpha;
    let cdf = |x: f64| gamma_lr(r as f64 / 2.0, x / 2.0);
    let mut hi = (r as f64).max(1.0);
    while cdf(hi) < target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi.max(1.0) {
            break;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..5 {
        let f = cdf(x) - target;
        let d = chisq_density(x, r);
        if !(d > 0.0) {
            break;
        }
        let next = x - f / d;
        if !(next > lo && next < hi) || (next - x).abs() <= 1e-10 * x.max(1.0) {
            if next > lo && next < hi {
                x = next;
            }
            break;
        }
        x = next;
    }
    Ok(x)
}

const NCX2_TERM_LIMIT: usize = 1_000_000;

/// `P(χ²_r(ν) ≤ x)` as a Poisson(ν/2) mixture of central CDFs, summed until
/// the remaining Poisson mass is below `1e-12`.
pub fn noncentral_chisq_cdf(x: f64, r: usize, nu: f64) -> Result<f64> {
    check_dof(r)?;
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(Error::invalid(format!("noncentrality must be finite and nonnegative, got {nu}")));
    }
    if nu == 0.0 {
        return central_chisq_cdf(x, r);
    }
    if x.is_nan() {
        return Err(Error::invalid("chi-square argument is NaN"));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    let half = nu / 2.0;
    let ln_half = half.ln();
    let mut total = 0.0;
    let mut mass = 0.0;
    for j in 0..NCX2_TERM_LIMIT {
        let jf = j as f64;
        let lw = -half + jf * ln_half - ln_gamma(jf + 1.0);
        let w = lw.exp();
        mass += w;
        if w > 0.0 {
            total += w * gamma_lr(r as f64 / 2.0 + jf, x / 2.0);
        }
        if jf > half && mass >= 1.0 - 1e-12 {
            return Ok(total.clamp(0.0, 1.0));
        }
    }
    Err(Error::NonConvergence {
        solver: "noncentral chi-square series",
        iterations: NCX2_TERM_LIMIT,
        residual: 1.0 - mass,
        last: None,
        trace: Vec::new(),
    })
}

/// `h = Cβ*_M − t`, `Ψ = C̃ K_n⁻¹ C̃'` with `K_n` the Hessian at `β*` over `M ∪ S`
/// (plus intercept) and `ν = n h'Ψ⁻¹h/φ*`.
pub fn noncentral_params(
    family: GlmFamily,
    data: &Dataset,
    beta_star: &DVector<f64>,
    hyp: &HypothesisSpec,
    phi_star: f64,
    support_star: &[usize],
) -> Result<NoncentralParams> {
    check_phi(phi_star)?;
    hyp.validate_for(data)?;
    crate::error::ensure_len("beta_star", data.n_coef(), beta_star.len())?;
    let mut cols = data.unpenalized_indices(hyp.m());
    for &j in support_star {
        if j >= data.n_coef() {
            return Err(Error::invalid(format!("support index {j} out of range")));
        }
        if !cols.contains(&j) {
            cols.push(j);
        }
    }
    cols.sort_unstable();
    let k = glm::hessian_block(family, data, beta_star, &cols)?;
    let kf = factor(k, "population Hessian block K_n")?;
    let a = embed_constraint(hyp, &cols);
    let psi = &a * kf.solve(&a.transpose());
    let psi = (&psi + psi.transpose()) * 0.5;
    let pf = factor(psi.clone(), "Psi")?;
    let h = hyp.residual(beta_star);
    let nu = (data.n() as f64 * h.dot(&pf.solve(&h)) / phi_star).max(0.0);
    Ok(NoncentralParams { psi, h, nu })
}

/// `P(χ²_r(ν) > χ²_α(r))`.
pub fn power_approx(
    family: GlmFamily,
    data: &Dataset,
    beta_star: &DVector<f64>,
    hyp: &HypothesisSpec,
    phi_star: f64,
    support_star: &[usize],
    alpha: f64,
) -> Result<f64> {
    let params = noncentral_params(family, data, beta_star, hyp, phi_star, support_star)?;
    let q = chisq_upper_quantile(alpha, hyp.r())?;
    if params.nu == 0.0 {
        return Ok(alpha);
    }
    Ok(1.0 - noncentral_chisq_cdf(q, hyp.r(), params.nu)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestConfig {
    pub alpha: f64,
    pub penalty: PenaltyKind,
    /// Concavity parameter; `None` uses 3.7 for SCAD and 3 for MCP.
    pub penalty_a: Option<f64>,
    pub lasso: LassoConfig,
    pub lla: LlaConfig,
    /// Fixed `λ` bypassing GIC.
    pub lambda: Option<f64>,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            penalty: PenaltyKind::Scad,
            penalty_a: None,
            lasso: LassoConfig::default(),
            lla: LlaConfig::default(),
            lambda: None,
        }
    }
}

impl TestConfig {
    pub fn penalty_spec(&self, lambda: f64) -> Result<PenaltySpec> {
        let a = self.penalty_a.unwrap_or(match self.penalty {
            PenaltyKind::Scad => DEFAULT_SCAD_A,
            PenaltyKind::Mcp => DEFAULT_MCP_A,
            PenaltyKind::L1 => f64::INFINITY,
        });
        PenaltySpec::new(self.penalty, lambda, a)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::invalid("fixed lambda must be positive"));
            }
        }
        self.penalty_spec(1.0)?;
        self.lasso.validate()?;
        self.lla.validate()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestDiagnostics {
    pub lasso_lambda: f64,
    pub cv: Option<CvResult>,
    pub beta_init: DVector<f64>,
    /// `None` when `λ` was fixed.
    pub gic: Option<Vec<GicEntry>>,
    pub lambda_hat: f64,
    pub fit_full: FitResult,
    pub fit_reduced: FitResult,
    pub phi_full: f64,
    pub phi_reduced: f64,
    pub critical_value: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestOutcome {
    /// LRT, Wald, score.
    pub reports: Vec<TestReport>,
    pub diagnostics: TestDiagnostics,
}

impl TestOutcome {
    pub fn report(&self, kind: StatisticKind) -> &TestReport {
        self.reports
            .iter()
            .find(|r| r.statistic_kind == kind)
            .expect("all three statistics are reported")
    }
}

/// Statistics, p-values and decisions from a given pair of fits.
pub fn reports_from_fits(
    family: GlmFamily,
    data: &Dataset,
    hyp: &HypothesisSpec,
    fit_full: &FitResult,
    fit_reduced: &FitResult,
    alpha: f64,
    lambda_hat: f64,
) -> Result<(Vec<TestReport>, f64, f64)> {
    let phi_a = dispersion_estimate(family, data, fit_full, hyp.m()).map_err(|e| e.at("full-model dispersion"))?;
    let phi_0 =
        dispersion_estimate(family, data, fit_reduced, hyp.m()).map_err(|e| e.at("reduced-model dispersion"))?;
    let r = hyp.r();
    let crit = chisq_upper_quantile(alpha, r)?;
    let unpen = data.unpenalized_indices(hyp.m());
    let support_full = support_set(&fit_full.beta, &unpen);
    let support_reduced = support_set(&fit_reduced.beta, &unpen);
    let mut out = Vec::with_capacity(3);
    for kind in StatisticKind::ALL {
        let (value, phi) = match kind {
            StatisticKind::Lrt => (
                lrt_statistic(family, data, fit_full, fit_reduced, phi_a).map_err(|e| e.at("LRT statistic"))?,
                phi_a,
            ),
            StatisticKind::Wald => (
                wald_statistic(family, data, fit_full, hyp, phi_a).map_err(|e| e.at("Wald statistic"))?,
                phi_a,
            ),
            StatisticKind::Score => (
                score_statistic(family, data, fit_reduced, hyp, phi_0).map_err(|e| e.at("score statistic"))?,
                phi_0,
            ),
        };
        let p_value = 1.0 - central_chisq_cdf(value.max(0.0), r)?;
        out.push(TestReport {
            statistic_kind: kind,
            value,
            dof: r,
            p_value,
            reject: value > crit,
            phi_hat: phi,
            support_full: support_full.clone(),
            support_reduced: support_reduced.clone(),
            lambda_hat,
            negative_warning: value < 0.0,
        });
    }
    Ok((out, phi_a, phi_0))
}

/// Lasso initializer: CV-selected `λ` (or the fixed config grid) and its fit.
/// A fit that stops at the iteration cap is used as is, with a warning.
pub fn lasso_initializer(
    family: GlmFamily,
    data: &Dataset,
    config: &LassoConfig,
    warnings: &mut Vec<String>,
) -> Result<(DVector<f64>, f64, CvResult)> {
    let cv = init::cv_select(family, data, config).map_err(|e| e.at("cross-validation"))?;
    let beta = match init::fit_lasso(family, data, cv.lambda, config) {
        Ok(f) => f.beta,
        Err(Error::NonConvergence {
            last: Some(b),
            residual,
            ..
        }) => {
            let msg = format!("lasso initializer stopped at the iteration cap (residual {residual:.3e})");
            log::warn!("{msg}");
            warnings.push(msg);
            b
        }
        Err(e) => return Err(e.at("lasso initializer")),
    };
    Ok((beta, cv.lambda, cv))
}

/// The full pipeline: lasso start, reduced-model LLA path, GIC, both LLA
/// fits at `λ̂`, dispersion and the three tests.
pub fn run_test(
    family: GlmFamily,
    data: &Dataset,
    hyp: &HypothesisSpec,
    config: &TestConfig,
) -> Result<TestOutcome> {
    config.validate()?;
    data.validate_for(family)?;
    hyp.validate_for(data)?;
    let mut warnings = Vec::new();
    let (beta_init, lasso_lambda, cv) = lasso_initializer(family, data, &config.lasso, &mut warnings)?;

    let (lambda_hat, gic, fit_reduced) = match config.lambda {
        Some(lam) => {
            let pen = config.penalty_spec(lam)?;
            let fit = lla::lla_reduced(family, data, hyp, &pen, &beta_init, &config.lla)
                .map_err(|e| e.at("reduced-model LLA"))?;
            (lam, None, fit)
        }
        None => {
            let grid = lla::default_grid(family, data, hyp, &config.lla).map_err(|e| e.at("LLA lambda grid"))?;
            let pen = config.penalty_spec(grid[0])?;
            let path = lla::lla_reduced_path(family, data, hyp, &pen, &beta_init, &grid, &config.lla)
                .map_err(|e| e.at("reduced-model LLA path"))?;
            let (lam, idx, table) = lla::gic_select(family, data, &path).map_err(|e| e.at("GIC"))?;
            let fit = path.into_iter().nth(idx).expect("index from gic_select").1;
            (lam, Some(table), fit)
        }
    };
    let pen = config.penalty_spec(lambda_hat)?;
    let fit_full = lla::lla_full(family, data, hyp.m(), &pen, &beta_init, &config.lla)
        .map_err(|e| e.at("full-model LLA"))?;

    let (reports, phi_full, phi_reduced) =
        reports_from_fits(family, data, hyp, &fit_full, &fit_reduced, config.alpha, lambda_hat)?;
    if reports.iter().any(|r| r.negative_warning) {
        let msg = "likelihood-ratio statistic is negative; full and reduced supports differ".to_string();
        log::warn!("{msg}");
        warnings.push(msg);
    }
    Ok(TestOutcome {
        reports,
        diagnostics: TestDiagnostics {
            lasso_lambda,
            cv: Some(cv),
            beta_init,
            gic,
            lambda_hat,
            fit_full,
            fit_reduced,
            phi_full,
            phi_reduced,
            critical_value: chisq_upper_quantile(config.alpha, hyp.r())?,
            warnings,
        },
    })
}

/// A penalized fit without a hypothesis: lasso start, full-model LLA path
/// with `m` unpenalized, GIC (or the fixed `λ`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitOutcome {
    pub lasso_lambda: f64,
    pub cv: CvResult,
    pub beta_init: DVector<f64>,
    pub gic: Option<Vec<GicEntry>>,
    pub lambda_hat: f64,
    pub fit: FitResult,
    /// Selected nuisance coordinates.
    pub support: Vec<usize>,
    pub warnings: Vec<String>,
}

pub fn run_fit(family: GlmFamily, data: &Dataset, m: &[usize], config: &TestConfig) -> Result<FitOutcome> {
    config.validate()?;
    data.validate_for(family)?;
    let mut warnings = Vec::new();
    let (beta_init, lasso_lambda, cv) = lasso_initializer(family, data, &config.lasso, &mut warnings)?;
    let (lambda_hat, gic, fit) = match config.lambda {
        Some(lam) => {
            let pen = config.penalty_spec(lam)?;
            let fit = lla::lla_full(family, data, m, &pen, &beta_init, &config.lla)
                .map_err(|e| e.at("full-model LLA"))?;
            (lam, None, fit)
        }
        None => {
            let grid =
                lla::default_grid_full(family, data, m, &config.lla).map_err(|e| e.at("LLA lambda grid"))?;
            let pen = config.penalty_spec(grid[0])?;
            let path = lla::lla_full_path(family, data, m, &pen, &beta_init, &grid, &config.lla)
                .map_err(|e| e.at("full-model LLA path"))?;
            let (lam, idx, table) = lla::gic_select(family, data, &path).map_err(|e| e.at("GIC"))?;
            let fit = path.into_iter().nth(idx).expect("index from gic_select").1;
            (lam, Some(table), fit)
        }
    };
    let support = support_set(&fit.beta, &data.unpenalized_indices(m));
    Ok(FitOutcome {
        lasso_lambda,
        cv,
        beta_init,
        gic,
        lambda_hat,
        fit,
        support,
        warnings,
    })
}
