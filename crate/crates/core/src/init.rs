//! ℓ₁-penalized initial estimator
//!
//! ```text
//! β̂_lasso = argmin ℓ_n(β) + λ Σ_{j ≠ intercept} |β_j|
//! ```
//!
//! solved by monotone accelerated proximal gradient with backtracking, plus
//! K-fold cross-validated choice of `λ`.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{support_outside, FitResult};
use crate::glm::{self, Dataset, GlmFamily};
use crate::linalg::{log_grid, norm_inf, soft_threshold};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LassoConfig {
    /// Descending grid; `None` builds `n_lambda` log-spaced points from
    /// `λ_max` down to `lambda_min_ratio·λ_max`.
    pub lambda_grid: Option<Vec<f64>>,
    pub n_lambda: usize,
    pub lambda_min_ratio: f64,
    pub folds: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self {
            lambda_grid: None,
            n_lambda: 50,
            lambda_min_ratio: 0.01,
            folds: 10,
            max_iter: 20_000,
            tol: 1e-7,
            seed: 0,
        }
    }
}

impl LassoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::invalid("cross-validation needs at least 2 folds"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid("lasso tolerance must be positive"));
        }
        if let Some(g) = &self.lambda_grid {
            if g.is_empty() {
                return Err(Error::invalid("lambda grid is empty"));
            }
            if g.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
                return Err(Error::invalid("lambda grid values must be positive"));
            }
            if g.windows(2).any(|w| w[1] >= w[0]) {
                return Err(Error::invalid("lambda grid must be strictly descending"));
            }
        } else if self.n_lambda == 0 || !(self.lambda_min_ratio > 0.0 && self.lambda_min_ratio < 1.0)
        {
            return Err(Error::invalid("invalid default lambda grid settings"));
        }
        Ok(())
    }
}

/// Smooth part of the objective, in standardized coordinates.
enum Smooth {
    /// Gaussian loss as `½β'Gβ − c'β`.
    Quadratic { gram: DMatrix<f64>, xty: DVector<f64> },
    Glm { family: GlmFamily, data: Dataset },
}

impl Smooth {
    fn value(&self, beta: &DVector<f64>) -> f64 {
        match self {
            Smooth::Quadratic { gram, xty } => 0.5 * beta.dot(&(gram * beta)) - xty.dot(beta),
            Smooth::Glm { family, data } => {
                let eta = data.x() * beta;
                glm::loss_from_eta(*family, data.y(), &eta)
            }
        }
    }

    fn value_grad(&self, beta: &DVector<f64>) -> (f64, DVector<f64>) {
        match self {
            Smooth::Quadratic { gram, xty } => {
                let gb = gram * beta;
                let f = 0.5 * beta.dot(&gb) - xty.dot(beta);
                (f, gb - xty)
            }
            Smooth::Glm { family, data } => {
                let eta = data.x() * beta;
                (
                    glm::loss_from_eta(*family, data.y(), &eta),
                    glm::gradient_from_eta(*family, data, &eta),
                )
            }
        }
    }
}

/// Column scaling used internally. The objective is unchanged: the penalty on
/// a standardized coefficient is reweighted by `1/scale`.
struct Standardized {
    smooth: Smooth,
    scale: DVector<f64>,
    /// Per-coordinate penalty multiplier (0 for the intercept).
    penalty: DVector<f64>,
    lipschitz: f64,
}

impl Standardized {
    fn new(family: GlmFamily, data: &Dataset) -> Self {
        let n = data.n() as f64;
        let q = data.n_coef();
        let icpt = data.intercept_index();
        let mut scale = DVector::from_element(q, 1.0);
        for j in 0..q {
            if Some(j) == icpt {
                continue;
            }
            let col = data.x().column(j);
            let mean = if icpt.is_some() { col.sum() / n } else { 0.0 };
            let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            if ss > 0.0 {
                scale[j] = ss.sqrt();
            }
        }
        let mut x = data.x().clone();
        for (j, mut c) in x.column_iter_mut().enumerate() {
            c /= scale[j];
        }
        let penalty = DVector::from_fn(q, |j, _| {
            if Some(j) == icpt {
                0.0
            } else {
                1.0 / scale[j]
            }
        });
        let top_eig = top_eigenvalue(&x) / n;
        let smooth = match family {
            GlmFamily::Gaussian => Smooth::Quadratic {
                gram: x.tr_mul(&x) / n,
                xty: x.tr_mul(data.y()) / n,
            },
            _ => Smooth::Glm {
                family,
                data: Dataset::from_design(x, data.y().clone(), data.has_intercept())
                    .expect("scaled copy of a valid dataset"),
            },
        };
        let lipschitz = match family {
            GlmFamily::Gaussian => top_eig,
            GlmFamily::Logistic => 0.25 * top_eig,
            GlmFamily::Poisson => top_eig,
        }
        .max(1e-12);
        Self {
            smooth,
            scale,
            penalty,
            lipschitz,
        }
    }

    fn penalty_value(&self, beta: &DVector<f64>, lambda: f64) -> f64 {
        lambda
            * beta
                .iter()
                .zip(self.penalty.iter())
                .map(|(b, w)| b.abs() * w)
                .sum::<f64>()
    }
}

/// Largest eigenvalue of `X'X` by power iteration.
fn top_eigenvalue(x: &DMatrix<f64>) -> f64 {
    power_iteration(x.ncols(), |v| x.tr_mul(&(x * v)))
}

/// Largest eigenvalue of a symmetric positive semidefinite operator, padded
/// by 1% because power iteration approaches from below.
fn power_iteration(q: usize, apply: impl Fn(&DVector<f64>) -> DVector<f64>) -> f64 {
    let mut v = DVector::from_element(q, 1.0 / (q as f64).sqrt());
    let mut ev = 0.0;
    for _ in 0..100 {
        let w = apply(&v);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm;
        v = w / norm;
        if (next - ev).abs() <= 1e-6 * next {
            ev = next;
            break;
        }
        ev = next;
    }
    ev * 1.01
}

/// One backtracked proximal-gradient step from `y`; shrinks `step` as needed.
fn prox_step(
    prob: &Standardized,
    y: &DVector<f64>,
    f_y: f64,
    g_y: &DVector<f64>,
    thresholds: &DVector<f64>,
    step: &mut f64,
) -> (DVector<f64>, f64) {
    loop {
        let z = DVector::from_fn(y.len(), |j, _| {
            soft_threshold(y[j] - *step * g_y[j], *step * thresholds[j])
        });
        let d = &z - y;
        let f_z = prob.smooth.value(&z);
        let bound = f_y + g_y.dot(&d) + d.norm_squared() / (2.0 * *step);
        if f_z <= bound + 1e-12 * f_y.abs().max(1.0) || *step < 1e-14 {
            return (z, f_z);
        }
        *step *= 0.5;
    }
}

struct PgOutcome {
    beta: DVector<f64>,
    trace: Vec<f64>,
    iterations: usize,
    converged: bool,
    residual: f64,
}

/// Monotone FISTA with function-value restart.
fn proximal_gradient(
    prob: &Standardized,
    lambda: f64,
    start: DVector<f64>,
    max_iter: usize,
    tol: f64,
) -> PgOutcome {
    let thresholds = &prob.penalty * lambda;
    let objective = |b: &DVector<f64>| prob.smooth.value(b) + prob.penalty_value(b, lambda);

    let mut x = start;
    let mut y = x.clone();
    let mut f_x = objective(&x);
    let mut t = 1.0_f64;
    let mut step = 1.0 / prob.lipschitz;
    let mut trace = vec![f_x];
    let mut residual = f64::INFINITY;

    for it in 1..=max_iter {
        let (f_y, g_y) = prob.smooth.value_grad(&y);
        let (z, f_z_smooth) = prox_step(prob, &y, f_y, &g_y, &thresholds, &mut step);
        residual = norm_inf(&(&z - &y)) / step;
        let f_z = f_z_smooth + prob.penalty_value(&z, lambda);

        let decrease = f_x - f_z;
        // accept rounding-level ties so the iterate can keep moving where the
        // objective is flat to machine precision
        if f_z <= f_x + 4.0 * f64::EPSILON * f_x.abs().max(1.0) {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let x_prev = std::mem::replace(&mut x, z);
            f_x = f_z;
            y = &x + (&x - &x_prev) * ((t - 1.0) / t_next);
            t = t_next;
        } else {
            // reject and restart momentum from the incumbent
            y = x.clone();
            t = 1.0;
        }
        trace.push(f_x);
        if decrease.abs() <= tol * f_x.abs().max(1.0) {
            // objective has stalled: measure stationarity at the incumbent
            let (f_s, g_s) = prob.smooth.value_grad(&x);
            let mut s = step;
            let (z_x, _) = prox_step(prob, &x, f_s, &g_s, &thresholds, &mut s);
            residual = norm_inf(&(&z_x - &x)) / s;
            if residual <= tol {
                return PgOutcome {
                    beta: x,
                    trace,
                    iterations: it,
                    converged: true,
                    residual,
                };
            }
        }
    }
    PgOutcome {
        beta: x,
        trace,
        iterations: max_iter,
        converged: false,
        residual,
    }
}

/// Outer iterations of proximal Newton are few; each solves the weighted
/// lasso on the local quadratic model by coordinate descent.
const MAX_NEWTON_OUTER: usize = 100;

/// `argmin ½β'Hβ − b'β + Σ τ_j|β_j|` by cyclic coordinate descent from
/// `start`, stopping when no coordinate moves the gradient by more than `tol`.
fn quadratic_cd(
    h: &DMatrix<f64>,
    b: &DVector<f64>,
    thresholds: &DVector<f64>,
    start: DVector<f64>,
    max_sweeps: usize,
    tol: f64,
) -> DVector<f64> {
    let mut beta = start;
    let mut r = b - h * &beta;
    for _ in 0..max_sweeps {
        let mut moved = 0.0_f64;
        for j in 0..beta.len() {
            let hjj = h[(j, j)];
            if !(hjj > 1e-14) {
                continue;
            }
            let new = soft_threshold(beta[j] + r[j] / hjj, thresholds[j] / hjj);
            let delta = new - beta[j];
            if delta != 0.0 {
                r.axpy(-delta, &h.column(j), 1.0);
                beta[j] = new;
                moved = moved.max(delta.abs() * hjj);
            }
        }
        if moved <= tol {
            break;
        }
    }
    beta
}

fn proximal_newton(
    prob: &Standardized,
    family: GlmFamily,
    data: &Dataset,
    lambda: f64,
    start: DVector<f64>,
    max_iter: usize,
    tol: f64,
) -> PgOutcome {
    let q = start.len();
    let all: Vec<usize> = (0..q).collect();
    let thresholds = &prob.penalty * lambda;
    let objective = |b: &DVector<f64>| prob.smooth.value(b) + prob.penalty_value(b, lambda);
    let gradient_residual = |b: &DVector<f64>| {
        let eta = data.x() * b;
        let g = glm::gradient_from_eta(family, data, &eta);
        let mut s = 1.0 / prob.lipschitz;
        let f_s = glm::loss_from_eta(family, data.y(), &eta);
        let (z, _) = prox_step(prob, b, f_s, &g, &thresholds, &mut s);
        (norm_inf(&(&z - b)) / s, eta, g)
    };
    let mut x = start;
    let mut f_x = objective(&x);
    let mut trace = vec![f_x];
    let (mut residual, mut eta, mut g) = gradient_residual(&x);
    for it in 1..=max_iter.min(MAX_NEWTON_OUTER) {
        if residual <= tol {
            return PgOutcome {
                beta: x,
                trace,
                iterations: it - 1,
                converged: true,
                residual,
            };
        }
        let h = glm::hessian_from_eta(family, data, &eta, &all);
        let b = &h * &x - &g;
        let z = quadratic_cd(&h, &b, &thresholds, x.clone(), max_iter, 0.1 * tol);
        let d = &z - &x;
        let delta = g.dot(&d) + prob.penalty_value(&z, lambda) - prob.penalty_value(&x, lambda);

        if delta.abs() <= 1e3 * f64::EPSILON * f_x.abs().max(1.0) {
            // The predicted decrease is below the resolution of `f`, so the
            // full step is judged by the gradient-mapping residual instead.
            let (r_z, eta_z, g_z) = gradient_residual(&z);
            if r_z >= residual {
                break;
            }
            x = z;
            f_x = objective(&x);
            (residual, eta, g) = (r_z, eta_z, g_z);
            trace.push(f_x);
            continue;
        }
        if delta > 0.0 {
            break;
        }
        let mut t = 1.0;
        loop {
            let trial = &x + &d * t;
            let f_t = objective(&trial);
            if f_t <= f_x + 1e-4 * t * delta {
                x = trial;
                f_x = f_t;
                break;
            }
            t *= 0.5;
            if t < 1e-10 {
                break;
            }
        }
        if t < 1e-10 {
            break;
        }
        trace.push(f_x);
        (residual, eta, g) = gradient_residual(&x);
    }
    let converged = residual <= tol;
    PgOutcome {
        iterations: trace.len() - 1,
        beta: x,
        trace,
        converged,
        residual,
    }
}

fn solve_standardized(
    prob: &Standardized,
    data: &Dataset,
    lambda: f64,
    warm: Option<&DVector<f64>>,
    config: &LassoConfig,
) -> (FitResult, f64) {
    let start = match warm {
        Some(b) => b.component_mul(&prob.scale),
        None => DVector::zeros(data.n_coef()),
    };
    let out = match &prob.smooth {
        Smooth::Quadratic { .. } => proximal_gradient(prob, lambda, start, config.max_iter, config.tol),
        Smooth::Glm { family, data } => {
            proximal_newton(prob, *family, data, lambda, start, config.max_iter, config.tol)
        }
    };
    let beta = out.beta.component_div(&prob.scale);
    let excluded: Vec<usize> = data.intercept_index().into_iter().collect();
    let support = support_outside(&beta, &excluded);
    let fit = FitResult {
        beta,
        support,
        objective_trace: out.trace,
        iterations: out.iterations,
        converged: out.converged,
        multiplier: None,
        lla_fixed_point: None,
    };
    (fit, out.residual)
}

/// Minimize `ℓ_n(β) + λ‖β‖₁` (intercept unpenalized).
pub fn fit_lasso(
    family: GlmFamily,
    data: &Dataset,
    lambda: f64,
    config: &LassoConfig,
) -> Result<FitResult> {
    fit_lasso_from(family, data, lambda, None, config)
}

/// [`fit_lasso`] started from `warm`.
pub fn fit_lasso_from(
    family: GlmFamily,
    data: &Dataset,
    lambda: f64,
    warm: Option<&DVector<f64>>,
    config: &LassoConfig,
) -> Result<FitResult> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::invalid("lasso lambda must be positive"));
    }
    if !(config.tol > 0.0) {
        return Err(Error::invalid("lasso tolerance must be positive"));
    }
    data.validate_for(family)?;
    // KKT holds at the null fit; skip the iterative solve and its rounding
    if lambda >= lambda_max(family, data)? {
        let beta = null_fit(family, data);
        let mut fit = FitResult::new(beta.clone(), Vec::new());
        fit.objective_trace = vec![glm::loss(family, data, &beta)?];
        return Ok(fit);
    }
    let prob = Standardized::new(family, data);
    let (fit, residual) = solve_standardized(&prob, data, lambda, warm, config);
    if !fit.converged {
        return Err(Error::NonConvergence {
            solver: "lasso proximal gradient",
            iterations: fit.iterations,
            residual,
            trace: fit.objective_trace.clone(),
            last: Some(fit.beta),
        });
    }
    Ok(fit)
}

/// Coefficients of the intercept-only fit (all zeros without intercept).
fn null_fit(family: GlmFamily, data: &Dataset) -> DVector<f64> {
    let mut beta = DVector::zeros(data.n_coef());
    if data.has_intercept() {
        let ybar = data.y().mean();
        beta[0] = match family {
            GlmFamily::Gaussian => ybar,
            GlmFamily::Logistic => {
                let p = ybar.clamp(1e-10, 1.0 - 1e-10);
                (p / (1.0 - p)).ln()
            }
            GlmFamily::Poisson => ybar.max(1e-10).ln(),
        };
    }
    beta
}

/// `‖∇ℓ_n(β₀)‖_max` over penalized coordinates at the null fit: the smallest
/// `λ` with an all-zero lasso solution.
pub fn lambda_max(family: GlmFamily, data: &Dataset) -> Result<f64> {
    let beta = null_fit(family, data);
    let g = glm::gradient(family, data, &beta)?;
    let icpt = data.intercept_index();
    Ok(g.iter()
        .enumerate()
        .filter(|&(j, _)| Some(j) != icpt)
        .fold(0.0_f64, |m, (_, v)| m.max(v.abs())))
}

/// The default descending grid.
pub fn default_grid(family: GlmFamily, data: &Dataset, config: &LassoConfig) -> Result<Vec<f64>> {
    if let Some(g) = &config.lambda_grid {
        return Ok(g.clone());
    }
    let hi = lambda_max(family, data)?;
    if !(hi > 0.0) {
        return Err(Error::invalid("response is orthogonal to every predictor; lambda_max = 0"));
    }
    Ok(log_grid(hi, hi * config.lambda_min_ratio, config.n_lambda))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvPoint {
    pub lambda: f64,
    /// Held-out mean loss pooled over the usable folds.
    pub error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvResult {
    pub lambda: f64,
    pub curve: Vec<CvPoint>,
    pub skipped_folds: usize,
}

/// Seeded shuffle followed by contiguous blocks.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rows: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rows.shuffle(&mut rng);
    let base = n / folds;
    let extra = n % folds;
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for k in 0..folds {
        let len = base + usize::from(k < extra);
        out.push(rows[start..start + len].to_vec());
        start += len;
    }
    out
}

/// Choose `λ_lasso` minimizing K-fold held-out deviance.
pub fn cv_select(family: GlmFamily, data: &Dataset, config: &LassoConfig) -> Result<CvResult> {
    config.validate()?;
    data.validate_for(family)?;
    let n = data.n();
    if n < config.folds {
        return Err(Error::invalid(format!(
            "need at least {} observations for {}-fold cross-validation, have {n}",
            config.folds, config.folds
        )));
    }
    let grid = default_grid(family, data, config)?;
    if grid.len() == 1 {
        return Ok(CvResult {
            lambda: grid[0],
            curve: vec![CvPoint {
                lambda: grid[0],
                error: f64::NAN,
            }],
            skipped_folds: 0,
        });
    }

    let blocks = fold_assignment(n, config.folds, config.seed);
    let mut total = vec![0.0; grid.len()];
    let mut used_rows = 0usize;
    let mut skipped = 0usize;
    for (k, held) in blocks.iter().enumerate() {
        let test = data.subset_rows(held);
        if family == GlmFamily::Logistic {
            let first = test.y()[0];
            if test.y().iter().all(|&v| v == first) {
                log::warn!("cv fold {k}: held-out responses are all {first}; fold skipped");
                skipped += 1;
                continue;
            }
        }
        let train_rows: Vec<usize> = blocks
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != k)
            .flat_map(|(_, b)| b.iter().copied())
            .collect();
        let train = data.subset_rows(&train_rows);
        let prob = Standardized::new(family, &train);
        let mut warm: Option<DVector<f64>> = None;
        for (i, &lam) in grid.iter().enumerate() {
            let (fit, _) = solve_standardized(&prob, &train, lam, warm.as_ref(), config);
            if !fit.converged {
                log::warn!("cv fold {k}: lasso at lambda {lam:.4e} hit max_iter; using last iterate");
            }
            let eta = test.x() * &fit.beta;
            total[i] += glm::loss_from_eta(family, test.y(), &eta) * held.len() as f64;
            warm = Some(fit.beta);
        }
        used_rows += held.len();
    }
    if used_rows == 0 {
        return Err(Error::invalid("every cross-validation fold is degenerate"));
    }
    let curve: Vec<CvPoint> = grid
        .iter()
        .zip(&total)
        .map(|(&lambda, &t)| CvPoint {
            lambda,
            error: t / used_rows as f64,
        })
        .collect();
    // strict '<' keeps the larger λ on ties
    let best = curve
        .iter()
        .enumerate()
        .fold(0usize, |b, (i, c)| if c.error < curve[b].error { i } else { b });
    Ok(CvResult {
        lambda: curve[best].lambda,
        curve,
        skipped_folds: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_data(n: usize, p: usize, seed: u64, family: GlmFamily) -> Dataset {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let beta = DVector::from_fn(p, |j, _| if j < 3 { 1.0 - 0.5 * j as f64 } else { 0.0 });
        let eta = &x * &beta;
        let y = DVector::from_fn(n, |i, _| match family {
            GlmFamily::Gaussian => eta[i] + rng.sample::<f64, _>(StandardNormal),
            GlmFamily::Logistic => {
                f64::from(rng.random::<f64>() < 1.0 / (1.0 + (-eta[i]).exp()))
            }
            GlmFamily::Poisson => {
                use rand_distr::Distribution;
                rand_distr::Poisson::new(eta[i].exp()).unwrap().sample(&mut rng)
            }
        });
        Dataset::new(x, y, false).unwrap()
    }

    #[test]
    fn objective_nonincreasing_and_kkt_at_convergence() {
        for (fam, seed) in [
            (GlmFamily::Gaussian, 1),
            (GlmFamily::Logistic, 2),
            (GlmFamily::Poisson, 3),
        ] {
            let d = random_data(80, 15, seed, fam);
            let cfg = LassoConfig {
                tol: 1e-9,
                ..Default::default()
            };
            let lam = 0.3 * lambda_max(fam, &d).unwrap();
            let fit = fit_lasso(fam, &d, lam, &cfg).unwrap();
            assert!(fit
                .objective_trace
                .windows(2)
                .all(|w| w[1] <= w[0] + 1e-14));
            let g = glm::gradient(fam, &d, &fit.beta).unwrap();
            for j in 0..d.n_coef() {
                if fit.beta[j] == 0.0 {
                    assert!(g[j].abs() <= lam + 1e-6, "{fam} j={j}");
                } else {
                    assert!((g[j] + lam * fit.beta[j].signum()).abs() <= 1e-6, "{fam} j={j}");
                }
            }
        }
    }

    #[test]
    fn intercept_is_unpenalized() {
        let mut d = random_data(60, 5, 9, GlmFamily::Gaussian);
        let y = d.y().add_scalar(3.0);
        d = Dataset::new(d.x().clone(), y, true).unwrap();
        let lam = 10.0 * lambda_max(GlmFamily::Gaussian, &d).unwrap();
        let fit = fit_lasso(GlmFamily::Gaussian, &d, lam, &LassoConfig::default()).unwrap();
        assert!((fit.beta[0] - d.y().mean()).abs() < 1e-6);
        assert!(fit.support.is_empty());
    }

    #[test]
    fn lambda_validation_and_nonconvergence() {
        let d = random_data(30, 4, 4, GlmFamily::Gaussian);
        let cfg = LassoConfig::default();
        assert!(fit_lasso(GlmFamily::Gaussian, &d, 0.0, &cfg).is_err());
        let tight = LassoConfig {
            max_iter: 1,
            tol: 1e-14,
            ..Default::default()
        };
        match fit_lasso(GlmFamily::Gaussian, &d, 1e-3, &tight) {
            Err(Error::NonConvergence { last: Some(b), .. }) => assert_eq!(b.len(), 4),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn folds_partition_rows() {
        let folds = fold_assignment(23, 5, 7);
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        assert!(folds.iter().all(|f| f.len() == 4 || f.len() == 5));
        assert_eq!(folds, fold_assignment(23, 5, 7));
    }

    #[test]
    fn cv_config_errors() {
        let d = random_data(8, 3, 1, GlmFamily::Gaussian);
        let cfg = LassoConfig::default();
        assert!(cv_select(GlmFamily::Gaussian, &d, &cfg).is_err());
        let bad = LassoConfig {
            lambda_grid: Some(vec![0.1, 0.2]),
            folds: 2,
            ..Default::default()
        };
        assert!(cv_select(GlmFamily::Gaussian, &d, &bad).is_err());
        let one = LassoConfig {
            folds: 2,
            ..Default::default()
        };
        assert!(one.validate().is_ok());
        let bad = LassoConfig {
            folds: 1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn cv_skips_degenerate_logistic_folds() {
        // 4 ones among 40 rows: with 10 folds most held-out blocks are all zero
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let x = DMatrix::from_fn(40, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = DVector::from_fn(40, |i, _| f64::from(i % 10 == 0));
        let d = Dataset::new(x, y, true).unwrap();
        let cfg = LassoConfig {
            n_lambda: 5,
            ..Default::default()
        };
        let cv = cv_select(GlmFamily::Logistic, &d, &cfg).unwrap();
        assert!(cv.skipped_folds > 0);

        let y = DVector::zeros(40);
        let x = DMatrix::from_fn(40, 3, |i, j| ((i + j) % 7) as f64);
        let d = Dataset::new(x, y, true).unwrap();
        let cfg = LassoConfig {
            lambda_grid: Some(vec![0.5, 0.1]),
            ..Default::default()
        };
        assert!(cv_select(GlmFamily::Logistic, &d, &cfg).is_err());
    }
}
