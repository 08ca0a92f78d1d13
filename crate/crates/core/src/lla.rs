//! Local linear approximation for the partial penalized estimators.
//!
//! Each LLA step majorizes the folded-concave penalty at the current iterate
//! by a weighted ℓ₁ term with weights `p′_λ(|β_j|)` on the nuisance
//! coordinates and solves the resulting weighted lasso with [`crate::admm`].
//! The reduced model carries the hypothesis constraint `Cβ_M = t`; the full
//! model does not. Two steps from a lasso start are the default.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::admm::{self, validate_tested_set, AdmmConfig, AdmmState, ConstrainedWLassoProblem};
use crate::error::{ensure_len, Error, Result};
use crate::fit::FitResult;
use crate::glm::{self, Dataset, GlmFamily};
use crate::linalg::{log_grid, norm_inf, rank};
use crate::newton::NewtonProblem;
use crate::penalty::PenaltySpec;

/// `H₀: C β_M = t`, with `M` given as 0-based coefficient indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisSpec {
    m: Vec<usize>,
    c: DMatrix<f64>,
    t: DVector<f64>,
}

impl HypothesisSpec {
    /// Fails unless `M` is sorted and unique, `C` is `r×|M|` with full row
    /// rank and `t` has length `r`.
    pub fn new(m: Vec<usize>, c: DMatrix<f64>, t: DVector<f64>) -> Result<Self> {
        if m.is_empty() {
            return Err(Error::invalid("tested index set is empty"));
        }
        if m.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("tested index set must be sorted and unique"));
        }
        ensure_len("constraint matrix columns", m.len(), c.ncols())?;
        ensure_len("constraint target", c.nrows(), t.len())?;
        if c.nrows() == 0 {
            return Err(Error::invalid("constraint matrix has no rows"));
        }
        if c.iter().chain(t.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("constraint entries must be finite"));
        }
        let rk = rank(&c);
        if rk < c.nrows() {
            return Err(Error::RankDeficient {
                rank: rk,
                rows: c.nrows(),
            });
        }
        Ok(Self { m, c, t })
    }

    /// `β_M = t` for every tested coordinate.
    pub fn coordinates(m: Vec<usize>, t: DVector<f64>) -> Result<Self> {
        let k = m.len();
        Self::new(m, DMatrix::identity(k, k), t)
    }

    pub fn m(&self) -> &[usize] {
        &self.m
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn t(&self) -> &DVector<f64> {
        &self.t
    }

    /// Number of constraint rows (the degrees of freedom).
    pub fn r(&self) -> usize {
        self.c.nrows()
    }

    /// `Cβ_M − t`.
    pub fn residual(&self, beta: &DVector<f64>) -> DVector<f64> {
        let bm = DVector::from_iterator(self.m.len(), self.m.iter().map(|&j| beta[j]));
        &self.c * bm - &self.t
    }

    /// Same hypothesis with `(QC, Qt)`.
    pub fn transformed(&self, q: &DMatrix<f64>) -> Result<Self> {
        Self::new(self.m.clone(), q * &self.c, q * &self.t)
    }

    pub fn validate_for(&self, data: &Dataset) -> Result<()> {
        validate_tested_set(data, &self.m)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LlaConfig {
    /// Number of LLA steps `B`.
    pub steps: usize,
    /// Descending grid; `None` uses `n_lambda` log-spaced points from
    /// [`lambda_max`] down to `lambda_min_ratio` times it.
    pub lambda_grid: Option<Vec<f64>>,
    pub n_lambda: usize,
    pub lambda_min_ratio: f64,
    pub admm: AdmmConfig,
    /// Keep iterating past `steps` until two iterates coincide.
    pub track_convergence: bool,
    /// Cap on steps when `track_convergence` is set.
    pub max_steps: usize,
    /// Max-norm distance under which two LLA iterates count as equal.
    pub fixed_point_tol: f64,
    /// Use the previous grid point's solution as the LLA start along a path.
    pub warm_start_path: bool,
}

impl Default for LlaConfig {
    fn default() -> Self {
        Self {
            steps: 2,
            lambda_grid: None,
            n_lambda: 30,
            lambda_min_ratio: 0.05,
            admm: AdmmConfig::default(),
            track_convergence: false,
            max_steps: 100,
            fixed_point_tol: 1e-7,
            warm_start_path: false,
        }
    }
}

impl LlaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::invalid("LLA needs at least one step"));
        }
        if self.track_convergence && self.max_steps < self.steps {
            return Err(Error::invalid("LLA max_steps is below steps"));
        }
        if !(self.fixed_point_tol >= 0.0) {
            return Err(Error::invalid("fixed-point tolerance must be nonnegative"));
        }
        if let Some(g) = &self.lambda_grid {
            if g.is_empty() || g.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
                return Err(Error::invalid("LLA lambda grid must be nonempty and positive"));
            }
            if g.windows(2).any(|w| w[1] >= w[0]) {
                return Err(Error::invalid("LLA lambda grid must be strictly descending"));
            }
        } else if self.n_lambda == 0 || !(self.lambda_min_ratio > 0.0 && self.lambda_min_ratio < 1.0)
        {
            return Err(Error::invalid("invalid default LLA grid settings"));
        }
        self.admm.validate()
    }
}

/// LLA weights `p′_λ(|β_j|)` on the penalized coordinates.
pub fn lla_weights(data: &Dataset, m: &[usize], penalty: &PenaltySpec, beta: &DVector<f64>) -> DVector<f64> {
    let idx = data.penalized_indices(m);
    DVector::from_iterator(
        idx.len(),
        idx.iter().map(|&j| penalty.derivative_unchecked(beta[j].abs())),
    )
}

/// Output of an LLA run with the solver state for warm starts.
#[derive(Debug, Clone)]
pub struct LlaOutput {
    pub fit: FitResult,
    /// Iterates `β^(0) = β_init, β^(1), …`.
    pub iterates: Vec<DVector<f64>>,
    /// Majorized objective `ℓ_n(β^(b)) + Σ ŵ^(b−1)|β^(b)|` per step, paired
    /// with its value at `β^(b−1)`.
    pub majorized: Vec<(f64, f64)>,
    pub state: AdmmState,
}

fn run(
    family: GlmFamily,
    data: &Dataset,
    m: &[usize],
    constraint: Option<(&DMatrix<f64>, &DVector<f64>)>,
    penalty: &PenaltySpec,
    beta_init: &DVector<f64>,
    config: &LlaConfig,
    warm: Option<AdmmState>,
) -> Result<LlaOutput> {
    config.validate()?;
    ensure_len("beta_init", data.n_coef(), beta_init.len())?;
    if beta_init.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("beta_init has non-finite entries"));
    }
    if !(penalty.lambda > 0.0) {
        return Err(Error::invalid("LLA requires lambda > 0"));
    }
    data.validate_for(family)?;
    validate_tested_set(data, m)?;
    let (c, t) = match constraint {
        Some((c, t)) => (c.clone(), t.clone()),
        None => (DMatrix::zeros(0, m.len()), DVector::zeros(0)),
    };
    let limit = if config.track_convergence {
        config.max_steps
    } else {
        config.steps
    };

    let mut beta = beta_init.clone();
    let mut iterates = vec![beta.clone()];
    let mut majorized = Vec::new();
    let mut state = warm;
    let mut fit = None;
    let mut trace = Vec::new();
    let mut fixed = false;
    for b in 1..=limit {
        let weights = lla_weights(data, m, penalty, &beta);
        let problem = ConstrainedWLassoProblem::new(family, data, m, c.clone(), t.clone(), weights)?;
        let before = problem.objective(&beta)?;
        let start = match state.take() {
            Some(s) => s,
            None => AdmmState::from_beta(&problem, beta.clone(), config.admm.rho),
        };
        let (step_fit, st, _) = admm::solve(&problem, &config.admm, Some(start))
            .map_err(|e| e.at(format!("LLA step {b}")))?;
        let after = problem.objective(&step_fit.beta)?;
        majorized.push((after, before));
        trace.push(after);
        fixed = norm_inf(&(&step_fit.beta - &beta)) <= config.fixed_point_tol;
        beta = step_fit.beta.clone();
        iterates.push(beta.clone());
        state = Some(st);
        fit = Some(step_fit);
        if b >= config.steps && config.track_convergence && fixed {
            break;
        }
    }
    let mut fit = fit.expect("at least one LLA step");
    fit.iterations = iterates.len() - 1;
    fit.objective_trace = trace;
    fit.lla_fixed_point = Some(fixed);
    Ok(LlaOutput {
        fit,
        iterates,
        majorized,
        state: state.expect("at least one LLA step"),
    })
}

/// Reduced-model estimator `β̂₀` under `Cβ_M = t`.
pub fn lla_reduced(
    family: GlmFamily,
    data: &Dataset,
    hyp: &HypothesisSpec,
    penalty: &PenaltySpec,
    beta_init: &DVector<f64>,
    config: &LlaConfig,
) -> Result<FitResult> {
    lla_reduced_detailed(family, data, hyp, penalty, beta_init, config, None).map(|o| o.fit)
}

/// [`lla_reduced`] with iterates, majorized objectives and solver state.
pub fn lla_reduced_detailed(
    family: GlmFamily,
    data: &Dataset,
    hyp: &HypothesisSpec,
    penalty: &PenaltySpec,
    beta_init: &DVector<f64>,
    config: &LlaConfig,
    warm: Option<AdmmState>,
) -> Result<LlaOutput> {
    hyp.validate_for(data)?;
    run(
        family,
        data,
        hyp.m(),
        Some((hyp.c(), hyp.t())),
        penalty,
        beta_init,
        config,
        warm,
    )
}

/// Full-model estimator `β̂_a` with `M` unpenalized and unconstrained.
pub fn lla_full(
    family: GlmFamily,
    data: &Dataset,
    m: &[usize],
    penalty: &PenaltySpec,
    beta_init: &DVector<f64>,
    config: &LlaConfig,
) -> Result<FitResult> {
    lla_full_detailed(family, data, m, penalty, beta_init, config, None).map(|o| o.fit)
}

pub fn lla_full_detailed(
    family: GlmFamily,
    data: &Dataset,
    m: &[usize],
    penalty: &PenaltySpec,
    beta_init: &DVector<f64>,
    config: &LlaConfig,
    warm: Option<AdmmState>,
) -> Result<LlaOutput> {
    run(family, data, m, None, penalty, beta_init, config, warm)
}

/// Fit on the unpenalized coordinates only (nuisance fixed at zero).
fn unpenalized_fit(
    family: GlmFamily,
    data: &Dataset,
    m: &[usize],
    constraint: Option<(&DMatrix<f64>, &DVector<f64>)>,
) -> Result<DVector<f64>> {
    let cols = data.unpenalized_indices(m);
    let start = DVector::zeros(data.n_coef());
    if cols.is_empty() {
        return Ok(start);
    }
    let nu = cols.len();
    let (a, b) = match constraint {
        Some((c, t)) => {
            let mut a = DMatrix::zeros(c.nrows(), nu);
            let off = nu - m.len();
            for k in 0..m.len() {
                a.set_column(off + k, &c.column(k));
            }
            (a, t.clone())
        }
        None => (DMatrix::zeros(0, nu), DVector::zeros(0)),
    };
    let np = NewtonProblem {
        family,
        data,
        cols: &cols,
        linear: None,
        a: &a,
        b: &b,
    };
    Ok(np.solve(&start, 1e-10, 100, "unpenalized fit")?.beta)
}

/// Top of the LLA grid: just above the largest nuisance gradient at the
/// unpenalized-only reduced and full fits, where every LLA step from a zero
/// start keeps the nuisance block at zero.
pub fn lambda_max(family: GlmFamily, data: &Dataset, hyp: &HypothesisSpec) -> Result<f64> {
    hyp.validate_for(data)?;
    lambda_max_over(family, data, hyp.m(), &[Some((hyp.c(), hyp.t())), None])
}

/// `λ_max` for the full model alone, with `M` possibly empty.
pub fn lambda_max_full(family: GlmFamily, data: &Dataset, m: &[usize]) -> Result<f64> {
    validate_tested_set(data, m)?;
    lambda_max_over(family, data, m, &[None])
}

fn lambda_max_over(
    family: GlmFamily,
    data: &Dataset,
    m: &[usize],
    constraints: &[Option<(&DMatrix<f64>, &DVector<f64>)>],
) -> Result<f64> {
    let pen = data.penalized_indices(m);
    let mut hi = 0.0_f64;
    for &constraint in constraints {
        let beta = unpenalized_fit(family, data, m, constraint)?;
        let g = glm::gradient(family, data, &beta)?;
        hi = pen.iter().fold(hi, |acc, &j| acc.max(g[j].abs()));
    }
    Ok(1.1 * hi)
}

pub fn default_grid(
    family: GlmFamily,
    data: &Dataset,
    hyp: &HypothesisSpec,
    config: &LlaConfig,
) -> Result<Vec<f64>> {
    if let Some(g) = &config.lambda_grid {
        return Ok(g.clone());
    }
    grid_below(lambda_max(family, data, hyp)?, config)
}

/// [`default_grid`] for the full model.
pub fn default_grid_full(family: GlmFamily, data: &Dataset, m: &[usize], config: &LlaConfig) -> Result<Vec<f64>> {
    if let Some(g) = &config.lambda_grid {
        return Ok(g.clone());
    }
    grid_below(lambda_max_full(family, data, m)?, config)
}

fn grid_below(hi: f64, config: &LlaConfig) -> Result<Vec<f64>> {
    if !(hi > 0.0) {
        return Err(Error::invalid("nuisance gradient vanishes; LLA lambda_max = 0"));
    }
    Ok(log_grid(hi, hi * config.lambda_min_ratio, config.n_lambda))
}

/// Reduced-model fits along a descending grid. The ADMM state is carried
/// between grid points; the LLA start is `beta_init` unless
/// `warm_start_path` is set.
pub fn lla_reduced_path(
    family: GlmFamily,
    data: &Dataset,
    hyp: &HypothesisSpec,
    penalty: &PenaltySpec,
    beta_init: &DVector<f64>,
    grid: &[f64],
    config: &LlaConfig,
) -> Result<Vec<(f64, FitResult)>> {
    hyp.validate_for(data)?;
    path(grid, config, beta_init, |lam, start, state| {
        lla_reduced_detailed(family, data, hyp, &penalty.with_lambda(lam), start, config, state)
    })
}

/// Full-model fits along a descending grid, warm-started as in
/// [`lla_reduced_path`].
pub fn lla_full_path(
    family: GlmFamily,
    data: &Dataset,
    m: &[usize],
    penalty: &PenaltySpec,
    beta_init: &DVector<f64>,
    grid: &[f64],
    config: &LlaConfig,
) -> Result<Vec<(f64, FitResult)>> {
    path(grid, config, beta_init, |lam, start, state| {
        lla_full_detailed(family, data, m, &penalty.with_lambda(lam), start, config, state)
    })
}

fn path<F>(grid: &[f64], config: &LlaConfig, beta_init: &DVector<f64>, mut step: F) -> Result<Vec<(f64, FitResult)>>
where
    F: FnMut(f64, &DVector<f64>, Option<AdmmState>) -> Result<LlaOutput>,
{
    let mut out = Vec::with_capacity(grid.len());
    let mut state: Option<AdmmState> = None;
    let mut start = beta_init.clone();
    for &lam in grid {
        let o = step(lam, &start, state.take()).map_err(|e| e.at(format!("lambda = {lam:.6e}")))?;
        if config.warm_start_path {
            start = o.fit.beta.clone();
        }
        state = Some(o.state);
        out.push((lam, o.fit));
    }
    Ok(out)
}

/// `c_n = max{log n, log(log n)·log p}`.
pub fn gic_penalty(n: usize, p: usize) -> f64 {
    let ln = (n as f64).ln();
    ln.max(ln.ln() * (p as f64).ln())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GicEntry {
    pub lambda: f64,
    /// `n·ℓ_n(β̂)`.
    pub scaled_loss: f64,
    pub l0: usize,
    pub gic: f64,
}

/// `argmin_λ n·ℓ_n(β̂^λ) + c_n‖β̂^λ‖₀`, ties toward the larger `λ`. Returns
/// the selected `λ`, its position in `fits` and the full table.
pub fn gic_select(
    family: GlmFamily,
    data: &Dataset,
    fits: &[(f64, FitResult)],
) -> Result<(f64, usize, Vec<GicEntry>)> {
    if fits.is_empty() {
        return Err(Error::invalid("GIC needs at least one fit"));
    }
    let n = data.n();
    let cn = gic_penalty(n, data.n_features());
    let icpt = data.intercept_index();
    let mut table = Vec::with_capacity(fits.len());
    for (lam, fit) in fits {
        let scaled_loss = n as f64 * glm::loss(family, data, &fit.beta)?;
        let l0 = fit.l0_norm(icpt);
        table.push(GicEntry {
            lambda: *lam,
            scaled_loss,
            l0,
            gic: scaled_loss + cn * l0 as f64,
        });
    }
    let mut best = 0;
    for (i, e) in table.iter().enumerate().skip(1) {
        let b = &table[best];
        if e.gic < b.gic || (e.gic == b.gic && e.lambda > b.lambda) {
            best = i;
        }
    }
    Ok((table[best].lambda, best, table))
}
