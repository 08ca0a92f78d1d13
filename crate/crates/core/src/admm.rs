//! ADMM for the equality-constrained weighted lasso
//!
//! ```text
//! minimize  ℓ_n(β) + Σ_{j∈P} w_j |β_j|   subject to  C β_M = t
//! ```
//!
//! where `P` is every coefficient outside `M` and the intercept. The nuisance
//! block is split off as `η = β_P` so the ℓ₁ term becomes a soft-threshold,
//! and both equality blocks enter the augmented Lagrangian
//!
//! ```text
//! ℓ_n(β) + Σ w_j|η_j| + ρ/2 ‖Cβ_M − t + ν₁/ρ‖² + ρ/2 ‖β_P − η + ν₂/ρ‖² − ‖ν‖²/(2ρ).
//! ```
//!
//! Each iteration is a β-update (closed form for Gaussian, damped Newton
//! otherwise), an η soft-threshold and a dual ascent step. Once the signed
//! support of `η` settles, the solver tries an active-set polish: an
//! equality-constrained Newton solve on that support whose KKT conditions are
//! then checked on every coordinate. A verified polish is the exact minimizer
//! and ends the iteration.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, Error, Result};
use crate::fit::FitResult;
use crate::glm::{self, Dataset, GlmFamily};
use crate::linalg::{cholesky, norm_inf, rank, soft_threshold};
use crate::newton::NewtonProblem;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdmmConfig {
    pub rho: f64,
    /// Absolute primal tolerance, scaled by `√(r + |P|)`.
    pub tol_primal: f64,
    /// Absolute dual tolerance, scaled by `√q`.
    pub tol_dual: f64,
    /// Relative tolerance against iterate norms.
    pub tol_rel: f64,
    pub max_iter: usize,
    pub newton_tol: f64,
    pub newton_max: usize,
    pub adaptive_rho: bool,
    pub polish: bool,
    /// Iterations between polish attempts.
    pub polish_every: usize,
    /// KKT slack accepted when verifying a polished solution.
    pub polish_tol: f64,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            rho: 1.0,
            tol_primal: 1e-7,
            tol_dual: 1e-7,
            tol_rel: 1e-7,
            max_iter: 20_000,
            newton_tol: 1e-10,
            newton_max: 50,
            adaptive_rho: true,
            polish: true,
            polish_every: 10,
            polish_tol: 1e-8,
        }
    }
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            self.rho,
            self.tol_primal,
            self.tol_dual,
            self.newton_tol,
            self.polish_tol,
        ];
        if pos.iter().any(|v| !(*v > 0.0)) || self.tol_rel < 0.0 {
            return Err(Error::invalid("ADMM rho and tolerances must be positive"));
        }
        if self.max_iter == 0 || self.newton_max == 0 || self.polish_every == 0 {
            return Err(Error::invalid("ADMM iteration limits must be positive"));
        }
        Ok(())
    }
}

/// A constrained weighted lasso instance.
#[derive(Debug, Clone)]
pub struct ConstrainedWLassoProblem<'a> {
    family: GlmFamily,
    data: &'a Dataset,
    m: Vec<usize>,
    c: DMatrix<f64>,
    t: DVector<f64>,
    weights: DVector<f64>,
    penalized: Vec<usize>,
    unpenalized: Vec<usize>,
    /// `C` padded with zero columns to all `q` coefficients.
    c_full: DMatrix<f64>,
}

impl<'a> ConstrainedWLassoProblem<'a> {
    /// `m` is the sorted tested set; `c` is `r×|m|` (zero rows for the
    /// unconstrained problem); `weights` is aligned with
    /// [`Dataset::penalized_indices`].
    pub fn new(
        family: GlmFamily,
        data: &'a Dataset,
        m: &[usize],
        c: DMatrix<f64>,
        t: DVector<f64>,
        weights: DVector<f64>,
    ) -> Result<Self> {
        validate_tested_set(data, m)?;
        if c.nrows() > 0 {
            ensure_len("constraint matrix columns", m.len(), c.ncols())?;
        }
        ensure_len("constraint target", c.nrows(), t.len())?;
        let r = c.nrows();
        if r > 0 {
            let rk = rank(&c);
            if rk < r {
                return Err(Error::RankDeficient { rank: rk, rows: r });
            }
        }
        let penalized = data.penalized_indices(m);
        ensure_len("penalty weights", penalized.len(), weights.len())?;
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid("penalty weights must be finite and nonnegative"));
        }
        let unpenalized = data.unpenalized_indices(m);
        let mut c_full = DMatrix::zeros(r, data.n_coef());
        for (k, &j) in m.iter().enumerate() {
            if r > 0 {
                c_full.set_column(j, &c.column(k));
            }
        }
        Ok(Self {
            family,
            data,
            m: m.to_vec(),
            c,
            t,
            weights,
            penalized,
            unpenalized,
            c_full,
        })
    }

    pub fn family(&self) -> GlmFamily {
        self.family
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }

    pub fn tested(&self) -> &[usize] {
        &self.m
    }

    pub fn constraint(&self) -> (&DMatrix<f64>, &DVector<f64>) {
        (&self.c, &self.t)
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn penalized(&self) -> &[usize] {
        &self.penalized
    }

    pub fn n_constraints(&self) -> usize {
        self.c.nrows()
    }

    /// `C` embedded into all coefficients.
    pub fn constraint_full(&self) -> &DMatrix<f64> {
        &self.c_full
    }

    /// `ℓ_n(β) + Σ w_j|β_j|`.
    pub fn objective(&self, beta: &DVector<f64>) -> Result<f64> {
        Ok(glm::loss(self.family, self.data, beta)? + self.penalty(beta))
    }

    fn penalty(&self, beta: &DVector<f64>) -> f64 {
        self.penalized
            .iter()
            .zip(self.weights.iter())
            .map(|(&j, &w)| w * beta[j].abs())
            .sum()
    }
}

pub(crate) fn validate_tested_set(data: &Dataset, m: &[usize]) -> Result<()> {
    if m.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("tested index set must be sorted and unique"));
    }
    if let Some(&j) = m.iter().find(|&&j| j >= data.n_coef()) {
        return Err(Error::invalid(format!("tested index {j} out of range")));
    }
    if let Some(i) = data.intercept_index() {
        if m.contains(&i) {
            return Err(Error::invalid("the intercept cannot be a tested coefficient"));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmmState {
    pub beta: DVector<f64>,
    pub eta: DVector<f64>,
    pub nu1: DVector<f64>,
    pub nu2: DVector<f64>,
    pub k: usize,
    pub rho: f64,
}

impl AdmmState {
    /// `β⁰` given, `η⁰ = β⁰_P`, `ν⁰ = 0`.
    pub fn from_beta(problem: &ConstrainedWLassoProblem<'_>, beta: DVector<f64>, rho: f64) -> Self {
        let eta = DVector::from_iterator(
            problem.penalized.len(),
            problem.penalized.iter().map(|&j| beta[j]),
        );
        Self {
            eta,
            nu1: DVector::zeros(problem.n_constraints()),
            nu2: DVector::zeros(problem.penalized.len()),
            beta,
            k: 0,
            rho,
        }
    }

    fn check(&self, problem: &ConstrainedWLassoProblem<'_>) -> Result<()> {
        ensure_len("warm-start beta", problem.data.n_coef(), self.beta.len())?;
        ensure_len("warm-start eta", problem.penalized.len(), self.eta.len())?;
        ensure_len("warm-start nu1", problem.n_constraints(), self.nu1.len())?;
        ensure_len("warm-start nu2", problem.penalized.len(), self.nu2.len())?;
        if !(self.rho > 0.0) {
            return Err(Error::invalid("warm-start rho must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AdmmDiagnostics {
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub rho: f64,
    pub polished: bool,
    pub polish_attempts: usize,
    pub newton_steps: usize,
    pub hessian_evaluations: usize,
    /// `(primal, dual)` residual per iteration.
    pub residual_trace: Vec<(f64, f64)>,
}

/// Everything the β-update needs that does not change between iterations.
struct BetaSolver<'p, 'a> {
    problem: &'p ConstrainedWLassoProblem<'a>,
    /// `C̃'C̃ + E_P'E_P`, the augmented-Lagrangian curvature per unit ρ.
    aug: DMatrix<f64>,
    kind: BetaKind,
}

enum BetaKind {
    Gaussian {
        gram: DMatrix<f64>,
        xty: DVector<f64>,
        factor: Option<(f64, Cholesky<f64, Dyn>)>,
    },
    Newton {
        /// Loss Hessian reused across steps until progress stalls.
        hessian: Option<DMatrix<f64>>,
    },
}

struct BetaUpdate {
    beta: DVector<f64>,
    loss: f64,
    newton_steps: usize,
    hessian_evaluations: usize,
}

impl<'p, 'a> BetaSolver<'p, 'a> {
    fn new(problem: &'p ConstrainedWLassoProblem<'a>) -> Self {
        let q = problem.data.n_coef();
        let mut aug = problem.c_full.tr_mul(&problem.c_full);
        for &j in &problem.penalized {
            aug[(j, j)] += 1.0;
        }
        let _ = q;
        let kind = match problem.family {
            GlmFamily::Gaussian => {
                let x = problem.data.x();
                let n = problem.data.n() as f64;
                BetaKind::Gaussian {
                    gram: x.tr_mul(x) / n,
                    xty: x.tr_mul(problem.data.y()) / n,
                    factor: None,
                }
            }
            _ => BetaKind::Newton { hessian: None },
        };
        Self { problem, aug, kind }
    }

    /// Gradient of the augmented terms: `C̃'(ρ(C̃β − t) + ν₁) + E_P'(ρ(β_P − η) + ν₂)`.
    fn aug_gradient(&self, beta: &DVector<f64>, st: &AdmmState) -> DVector<f64> {
        let p = self.problem;
        let mut g = DVector::zeros(beta.len());
        if p.n_constraints() > 0 {
            let r1 = (&p.c_full * beta - &p.t) * st.rho + &st.nu1;
            g += p.c_full.tr_mul(&r1);
        }
        for (k, &j) in p.penalized.iter().enumerate() {
            g[j] += st.rho * (beta[j] - st.eta[k]) + st.nu2[k];
        }
        g
    }

    fn aug_value(&self, beta: &DVector<f64>, st: &AdmmState) -> f64 {
        let p = self.problem;
        let mut v = 0.0;
        if p.n_constraints() > 0 {
            let r1 = &p.c_full * beta - &p.t + &st.nu1 / st.rho;
            v += 0.5 * st.rho * r1.norm_squared();
        }
        for (k, &j) in p.penalized.iter().enumerate() {
            let d = beta[j] - st.eta[k] + st.nu2[k] / st.rho;
            v += 0.5 * st.rho * d * d;
        }
        v
    }

    fn update(&mut self, st: &AdmmState, config: &AdmmConfig) -> Result<BetaUpdate> {
        match &mut self.kind {
            BetaKind::Gaussian { gram, xty, factor } => {
                let p = self.problem;
                let stale = !matches!(factor, Some((r, _)) if *r == st.rho);
                if stale {
                    let a = &*gram + &self.aug * st.rho;
                    let chol = cholesky(a, "Gaussian beta-update system")
                        .map_err(|e| e.at("ADMM beta-update"))?;
                    *factor = Some((st.rho, chol));
                }
                let mut rhs = xty.clone();
                if p.n_constraints() > 0 {
                    rhs += p.c_full.tr_mul(&(&p.t * st.rho - &st.nu1));
                }
                for (k, &j) in p.penalized.iter().enumerate() {
                    rhs[j] += st.rho * st.eta[k] - st.nu2[k];
                }
                let beta = factor.as_ref().expect("factored above").1.solve(&rhs);
                let loss = 0.5 * beta.dot(&(&*gram * &beta)) - xty.dot(&beta);
                Ok(BetaUpdate {
                    beta,
                    loss,
                    newton_steps: 1,
                    hessian_evaluations: 0,
                })
            }
            BetaKind::Newton { .. } => self.newton_update(st, config),
        }
    }

    /// Damped Newton with step-halving on the β-subproblem.
    fn newton_update(&mut self, st: &AdmmState, config: &AdmmConfig) -> Result<BetaUpdate> {
        let family = self.problem.family;
        let data = self.problem.data;
        let q = data.n_coef();
        let all: Vec<usize> = (0..q).collect();
        let mut beta = st.beta.clone();
        let mut eta = data.x() * &beta;
        let mut loss = glm::loss_from_eta(family, data.y(), &eta);
        let mut f = loss + self.aug_value(&beta, st);
        let mut hess_evals = 0;
        let mut prev_gnorm = f64::INFINITY;
        let mut steps = 0;
        for it in 0..config.newton_max {
            let g = glm::gradient_from_eta(family, data, &eta) + self.aug_gradient(&beta, st);
            let gnorm = norm_inf(&g);
            if gnorm <= config.newton_tol {
                break;
            }
            let BetaKind::Newton { hessian } = &mut self.kind else {
                unreachable!()
            };
            // refresh the loss Hessian when the lagged one stops contracting
            if hessian.is_none() || gnorm > 0.25 * prev_gnorm {
                *hessian = Some(glm::hessian_from_eta(family, data, &eta, &all));
                hess_evals += 1;
            }
            prev_gnorm = gnorm;
            let h = hessian.as_ref().expect("set above") + &self.aug * st.rho;
            let chol = cholesky(h, "beta-update Newton system")
                .map_err(|e| e.at(format!("ADMM beta-update Newton step {it}")))?;
            let d = -chol.solve(&g);
            let slope = g.dot(&d);
            let mut step = 1.0;
            loop {
                let trial = &beta + &d * step;
                let eta_t = data.x() * &trial;
                let loss_t = glm::loss_from_eta(family, data.y(), &eta_t);
                let f_t = loss_t + self.aug_value(&trial, st);
                if f_t <= f + 1e-4 * step * slope {
                    beta = trial;
                    eta = eta_t;
                    loss = loss_t;
                    f = f_t;
                    break;
                }
                step *= 0.5;
                if step < 1e-12 {
                    if gnorm > 1e-6 {
                        return Err(Error::NonConvergence {
                            solver: "ADMM beta-update Newton line search",
                            iterations: it,
                            residual: gnorm,
                            last: Some(beta),
                            trace: Vec::new(),
                        });
                    }
                    return Ok(BetaUpdate {
                        beta,
                        loss,
                        newton_steps: steps,
                        hessian_evaluations: hess_evals,
                    });
                }
            }
            steps += 1;
        }
        Ok(BetaUpdate {
            beta,
            loss,
            newton_steps: steps,
            hessian_evaluations: hess_evals,
        })
    }
}

/// One η-update: `η_j = S(β_{P,j} + ν₂ⱼ/ρ, w_j/ρ)`.
pub fn eta_update(state: &AdmmState, problem: &ConstrainedWLassoProblem<'_>) -> DVector<f64> {
    DVector::from_iterator(
        problem.penalized.len(),
        problem.penalized.iter().enumerate().map(|(k, &j)| {
            soft_threshold(
                state.beta[j] + state.nu2[k] / state.rho,
                problem.weights[k] / state.rho,
            )
        }),
    )
}

/// One β-update at the current `(η, ν)`.
pub fn beta_update(
    state: &AdmmState,
    problem: &ConstrainedWLassoProblem<'_>,
    config: &AdmmConfig,
) -> Result<DVector<f64>> {
    state.check(problem)?;
    let mut solver = BetaSolver::new(problem);
    Ok(solver.update(state, config)?.beta)
}

/// Gradient of the β-subproblem objective, for stationarity checks.
pub fn beta_subproblem_gradient(
    state: &AdmmState,
    problem: &ConstrainedWLassoProblem<'_>,
    beta: &DVector<f64>,
) -> Result<DVector<f64>> {
    let solver = BetaSolver::new(problem);
    Ok(glm::gradient(problem.family, problem.data, beta)? + solver.aug_gradient(beta, state))
}

/// Value of the β-subproblem objective.
pub fn beta_subproblem_value(
    state: &AdmmState,
    problem: &ConstrainedWLassoProblem<'_>,
    beta: &DVector<f64>,
) -> Result<f64> {
    let solver = BetaSolver::new(problem);
    Ok(glm::loss(problem.family, problem.data, beta)? + solver.aug_value(beta, state))
}

struct Polished {
    beta: DVector<f64>,
    multiplier: DVector<f64>,
    gradient: DVector<f64>,
}

/// Equality-constrained Newton on the signed support of `eta`, accepted only
/// if the full KKT system of the weighted lasso holds.
fn polish(
    problem: &ConstrainedWLassoProblem<'_>,
    eta: &DVector<f64>,
    start: &DVector<f64>,
    config: &AdmmConfig,
) -> Result<Option<Polished>> {
    let mut cols = problem.unpenalized.clone();
    let mut signs = Vec::new();
    for (k, &j) in problem.penalized.iter().enumerate() {
        if eta[k] != 0.0 {
            cols.push(j);
            signs.push((k, eta[k].signum()));
        }
    }
    if cols.is_empty() {
        // nothing free: β = 0 is the only candidate
        let beta = DVector::zeros(problem.data.n_coef());
        return verify(problem, beta, DVector::zeros(problem.n_constraints()), &[], config);
    }
    if cols.len() > problem.data.n() {
        return Ok(None);
    }
    let nu = problem.unpenalized.len();
    let mut linear = DVector::zeros(cols.len());
    for (i, &(k, s)) in signs.iter().enumerate() {
        linear[nu + i] = problem.weights[k] * s;
    }
    let a = problem.c_full.select_columns(&cols);
    let np = NewtonProblem {
        family: problem.family,
        data: problem.data,
        cols: &cols,
        linear: Some(&linear),
        a: &a,
        b: &problem.t,
    };
    let out = match np.solve(start, config.newton_tol, config.newton_max, "ADMM polish") {
        Ok(o) => o,
        Err(Error::Singular(_)) | Err(Error::Stage { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    if !out.converged {
        return Ok(None);
    }
    for (i, &(k, s)) in signs.iter().enumerate() {
        let b = out.beta[cols[nu + i]];
        if problem.weights[k] > 0.0 && !(b * s > 0.0) {
            return Ok(None);
        }
    }
    verify(problem, out.beta, out.multiplier, &signs, config)
}

fn verify(
    problem: &ConstrainedWLassoProblem<'_>,
    beta: DVector<f64>,
    multiplier: DVector<f64>,
    active: &[(usize, f64)],
    config: &AdmmConfig,
) -> Result<Option<Polished>> {
    let g = glm::gradient(problem.family, problem.data, &beta)?;
    let tol = config.polish_tol;
    // unpenalized block: ∇_U ℓ = C̃'μ restricted to U
    let cm = problem.c_full.tr_mul(&multiplier);
    for &j in &problem.unpenalized {
        if (g[j] - cm[j]).abs() > tol.max(config.newton_tol * 10.0) {
            return Ok(None);
        }
    }
    let mut is_active = vec![false; problem.penalized.len()];
    for &(k, _) in active {
        is_active[k] = true;
    }
    for (k, &j) in problem.penalized.iter().enumerate() {
        if !is_active[k] && g[j].abs() > problem.weights[k] + tol {
            return Ok(None);
        }
    }
    Ok(Some(Polished {
        beta,
        multiplier,
        gradient: g,
    }))
}

fn signed_support(eta: &DVector<f64>) -> Vec<i8> {
    eta.iter()
        .map(|&v| {
            if v > 0.0 {
                1
            } else if v < 0.0 {
                -1
            } else {
                0
            }
        })
        .collect()
}

/// Solve the constrained weighted lasso. `warm` seeds `(β, η, ν, ρ)`; without
/// it the solver starts from zero coefficients.
pub fn solve(
    problem: &ConstrainedWLassoProblem<'_>,
    config: &AdmmConfig,
    warm: Option<AdmmState>,
) -> Result<(FitResult, AdmmState, AdmmDiagnostics)> {
    config.validate()?;
    let mut state = match warm {
        Some(s) => {
            s.check(problem)?;
            AdmmState { k: 0, ..s }
        }
        None => AdmmState::from_beta(problem, DVector::zeros(problem.data.n_coef()), config.rho),
    };
    let q = problem.data.n_coef();
    let np = problem.penalized.len();
    let r = problem.n_constraints();
    let mut diag = AdmmDiagnostics {
        rho: state.rho,
        ..Default::default()
    };
    let mut trace = Vec::new();
    let rho_lo = config.rho * 1e-4;
    let rho_hi = config.rho * 1e6;

    if config.polish {
        diag.polish_attempts += 1;
        if let Some(p) = polish(problem, &state.eta, &state.beta, config)? {
            return Ok(finish_polished(problem, state, p, diag, trace));
        }
    }

    let mut solver = BetaSolver::new(problem);
    let mut last_support = signed_support(&state.eta);
    let mut since_change = 0usize;
    for k in 1..=config.max_iter {
        let upd = solver.update(&state, config)?;
        diag.newton_steps += upd.newton_steps;
        diag.hessian_evaluations += upd.hessian_evaluations;
        state.beta = upd.beta;
        let eta_new = eta_update(&state, problem);
        let eta_prev = std::mem::replace(&mut state.eta, eta_new);

        let r1 = if r > 0 {
            &problem.c_full * &state.beta - &problem.t
        } else {
            DVector::zeros(0)
        };
        let r2 = DVector::from_iterator(
            np,
            problem
                .penalized
                .iter()
                .enumerate()
                .map(|(i, &j)| state.beta[j] - state.eta[i]),
        );
        state.nu1 += &r1 * state.rho;
        state.nu2 += &r2 * state.rho;
        state.k = k;

        let primal = (r1.norm_squared() + r2.norm_squared()).sqrt();
        let dual = state.rho * (&state.eta - &eta_prev).norm();
        diag.residual_trace.push((primal, dual));
        trace.push(upd.loss + problem.penalty_from_eta(&state.eta));

        let beta_p_norm = problem
            .penalized
            .iter()
            .map(|&j| state.beta[j] * state.beta[j])
            .sum::<f64>();
        let cb = if r > 0 {
            (&problem.c_full * &state.beta).norm_squared()
        } else {
            0.0
        };
        let eps_pri = config.tol_primal * ((r + np).max(1) as f64).sqrt()
            + config.tol_rel
                * (cb + beta_p_norm)
                    .sqrt()
                    .max((problem.t.norm_squared() + state.eta.norm_squared()).sqrt());
        let dual_norm = (problem.c_full.tr_mul(&state.nu1).norm_squared()
            + state.nu2.norm_squared())
        .sqrt();
        let eps_dual = config.tol_dual * (q as f64).sqrt() + config.tol_rel * dual_norm;

        diag.iterations = k;
        diag.primal_residual = primal;
        diag.dual_residual = dual;

        if primal <= eps_pri && dual <= eps_dual {
            if config.polish {
                diag.polish_attempts += 1;
                if let Some(p) = polish(problem, &state.eta, &state.beta, config)? {
                    return Ok(finish_polished(problem, state, p, diag, trace));
                }
            }
            diag.rho = state.rho;
            return Ok(finish_plain(problem, state, diag, trace));
        }

        let support = signed_support(&state.eta);
        if support == last_support {
            since_change += 1;
        } else {
            since_change = 0;
            last_support = support;
        }
        if config.polish && since_change > 0 && since_change % config.polish_every == 0 {
            diag.polish_attempts += 1;
            if let Some(p) = polish(problem, &state.eta, &state.beta, config)? {
                return Ok(finish_polished(problem, state, p, diag, trace));
            }
        }

        if config.adaptive_rho && k % 10 == 0 {
            // ν is kept unscaled, so a change of ρ needs no dual rescaling
            if primal > 10.0 * dual && state.rho < rho_hi {
                state.rho *= 2.0;
            } else if dual > 10.0 * primal && state.rho > rho_lo {
                state.rho *= 0.5;
            }
            diag.rho = state.rho;
        }
    }
    let residual = diag.primal_residual.max(diag.dual_residual);
    let mut beta = state.beta.clone();
    for (i, &j) in problem.penalized.iter().enumerate() {
        beta[j] = state.eta[i];
    }
    Err(Error::NonConvergence {
        solver: "ADMM",
        iterations: config.max_iter,
        residual,
        last: Some(beta),
        trace: diag
            .residual_trace
            .iter()
            .map(|&(p, d)| p.max(d))
            .collect(),
    })
}

impl ConstrainedWLassoProblem<'_> {
    fn penalty_from_eta(&self, eta: &DVector<f64>) -> f64 {
        eta.iter()
            .zip(self.weights.iter())
            .map(|(e, w)| e.abs() * w)
            .sum()
    }

    fn support_of(&self, beta: &DVector<f64>) -> Vec<usize> {
        self.penalized
            .iter()
            .copied()
            .filter(|&j| beta[j] != 0.0)
            .collect()
    }
}

fn finish_polished(
    problem: &ConstrainedWLassoProblem<'_>,
    mut state: AdmmState,
    p: Polished,
    mut diag: AdmmDiagnostics,
    mut trace: Vec<f64>,
) -> (FitResult, AdmmState, AdmmDiagnostics) {
    // exact dual certificate for warm starts: ∇_M ℓ + C'ν₁ = 0, ∇_P ℓ + ν₂ = 0
    state.nu1 = -&p.multiplier;
    state.nu2 = DVector::from_iterator(
        problem.penalized.len(),
        problem.penalized.iter().map(|&j| -p.gradient[j]),
    );
    state.eta = DVector::from_iterator(
        problem.penalized.len(),
        problem.penalized.iter().map(|&j| p.beta[j]),
    );
    state.beta = p.beta;
    diag.polished = true;
    diag.rho = state.rho;
    let obj = glm::loss(problem.family, problem.data, &state.beta).unwrap_or(f64::NAN)
        + problem.penalty(&state.beta);
    trace.push(obj);
    let mut fit = FitResult::new(state.beta.clone(), problem.support_of(&state.beta));
    fit.objective_trace = trace;
    fit.iterations = diag.iterations;
    if problem.n_constraints() > 0 {
        fit.multiplier = Some(p.multiplier);
    }
    (fit, state, diag)
}

fn finish_plain(
    problem: &ConstrainedWLassoProblem<'_>,
    state: AdmmState,
    diag: AdmmDiagnostics,
    trace: Vec<f64>,
) -> (FitResult, AdmmState, AdmmDiagnostics) {
    let mut beta = state.beta.clone();
    for (i, &j) in problem.penalized.iter().enumerate() {
        beta[j] = state.eta[i];
    }
    let support = problem.support_of(&beta);
    let mut fit = FitResult::new(beta, support);
    fit.objective_trace = trace;
    fit.iterations = diag.iterations;
    if problem.n_constraints() > 0 {
        fit.multiplier = Some(-&state.nu1);
    }
    (fit, state, diag)
}
