//! Oracle estimators on a known support and the two-step LLA event checks.
//!
//! With the true nuisance support `S` known, the reduced and full oracle
//! estimators minimize `ℓ_n` over the coordinates `M ∪ S` (plus the
//! intercept), with and without `Cβ_M = t`. The events in [`EventReport`]
//! are the computable conditions under which two LLA steps from the initial
//! estimator land exactly on these oracles.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::admm::validate_tested_set;
use crate::error::{ensure_len, Error, Result};
use crate::fit::{support_outside, FitResult};
use crate::glm::{self, Dataset, GlmFamily};
use crate::lla::HypothesisSpec;
use crate::newton::NewtonProblem;
use crate::penalty::PenaltySpec;

#[derive(Debug, Clone)]
pub struct OracleProblem<'a> {
    family: GlmFamily,
    data: &'a Dataset,
    m: Vec<usize>,
    s: Vec<usize>,
    hyp: Option<HypothesisSpec>,
    /// Free coordinates: intercept, then `M ∪ S` in index order.
    cols: Vec<usize>,
    pub newton_tol: f64,
    pub max_iter: usize,
}

impl<'a> OracleProblem<'a> {
    /// `support` is the true support `A` in coefficient indices; `S` is its
    /// part outside `M` and the intercept.
    pub fn new(
        family: GlmFamily,
        data: &'a Dataset,
        m: &[usize],
        support: &[usize],
        hyp: Option<HypothesisSpec>,
    ) -> Result<Self> {
        validate_tested_set(data, m)?;
        if let Some(h) = &hyp {
            if h.m() != m {
                return Err(Error::invalid("hypothesis tested set differs from M"));
            }
        }
        if let Some(&j) = support.iter().find(|&&j| j >= data.n_coef()) {
            return Err(Error::invalid(format!("support index {j} out of range")));
        }
        let icpt = data.intercept_index();
        let mut s: Vec<usize> = support
            .iter()
            .copied()
            .filter(|j| !m.contains(j) && Some(*j) != icpt)
            .collect();
        s.sort_unstable();
        s.dedup();
        let mut cols: Vec<usize> = icpt.into_iter().chain(m.iter().copied()).chain(s.iter().copied()).collect();
        cols.sort_unstable();
        if cols.len() > data.n() {
            return Err(Error::invalid(format!(
                "oracle model has {} coefficients but only {} observations",
                cols.len(),
                data.n()
            )));
        }
        Ok(Self {
            family,
            data,
            m: m.to_vec(),
            s,
            hyp,
            cols,
            newton_tol: 1e-10,
            max_iter: 100,
        })
    }

    pub fn s(&self) -> &[usize] {
        &self.s
    }

    pub fn m(&self) -> &[usize] {
        &self.m
    }

    pub fn hypothesis(&self) -> Option<&HypothesisSpec> {
        self.hyp.as_ref()
    }

    /// Intercept (if any) and `M ∪ S`.
    pub fn free_coordinates(&self) -> &[usize] {
        &self.cols
    }

    fn fit(&self, constraint: Option<&HypothesisSpec>, what: &'static str) -> Result<FitResult> {
        self.data.validate_for(self.family)?;
        let (a, b) = match constraint {
            Some(h) => {
                let mut a = DMatrix::zeros(h.r(), self.cols.len());
                for (k, &j) in h.m().iter().enumerate() {
                    let pos = self.cols.iter().position(|&c| c == j).expect("M is free");
                    a.set_column(pos, &h.c().column(k));
                }
                (a, h.t().clone())
            }
            None => (DMatrix::zeros(0, self.cols.len()), DVector::zeros(0)),
        };
        let np = NewtonProblem {
            family: self.family,
            data: self.data,
            cols: &self.cols,
            linear: None,
            a: &a,
            b: &b,
        };
        let start = DVector::zeros(self.data.n_coef());
        let out = np
            .solve(&start, self.newton_tol, self.max_iter, what)
            .map_err(|e| e.at(what))?;
        if !out.converged {
            return Err(Error::NonConvergence {
                solver: what,
                iterations: out.iterations,
                residual: out.stationarity,
                last: Some(out.beta),
                trace: out.trace,
            });
        }
        let excluded: Vec<usize> = self.data.unpenalized_indices(&self.m);
        let support = support_outside(&out.beta, &excluded);
        let mut fit = FitResult::new(out.beta, support);
        fit.objective_trace = out.trace;
        fit.iterations = out.iterations;
        if constraint.is_some() {
            fit.multiplier = Some(out.multiplier);
        }
        Ok(fit)
    }
}

/// `β̂_a^oracle`: unconstrained minimizer on `M ∪ S`.
pub fn fit_oracle_full(problem: &OracleProblem<'_>) -> Result<FitResult> {
    problem.fit(None, "full oracle Newton")
}

/// `β̂₀^oracle`: minimizer on `M ∪ S` subject to `Cβ_M = t`.
pub fn fit_oracle_reduced(problem: &OracleProblem<'_>) -> Result<FitResult> {
    let hyp = problem
        .hyp
        .as_ref()
        .ok_or_else(|| Error::invalid("reduced oracle needs a hypothesis"))?;
    problem.fit(Some(hyp), "reduced oracle Newton")
}

/// Event margins and verdicts. Checks involving `β*` are `None` when it is
/// not supplied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventReport {
    pub lambda: f64,
    /// `‖β_init − β*‖_max` over the nuisance coordinates.
    pub init_error: Option<f64>,
    /// `a₀λ`.
    pub init_bound: f64,
    pub init_close: Option<bool>,
    /// `‖∇ℓ_n(β̂^oracle)‖_max` outside `M ∪ S` and the intercept.
    pub gradient_max: f64,
    /// `a₁λ`.
    pub gradient_bound: f64,
    pub gradient_small: bool,
    /// `min_{j∈S}|β̂_j^oracle|`; infinite when `S = ∅`.
    pub oracle_signal_min: f64,
    /// `aλ`.
    pub signal_bound: f64,
    pub oracle_signal_large: bool,
    /// `min_{j∈S}|β*_j|`.
    pub true_signal_min: Option<f64>,
    /// `(a+1)λ`.
    pub true_signal_bound: f64,
    pub true_signal_large: Option<bool>,
}

impl EventReport {
    /// Step-one events: a close start and a small off-support gradient.
    pub fn first_step(&self) -> bool {
        self.init_close.unwrap_or(true) && self.gradient_small
    }

    /// Step-two events: small off-support gradient and strong oracle signal.
    pub fn second_step(&self) -> bool {
        self.gradient_small && self.oracle_signal_large
    }

    pub fn all_hold(&self) -> bool {
        self.first_step() && self.second_step()
    }
}

/// Evaluate the two-step events at an oracle fit.
pub fn check_lla_events(
    problem: &OracleProblem<'_>,
    fit: &FitResult,
    penalty: &PenaltySpec,
    beta_init: &DVector<f64>,
    beta_star: Option<&DVector<f64>>,
) -> Result<EventReport> {
    let q = problem.data.n_coef();
    ensure_len("oracle fit", q, fit.beta.len())?;
    ensure_len("beta_init", q, beta_init.len())?;
    if let Some(bs) = beta_star {
        ensure_len("beta_star", q, bs.len())?;
    }
    let lam = penalty.lambda;
    let nuisance = problem.data.penalized_indices(&problem.m);

    let init_error = beta_star.map(|bs| {
        nuisance
            .iter()
            .fold(0.0_f64, |acc, &j| acc.max((beta_init[j] - bs[j]).abs()))
    });
    let init_bound = penalty.a0() * lam;

    let g = glm::gradient(problem.family, problem.data, &fit.beta)?;
    let gradient_max = nuisance
        .iter()
        .filter(|j| !problem.s.contains(j))
        .fold(0.0_f64, |acc, &j| acc.max(g[j].abs()));
    let gradient_bound = penalty.a1() * lam;

    let oracle_signal_min = problem
        .s
        .iter()
        .fold(f64::INFINITY, |acc, &j| acc.min(fit.beta[j].abs()));
    let signal_bound = penalty.flat_threshold();
    let true_signal_min = beta_star.map(|bs| {
        problem
            .s
            .iter()
            .fold(f64::INFINITY, |acc, &j| acc.min(bs[j].abs()))
    });
    let true_signal_bound = (penalty.a + 1.0) * lam;

    Ok(EventReport {
        lambda: lam,
        init_close: init_error.map(|e| e <= init_bound),
        init_error,
        init_bound,
        gradient_small: gradient_max < gradient_bound,
        gradient_max,
        gradient_bound,
        oracle_signal_large: oracle_signal_min > signal_bound,
        oracle_signal_min,
        signal_bound,
        true_signal_large: true_signal_min.map(|m| m > true_signal_bound),
        true_signal_min,
        true_signal_bound,
    })
}
