use nalgebra::DVector;
use serde::{Deserialize, Serialize};

/// Output of any estimator in this crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub beta: DVector<f64>,
    /// Estimated support `Ŝ(β̂)`: nonzero coefficients outside the tested set
    /// and the intercept.
    pub support: Vec<usize>,
    /// Objective value per outer iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Lagrange multiplier of the hypothesis constraint, `∇_M ℓ_n = C'ν`,
    /// when the estimator was constrained and the solver produced one.
    pub multiplier: Option<DVector<f64>>,
    /// For LLA fits: whether the last two LLA iterates coincide.
    pub lla_fixed_point: Option<bool>,
}

impl FitResult {
    pub fn new(beta: DVector<f64>, support: Vec<usize>) -> Self {
        Self {
            beta,
            support,
            objective_trace: Vec::new(),
            iterations: 0,
            converged: true,
            multiplier: None,
            lla_fixed_point: None,
        }
    }

    /// Number of nonzero coefficients, intercept excluded.
    pub fn l0_norm(&self, intercept: Option<usize>) -> usize {
        self.beta
            .iter()
            .enumerate()
            .filter(|&(j, &b)| Some(j) != intercept && b != 0.0)
            .count()
    }
}

/// `{j ∉ unpenalized : β_j ≠ 0}` with exact-zero semantics.
pub(crate) fn support_outside(beta: &DVector<f64>, excluded: &[usize]) -> Vec<usize> {
    beta.iter()
        .enumerate()
        .filter(|&(j, &b)| b != 0.0 && !excluded.contains(&j))
        .map(|(j, _)| j)
        .collect()
}
