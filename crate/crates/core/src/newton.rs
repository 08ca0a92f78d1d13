//! Equality-constrained damped Newton on a column subset:
//!
//! ```text
//! minimize  ℓ_n(β) + lᵀβ_cols   s.t.  A β_cols = b,  β_j = 0 for j ∉ cols
//! ```
//!
//! Shared by the oracle estimators and the ADMM active-set polish.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::glm::{self, Dataset, GlmFamily};
use crate::linalg::{cholesky, kkt_solve, norm_inf};

pub(crate) struct NewtonProblem<'a> {
    pub family: GlmFamily,
    pub data: &'a Dataset,
    pub cols: &'a [usize],
    /// Linear term on `cols`; `None` for zero.
    pub linear: Option<&'a DVector<f64>>,
    /// Constraint rows over `cols` (may have zero rows).
    pub a: &'a DMatrix<f64>,
    pub b: &'a DVector<f64>,
}

pub(crate) struct NewtonOutcome {
    /// Full-length coefficient vector, zero off `cols`.
    pub beta: DVector<f64>,
    /// `μ` with `∇_cols(ℓ_n + lᵀβ) = Aᵀμ` at the solution.
    pub multiplier: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `‖∇_cols − Aᵀμ‖_max` at the returned point.
    pub stationarity: f64,
    pub trace: Vec<f64>,
}

impl NewtonProblem<'_> {
    fn objective(&self, z: &DMatrix<f64>, x: &DVector<f64>) -> (DVector<f64>, f64) {
        let eta = z * x;
        let mut f = glm::loss_from_eta(self.family, self.data.y(), &eta);
        if let Some(l) = self.linear {
            f += l.dot(x);
        }
        (eta, f)
    }

    pub fn solve(
        &self,
        start: &DVector<f64>,
        tol: f64,
        max_iter: usize,
        what: &str,
    ) -> Result<NewtonOutcome> {
        let k = self.cols.len();
        let r = self.a.nrows();
        if self.a.ncols() != k {
            return Err(Error::DimensionMismatch {
                what: "constraint columns",
                expected: k,
                found: self.a.ncols(),
            });
        }
        let z = self.data.x().select_columns(self.cols);
        let mut x = DVector::from_iterator(k, self.cols.iter().map(|&j| start[j]));

        let aat = if r > 0 {
            Some(cholesky(self.a * self.a.transpose(), "constraint Gram matrix")?)
        } else {
            None
        };
        // move to the affine set first so every damped step stays feasible
        if let Some(aat) = &aat {
            let resid = self.a * &x - self.b;
            if norm_inf(&resid) > 0.0 {
                x -= self.a.transpose() * aat.solve(&resid);
            }
        }

        let (mut eta, mut f) = self.objective(&z, &x);
        let mut trace = vec![f];
        let (mut g, mut multiplier, mut stationarity) = self.stationarity(&z, &eta, aat.as_ref());
        let mut converged = false;
        let mut iterations = 0;
        for it in 0..max_iter {
            iterations = it;
            if stationarity <= tol {
                converged = true;
                break;
            }
            let h = glm::weighted_gram(self.family, z.clone(), &eta);
            let rhs = if r > 0 {
                self.b - self.a * &x
            } else {
                DVector::zeros(0)
            };
            let (d, _) = kkt_solve(h, &g, self.a, &rhs, what)
                .map_err(|e| e.at(format!("{what}: Newton step {it}")))?;
            let slope = g.dot(&d);
            let flat = -slope <= 1e3 * f64::EPSILON * f.abs().max(1.0);
            let mut accepted = None;
            if !flat {
                let mut step = 1.0;
                while step >= 1e-10 {
                    let trial = &x + &d * step;
                    let (eta_t, f_t) = self.objective(&z, &trial);
                    if f_t <= f + 1e-4 * step * slope {
                        accepted = Some((trial, eta_t, f_t));
                        break;
                    }
                    step *= 0.5;
                }
            }
            let (x_new, eta_new, f_new) = match accepted {
                Some(v) => v,
                None => {
                    // The decrease is below the resolution of `f`; take the
                    // full step only if it lowers the projected gradient.
                    let trial = &x + &d;
                    let (eta_t, f_t) = self.objective(&z, &trial);
                    let st = self.stationarity(&z, &eta_t, aat.as_ref());
                    if st.2 >= stationarity {
                        let near = stationarity <= 1e2 * tol;
                        return Ok(self.finish(x, multiplier, it + 1, near, stationarity, trace));
                    }
                    (trial, eta_t, f_t)
                }
            };
            x = x_new;
            eta = eta_new;
            f = f_new;
            (g, multiplier, stationarity) = self.stationarity(&z, &eta, aat.as_ref());
            trace.push(f);
            iterations = it + 1;
        }
        if !converged && stationarity <= tol {
            converged = true;
        }
        Ok(self.finish(x, multiplier, iterations, converged, stationarity, trace))
    }

    /// Gradient on `cols`, least-squares multiplier and the projected
    /// gradient norm.
    fn stationarity(
        &self,
        z: &DMatrix<f64>,
        eta: &DVector<f64>,
        aat: Option<&Cholesky<f64, Dyn>>,
    ) -> (DVector<f64>, DVector<f64>, f64) {
        let mut g = glm::gradient_cols(self.family, z, self.data.y(), eta);
        if let Some(l) = self.linear {
            g += l;
        }
        match aat {
            Some(aat) => {
                let mu = aat.solve(&(self.a * &g));
                let s = norm_inf(&(&g - self.a.tr_mul(&mu)));
                (g, mu, s)
            }
            None => {
                let s = norm_inf(&g);
                (g, DVector::zeros(0), s)
            }
        }
    }

    fn finish(
        &self,
        x: DVector<f64>,
        multiplier: DVector<f64>,
        iterations: usize,
        converged: bool,
        stationarity: f64,
        trace: Vec<f64>,
    ) -> NewtonOutcome {
        let mut beta = DVector::zeros(self.data.n_coef());
        for (i, &j) in self.cols.iter().enumerate() {
            beta[j] = x[i];
        }
        NewtonOutcome {
            beta,
            multiplier,
            iterations,
            converged,
            stationarity,
            trace,
        }
    }
}
