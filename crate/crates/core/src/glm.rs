//! Canonical exponential-family GLMs and the negative average log-likelihood
//!
//! ```text
//! ℓ_n(β) = −(1/n) Σᵢ { yᵢ xᵢ'β − b(xᵢ'β) }
//! ```
//!
//! together with its gradient and Hessian blocks.

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, Error, Result};

/// Linear predictors for the Poisson family are clamped to this magnitude
/// inside loss and derivative evaluation.
pub const POISSON_ETA_CLAMP: f64 = 30.0;

static POISSON_CLAMPS: AtomicU64 = AtomicU64::new(0);

/// Number of Poisson linear predictors clamped so far in this process.
pub fn poisson_clamp_count() -> u64 {
    POISSON_CLAMPS.load(Ordering::Relaxed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GlmFamily {
    Gaussian,
    Logistic,
    Poisson,
}

impl GlmFamily {
    /// Logistic and Poisson have φ* = 1; the Gaussian variance is estimated.
    pub fn dispersion_known(self) -> bool {
        !matches!(self, GlmFamily::Gaussian)
    }

    /// Self-concordance constant `K` with `|b‴| ≤ K b″`.
    pub fn self_concordance(self) -> f64 {
        match self {
            GlmFamily::Gaussian => 0.0,
            GlmFamily::Logistic | GlmFamily::Poisson => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GlmFamily::Gaussian => "gaussian",
            GlmFamily::Logistic => "logistic",
            GlmFamily::Poisson => "poisson",
        }
    }
}

impl std::str::FromStr for GlmFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "linear" | "normal" => Ok(GlmFamily::Gaussian),
            "logistic" | "binomial" | "logit" => Ok(GlmFamily::Logistic),
            "poisson" => Ok(GlmFamily::Poisson),
            other => Err(Error::invalid(format!("unknown family '{other}'"))),
        }
    }
}

impl std::fmt::Display for GlmFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// The cumulant `b` and its first three derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cumulant {
    pub b: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
}

fn sigmoid(theta: f64) -> f64 {
    if theta >= 0.0 {
        1.0 / (1.0 + (-theta).exp())
    } else {
        let e = theta.exp();
        e / (1.0 + e)
    }
}

fn log1p_exp(theta: f64) -> f64 {
    if theta <= 0.0 {
        theta.exp().ln_1p()
    } else {
        theta + (-theta).exp().ln_1p()
    }
}

/// `b(θ)` and its derivatives, unclamped.
pub fn b_derivs(family: GlmFamily, theta: f64) -> Result<Cumulant> {
    if !theta.is_finite() {
        return Err(Error::invalid("linear predictor must be finite"));
    }
    Ok(match family {
        GlmFamily::Gaussian => Cumulant {
            b: 0.5 * theta * theta,
            b1: theta,
            b2: 1.0,
            b3: 0.0,
        },
        GlmFamily::Logistic => {
            let mu = sigmoid(theta);
            let v = mu * (1.0 - mu);
            Cumulant {
                b: log1p_exp(theta),
                b1: mu,
                b2: v,
                b3: v * (1.0 - 2.0 * mu),
            }
        }
        GlmFamily::Poisson => {
            let e = theta.exp();
            if !e.is_finite() {
                return Err(Error::Overflow("poisson"));
            }
            Cumulant {
                b: e,
                b1: e,
                b2: e,
                b3: e,
            }
        }
    })
}

#[inline]
fn clamp_eta(family: GlmFamily, theta: f64) -> f64 {
    if family == GlmFamily::Poisson && theta.abs() > POISSON_ETA_CLAMP {
        POISSON_CLAMPS.fetch_add(1, Ordering::Relaxed);
        theta.clamp(-POISSON_ETA_CLAMP, POISSON_ETA_CLAMP)
    } else {
        theta
    }
}

#[inline]
pub(crate) fn b_value(family: GlmFamily, theta: f64) -> f64 {
    match family {
        GlmFamily::Gaussian => 0.5 * theta * theta,
        GlmFamily::Logistic => log1p_exp(theta),
        GlmFamily::Poisson => clamp_eta(family, theta).exp(),
    }
}

#[inline]
pub(crate) fn mean_value(family: GlmFamily, theta: f64) -> f64 {
    match family {
        GlmFamily::Gaussian => theta,
        GlmFamily::Logistic => sigmoid(theta),
        GlmFamily::Poisson => clamp_eta(family, theta).exp(),
    }
}

#[inline]
pub(crate) fn variance_value(family: GlmFamily, theta: f64) -> f64 {
    match family {
        GlmFamily::Gaussian => 1.0,
        GlmFamily::Logistic => {
            let mu = sigmoid(theta);
            mu * (1.0 - mu)
        }
        GlmFamily::Poisson => clamp_eta(family, theta).exp(),
    }
}

/// Design matrix and response. When `has_intercept` is set, column 0 of `x`
/// is the all-ones intercept column and coefficient 0 is the intercept.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    has_intercept: bool,
}

impl Dataset {
    /// Build from a feature matrix (without intercept column) and response.
    pub fn new(features: DMatrix<f64>, y: DVector<f64>, intercept: bool) -> Result<Self> {
        let x = if intercept {
            features.insert_column(0, 1.0)
        } else {
            features
        };
        Self::from_design(x, y, intercept)
    }

    /// Build from a full design matrix whose column 0 is already the
    /// intercept when `has_intercept` is set.
    pub fn from_design(x: DMatrix<f64>, y: DVector<f64>, has_intercept: bool) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::invalid("dataset has no observations"));
        }
        if x.ncols() == 0 || (has_intercept && x.ncols() == 1) {
            return Err(Error::invalid("dataset has no predictors"));
        }
        ensure_len("response", x.nrows(), y.len())?;
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("dataset contains non-finite values"));
        }
        Ok(Self {
            x,
            y,
            has_intercept,
        })
    }

    /// Check the response against the family's support.
    pub fn validate_for(&self, family: GlmFamily) -> Result<()> {
        match family {
            GlmFamily::Gaussian => Ok(()),
            GlmFamily::Logistic => {
                if self.y.iter().all(|&v| v == 0.0 || v == 1.0) {
                    Ok(())
                } else {
                    Err(Error::invalid("logistic responses must be 0 or 1"))
                }
            }
            GlmFamily::Poisson => {
                if self.y.iter().all(|&v| v >= 0.0 && v.fract() == 0.0) {
                    Ok(())
                } else {
                    Err(Error::invalid("poisson responses must be nonnegative integers"))
                }
            }
        }
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn has_intercept(&self) -> bool {
        self.has_intercept
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Number of coefficients, including the intercept slot.
    pub fn n_coef(&self) -> usize {
        self.x.ncols()
    }

    /// Number of predictors, excluding the intercept.
    pub fn n_features(&self) -> usize {
        self.x.ncols() - usize::from(self.has_intercept)
    }

    /// Coefficient index of the intercept, if any.
    pub fn intercept_index(&self) -> Option<usize> {
        self.has_intercept.then_some(0)
    }

    /// Coefficient index of 0-based feature `j`.
    pub fn feature_index(&self, j: usize) -> usize {
        j + usize::from(self.has_intercept)
    }

    /// Indices eligible for penalization, i.e. everything but the intercept
    /// and the tested set `m` (which must be sorted).
    pub fn penalized_indices(&self, m: &[usize]) -> Vec<usize> {
        (usize::from(self.has_intercept)..self.n_coef())
            .filter(|j| m.binary_search(j).is_err())
            .collect()
    }

    /// Unpenalized indices: intercept (if any) followed by `m`.
    pub fn unpenalized_indices(&self, m: &[usize]) -> Vec<usize> {
        let mut u: Vec<usize> = self.intercept_index().into_iter().collect();
        u.extend(m.iter().copied().filter(|&j| Some(j) != self.intercept_index()));
        u
    }

    pub fn subset_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(rows),
            y: DVector::from_iterator(rows.len(), rows.iter().map(|&i| self.y[i])),
            has_intercept: self.has_intercept,
        }
    }

    pub fn linear_predictor(&self, beta: &DVector<f64>) -> Result<DVector<f64>> {
        ensure_len("coefficient vector", self.n_coef(), beta.len())?;
        Ok(&self.x * beta)
    }
}

pub(crate) fn loss_from_eta(family: GlmFamily, y: &DVector<f64>, eta: &DVector<f64>) -> f64 {
    let n = y.len() as f64;
    let s: f64 = y
        .iter()
        .zip(eta.iter())
        .map(|(&yi, &t)| yi * t - b_value(family, t))
        .sum();
    -s / n
}

pub(crate) fn gradient_from_eta(
    family: GlmFamily,
    data: &Dataset,
    eta: &DVector<f64>,
) -> DVector<f64> {
    gradient_cols(family, &data.x, &data.y, eta)
}

/// `(1/n) X_cols' diag(b″(η)) X_cols`.
pub(crate) fn hessian_from_eta(
    family: GlmFamily,
    data: &Dataset,
    eta: &DVector<f64>,
    cols: &[usize],
) -> DMatrix<f64> {
    weighted_gram(family, data.x.select_columns(cols), eta)
}

/// `(1/n) Z' diag(b″(η)) Z` for an owned column subset `z`.
pub(crate) fn weighted_gram(family: GlmFamily, mut z: DMatrix<f64>, eta: &DVector<f64>) -> DMatrix<f64> {
    let n = z.nrows();
    if family != GlmFamily::Gaussian {
        let w: Vec<f64> = eta.iter().map(|&t| variance_value(family, t).sqrt()).collect();
        for mut c in z.column_iter_mut() {
            for (ci, wi) in c.iter_mut().zip(&w) {
                *ci *= wi;
            }
        }
    }
    let mut h = z.tr_mul(&z);
    h /= n as f64;
    // symmetrize exactly
    let k = h.nrows();
    for i in 0..k {
        for j in (i + 1)..k {
            let v = 0.5 * (h[(i, j)] + h[(j, i)]);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    h
}

/// `−(1/n) Z'(y − μ(η))` for a column subset `z`.
pub(crate) fn gradient_cols(family: GlmFamily, z: &DMatrix<f64>, y: &DVector<f64>, eta: &DVector<f64>) -> DVector<f64> {
    let n = y.len() as f64;
    let resid = DVector::from_iterator(
        eta.len(),
        y.iter()
            .zip(eta.iter())
            .map(|(&yi, &t)| (mean_value(family, t) - yi) / n),
    );
    z.tr_mul(&resid)
}

/// `ℓ_n(β)`.
pub fn loss(family: GlmFamily, data: &Dataset, beta: &DVector<f64>) -> Result<f64> {
    let eta = data.linear_predictor(beta)?;
    Ok(loss_from_eta(family, &data.y, &eta))
}

/// `∇ℓ_n(β) = −(1/n) X'(y − μ(Xβ))`.
pub fn gradient(family: GlmFamily, data: &Dataset, beta: &DVector<f64>) -> Result<DVector<f64>> {
    let eta = data.linear_predictor(beta)?;
    Ok(gradient_from_eta(family, data, &eta))
}

/// The Hessian of `ℓ_n` restricted to the coefficient indices `cols`.
pub fn hessian_block(
    family: GlmFamily,
    data: &Dataset,
    beta: &DVector<f64>,
    cols: &[usize],
) -> Result<DMatrix<f64>> {
    if cols.is_empty() {
        return Err(Error::invalid("hessian block requested for an empty index set"));
    }
    if let Some(&j) = cols.iter().find(|&&j| j >= data.n_coef()) {
        return Err(Error::invalid(format!("column index {j} out of range")));
    }
    let eta = data.linear_predictor(beta)?;
    Ok(hessian_from_eta(family, data, &eta, cols))
}
