//! Small dense linear-algebra helpers shared by the solvers.
//!
//! Every solve goes through a Cholesky factorization; nothing here forms an
//! explicit inverse.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Ridge added to the diagonal when a nominally positive-definite matrix fails
/// to factor.
pub const RIDGE: f64 = 1e-8;

/// Cholesky factor of `m`, retrying once with `RIDGE·I` added.
pub fn cholesky(m: DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular(format!("{what} has non-finite entries")));
    }
    let n = m.nrows();
    match Cholesky::new(m.clone()) {
        Some(c) => Ok(c),
        None => {
            let ridged = m + DMatrix::<f64>::identity(n, n) * RIDGE;
            Cholesky::new(ridged).ok_or_else(|| Error::Singular(what.to_string()))
        }
    }
}

/// Numerical rank of `m` from its singular values.
pub fn rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    if max == 0.0 {
        return 0;
    }
    let tol = max * (m.nrows().max(m.ncols()) as f64) * f64::EPSILON * 16.0;
    sv.iter().filter(|&&s| s > tol).count()
}

pub fn select(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

pub fn select_cols(x: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    x.select_columns(idx)
}

pub fn select_rows(x: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    x.select_rows(idx)
}

pub fn soft_threshold(x: f64, threshold: f64) -> f64 {
    if x > threshold {
        x - threshold
    } else if x < -threshold {
        x + threshold
    } else {
        0.0
    }
}

/// Solve the equality-constrained Newton system
///
/// ```text
/// [ H  A' ] [ d  ]   [ -g ]
/// [ A  0  ] [ nu ] = [  b ]
/// ```
///
/// with `H` positive definite, by Cholesky of `H` and of the Schur complement
/// `A H⁻¹ A'`. An `A` with zero rows reduces to `H d = -g`.
pub fn kkt_solve(
    h: DMatrix<f64>,
    g: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    what: &str,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let chol = cholesky(h, what)?;
    let h_inv_g = chol.solve(g);
    if a.nrows() == 0 {
        return Ok((-h_inv_g, DVector::zeros(0)));
    }
    let h_inv_at = chol.solve(&a.transpose());
    let schur = a * &h_inv_at;
    let schur_chol = cholesky(schur, "constraint Schur complement")?;
    // A d = b with d = -H⁻¹(g + A' nu)  =>  (A H⁻¹ A') nu = -(b + A H⁻¹ g)
    let rhs = -(b + a * &h_inv_g);
    let nu = schur_chol.solve(&rhs);
    let d = -(h_inv_g + h_inv_at * &nu);
    Ok((d, nu))
}

pub fn norm_inf(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// `n` log-spaced points from `hi` down to `lo`.
pub fn log_grid(hi: f64, lo: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![hi];
    }
    let (lh, ll) = (hi.ln(), lo.ln());
    (0..n)
        .map(|i| (lh + (ll - lh) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
