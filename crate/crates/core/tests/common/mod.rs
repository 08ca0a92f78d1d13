#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pptest::admm::ConstrainedWLassoProblem;
use pptest::{glm, Dataset, FitResult, GlmFamily};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

pub const FAMILIES: [GlmFamily; 3] = [GlmFamily::Gaussian, GlmFamily::Logistic, GlmFamily::Poisson];

/// Random design with a sparse signal and a response of the given family.
pub fn random_data(family: GlmFamily, n: usize, p: usize, intercept: bool, seed: u64) -> Dataset {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let scale = if family == GlmFamily::Poisson { 0.4 } else { 1.0 };
    let y = DVector::from_fn(n, |i, _| {
        let eta = scale * (x[(i, 0)] - 0.8 * x[(i, p - 1)]) + if intercept { 0.3 } else { 0.0 };
        match family {
            GlmFamily::Gaussian => eta + rng.sample::<f64, _>(StandardNormal),
            GlmFamily::Logistic => f64::from(rng.random::<f64>() < 1.0 / (1.0 + (-eta).exp())),
            GlmFamily::Poisson => Poisson::new(eta.exp()).unwrap().sample(&mut rng),
        }
    });
    Dataset::new(x, y, intercept).unwrap()
}

/// Largest violation of the constrained weighted-lasso optimality
/// conditions, with the multiplier fitted by least squares.
pub fn kkt_violation(problem: &ConstrainedWLassoProblem<'_>, fit: &FitResult) -> f64 {
    let data = problem.data();
    let g = glm::gradient(problem.family(), data, &fit.beta).unwrap();
    let m = problem.tested();
    let (c, _) = problem.constraint();
    let mut worst = 0.0_f64;

    let g_m = DVector::from_iterator(m.len(), m.iter().map(|&j| g[j]));
    let resid = if c.nrows() == 0 {
        g_m
    } else {
        let ct = c.transpose();
        let nu = (c * &ct).cholesky().unwrap().solve(&(c * &g_m));
        g_m - ct * nu
    };
    worst = resid.iter().fold(worst, |w, v| w.max(v.abs()));
    for j in data.unpenalized_indices(m) {
        if !m.contains(&j) {
            worst = worst.max(g[j].abs());
        }
    }
    for (k, &j) in problem.penalized().iter().enumerate() {
        let w = problem.weights()[k];
        let b = fit.beta[j];
        let v = if b == 0.0 {
            (g[j].abs() - w).max(0.0)
        } else {
            (g[j] + w * b.signum()).abs()
        };
        worst = worst.max(v);
    }
    worst
}
