//! Small worked cases with closed-form or hand-checkable answers.

mod common;

use common::random_data;
use nalgebra::{DMatrix, DVector};
use pptest::admm::{self, AdmmConfig, ConstrainedWLassoProblem};
use pptest::inference::{lrt_statistic, power_approx, score_statistic};
use pptest::init::{self, LassoConfig};
use pptest::linalg::soft_threshold;
use pptest::lla::{self, LlaConfig};
use pptest::oracle::{fit_oracle_full, fit_oracle_reduced, OracleProblem};
use pptest::{glm, Dataset, FitResult, GlmFamily, HypothesisSpec, PenaltySpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

fn tight() -> LassoConfig {
    LassoConfig {
        tol: 1e-10,
        max_iter: 100_000,
        ..Default::default()
    }
}

fn gaussian_matrix(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn rss(data: &Dataset, beta: &DVector<f64>) -> f64 {
    (data.y() - data.x() * beta).norm_squared()
}

#[test]
fn orthonormal_lasso_is_soft_thresholding() {
    let (n, p) = (64, 6);
    let q = gaussian_matrix(n, p, 1).qr().q();
    let x = q * (n as f64).sqrt();
    let y = DVector::from_fn(n, |i, _| x[(i, 0)] * 1.5 - x[(i, 3)] * 0.4 + 0.3 * ((i % 7) as f64 - 3.0));
    let data = Dataset::new(x.clone(), y.clone(), false).unwrap();
    let z = x.tr_mul(&y) / n as f64;
    for lambda in [0.05, 0.3, 1.0] {
        let fit = init::fit_lasso(GlmFamily::Gaussian, &data, lambda, &tight()).unwrap();
        for j in 0..p {
            assert!((fit.beta[j] - soft_threshold(z[j], lambda)).abs() < 1e-7, "lambda {lambda}, coord {j}");
        }
    }
}

#[test]
fn lasso_is_zero_above_lambda_max() {
    for family in common::FAMILIES {
        let data = random_data(family, 80, 10, true, 11);
        let hi = init::lambda_max(family, &data).unwrap();
        for scale in [1.0, 1.5, 10.0] {
            let fit = init::fit_lasso(family, &data, hi * scale, &LassoConfig::default()).unwrap();
            assert!(fit.beta.iter().skip(1).all(|&b| b == 0.0), "{family:?} at {scale}·λmax: {}", fit.beta);
        }
        let below = init::fit_lasso(family, &data, hi * 0.9, &LassoConfig::default()).unwrap();
        assert!(below.beta.iter().skip(1).any(|&b| b != 0.0));
    }
}

#[test]
fn vanishing_lambda_recovers_least_squares() {
    let data = random_data(GlmFamily::Gaussian, 100, 5, true, 3);
    let fit = init::fit_lasso(GlmFamily::Gaussian, &data, 1e-9, &tight()).unwrap();
    let ols = (data.x().transpose() * data.x())
        .cholesky()
        .unwrap()
        .solve(&(data.x().transpose() * data.y()));
    assert!((fit.beta - ols).amax() < 1e-4);
}

#[test]
fn admm_with_flat_weights_is_the_lasso() {
    for family in common::FAMILIES {
        let data = random_data(family, 120, 15, true, 21);
        let lambda = 0.3 * init::lambda_max(family, &data).unwrap();
        let lasso = init::fit_lasso(family, &data, lambda, &tight()).unwrap();
        let problem = ConstrainedWLassoProblem::new(
            family,
            &data,
            &[],
            DMatrix::zeros(0, 0),
            DVector::zeros(0),
            DVector::from_element(15, lambda),
        )
        .unwrap();
        let (fit, _, _) = admm::solve(&problem, &AdmmConfig::default(), None).unwrap();
        let a = problem.objective(&fit.beta).unwrap();
        let b = problem.objective(&lasso.beta).unwrap();
        assert!((a - b).abs() < 1e-5, "{family:?}: admm {a} vs lasso {b}");
    }
}

#[test]
fn gaussian_lrt_is_the_residual_sum_difference() {
    let data = random_data(GlmFamily::Gaussian, 90, 12, false, 5);
    let m = vec![0, 1];
    let hyp = HypothesisSpec::new(m.clone(), DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), DVector::zeros(1)).unwrap();
    let problem = OracleProblem::new(GlmFamily::Gaussian, &data, &m, &[0, 1, 11], Some(hyp)).unwrap();
    let full = fit_oracle_full(&problem).unwrap();
    let reduced = fit_oracle_reduced(&problem).unwrap();
    let phi = 0.7;
    let t = lrt_statistic(GlmFamily::Gaussian, &data, &full, &reduced, phi).unwrap();
    let expected = (rss(&data, &reduced.beta) - rss(&data, &full.beta)) / phi;
    assert!((t - expected).abs() < 1e-8 * expected.abs().max(1.0));
    assert!(t >= 0.0);
}

#[test]
fn score_vanishes_at_the_unconstrained_fit() {
    for family in common::FAMILIES {
        let data = random_data(family, 150, 6, true, 8);
        let m = vec![2, 3];
        let hyp = HypothesisSpec::coordinates(m.clone(), DVector::zeros(2)).unwrap();
        let all: Vec<usize> = (0..data.n_coef()).collect();
        let problem = OracleProblem::new(family, &data, &m, &all, None).unwrap();
        let mle = fit_oracle_full(&problem).unwrap();
        let s = score_statistic(family, &data, &mle, &hyp, 1.0).unwrap();
        assert!(s.abs() < 1e-12, "{family:?}: {s}");
    }
}

#[test]
fn power_grows_along_a_ray() {
    let data = random_data(GlmFamily::Logistic, 200, 8, false, 13);
    let m = vec![0, 1];
    let hyp = HypothesisSpec::new(m, DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), DVector::zeros(1)).unwrap();
    let powers: Vec<f64> = (0..5)
        .map(|k| {
            let mut beta = DVector::zeros(8);
            beta[0] = 1.0;
            beta[1] = -1.0 + 0.05 * k as f64;
            power_approx(GlmFamily::Logistic, &data, &beta, &hyp, 1.0, &[0, 1], 0.05).unwrap()
        })
        .collect();
    assert!((powers[0] - 0.05).abs() < 1e-12);
    assert!(powers.windows(2).all(|w| w[1] > w[0]), "{powers:?}");
}

fn strong_signal_data(seed: u64) -> (Dataset, DVector<f64>) {
    let x = gaussian_matrix(200, 20, seed);
    let mut beta = DVector::zeros(20);
    beta[0] = 3.0;
    beta[1] = 1.5;
    beta[4] = 2.0;
    let mut rng = ChaCha20Rng::seed_from_u64(seed + 1000);
    let y = &x * &beta + DVector::from_fn(200, |_, _| rng.sample::<f64, _>(StandardNormal));
    (Dataset::new(x, y, false).unwrap(), beta)
}

/// The oracle is a fixed point of the LLA map when λ separates signal from
/// noise: starting there, every step returns it.
#[test]
fn oracle_is_an_lla_fixed_point() {
    let (data, _) = strong_signal_data(31);
    let m = vec![2];
    let hyp = HypothesisSpec::coordinates(m.clone(), DVector::zeros(1)).unwrap();
    let pen = PenaltySpec::scad(0.25);
    let problem = OracleProblem::new(GlmFamily::Gaussian, &data, &m, &[0, 1, 4], Some(hyp.clone())).unwrap();
    let config = LlaConfig {
        steps: 3,
        ..Default::default()
    };
    let full = fit_oracle_full(&problem).unwrap();
    let out = lla::lla_full_detailed(GlmFamily::Gaussian, &data, &m, &pen, &full.beta, &config, None).unwrap();
    for it in &out.iterates {
        assert!((it - &full.beta).amax() < 1e-6);
    }
    let reduced = fit_oracle_reduced(&problem).unwrap();
    let fit: FitResult = lla::lla_reduced(GlmFamily::Gaussian, &data, &hyp, &pen, &reduced.beta, &config).unwrap();
    assert!((fit.beta - reduced.beta).amax() < 1e-6);
}

/// Two LLA steps from a lasso start already land on the oracle.
#[test]
fn two_steps_from_the_lasso_reach_the_oracle() {
    let (data, _) = strong_signal_data(47);
    let m = vec![2];
    let pen = PenaltySpec::scad(0.25);
    let lasso = init::fit_lasso(GlmFamily::Gaussian, &data, 0.1, &LassoConfig::default()).unwrap();
    let problem = OracleProblem::new(GlmFamily::Gaussian, &data, &m, &[0, 1, 4], None).unwrap();
    let oracle = fit_oracle_full(&problem).unwrap();
    let fit = lla::lla_full(GlmFamily::Gaussian, &data, &m, &pen, &lasso.beta, &LlaConfig::default()).unwrap();
    assert!((fit.beta - oracle.beta).amax() < 1e-6);
    assert_eq!(fit.lla_fixed_point, Some(true));
}

#[test]
fn gaussian_loss_is_centered_half_mean_square() {
    let data = random_data(GlmFamily::Gaussian, 40, 3, false, 2);
    let beta = DVector::from_vec(vec![0.5, -0.1, 0.2]);
    let l = glm::loss(GlmFamily::Gaussian, &data, &beta).unwrap();
    let direct = rss(&data, &beta) / 80.0 - data.y().norm_squared() / 80.0;
    assert!((l - direct).abs() < 1e-12);
}
