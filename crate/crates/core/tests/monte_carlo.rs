//! Frequency properties checked over repeated draws.

use nalgebra::DVector;
use pptest::inference::noncentral_chisq_cdf;
use pptest::init::{self, LassoConfig};
use pptest::oracle::{fit_oracle_full, OracleProblem};
use pptest::sim::{self, BetaStarSpec, HypothesisChoice, SimScenario};
use pptest::{Dataset, GlmFamily, PenaltyKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

fn comparison(reps: usize, n: usize) -> SimScenario {
    SimScenario {
        name: None,
        family: GlmFamily::Gaussian,
        n,
        p: 50,
        rho: 0.5,
        beta_star: BetaStarSpec::Comparison,
        h1: 0.0,
        hypothesis: HypothesisChoice::Custom {
            m: vec![3],
            c: vec![vec![1.0]],
            t: vec![0.0],
        },
        reps,
        alpha: 0.05,
        seed: 99,
        intercept: false,
        penalty: PenaltyKind::Scad,
    }
}

#[test]
fn cv_on_pure_noise_prefers_large_lambda() {
    let config = LassoConfig {
        n_lambda: 40,
        ..Default::default()
    };
    let runs = 50;
    let mut high = 0;
    for seed in 0..runs {
        let mut rng = ChaCha20Rng::seed_from_u64(500 + seed);
        let x = sim::gen_design(100, 50, 0.5, &mut rng).unwrap();
        let y = DVector::from_fn(100, |_, _| rng.sample::<f64, _>(StandardNormal));
        let data = Dataset::new(x, y, false).unwrap();
        let grid = init::default_grid(GlmFamily::Gaussian, &data, &config).unwrap();
        let cv = init::cv_select(GlmFamily::Gaussian, &data, &LassoConfig { seed, ..config.clone() }).unwrap();
        let pos = grid.iter().position(|&l| l == cv.lambda).unwrap();
        if pos < grid.len() / 4 {
            high += 1;
        }
    }
    assert!(high as f64 >= 0.8 * runs as f64, "{high}/{runs} in the top quartile");
}

#[test]
fn cross_validated_lasso_is_close_under_strong_signal() {
    let scenario = comparison(50, 100);
    let truth = scenario.beta_star().unwrap();
    let mut close = 0;
    for rep in 0..scenario.reps {
        let (data, cv_seed) = scenario.generate(rep).unwrap();
        let config = LassoConfig {
            seed: cv_seed,
            ..Default::default()
        };
        let cv = init::cv_select(GlmFamily::Gaussian, &data, &config).unwrap();
        let fit = init::fit_lasso(GlmFamily::Gaussian, &data, cv.lambda, &config).unwrap();
        if (fit.beta - &truth).amax() <= 1.0 {
            close += 1;
        }
    }
    assert!(close as f64 >= 0.9 * scenario.reps as f64, "{close}/{}", scenario.reps);
}

#[test]
fn lla_matches_oracle_in_most_replications() {
    let report = sim::run_replications(&comparison(200, 100), None).unwrap();
    let s = &report.summary;
    assert!(s.full_oracle_match_rate >= 0.9, "full {}", s.full_oracle_match_rate);
    assert!(s.reduced_oracle_match_rate >= 0.9, "reduced {}", s.reduced_oracle_match_rate);
    // The events are sufficient, not necessary: here the binding one is
    // ‖β_init − β*‖_max ≤ λ, which the CV lasso misses by a few hundredths
    // in roughly one replication in eight while LLA still lands on the oracle.
    println!("events hold in {:.3} of replications", s.events_rate);
    assert!(s.events_rate >= 0.8, "events {}", s.events_rate);
}

#[test]
fn oracle_error_shrinks_at_root_n_rate() {
    let reps = 20;
    let mut errors = Vec::new();
    for n in [100, 400, 1600] {
        let scenario = comparison(reps, n);
        let truth = scenario.beta_star().unwrap();
        let mut total = 0.0;
        for rep in 0..reps {
            let (data, _) = scenario.generate(rep).unwrap();
            let problem = OracleProblem::new(GlmFamily::Gaussian, &data, &[2], &[0, 1, 4], None).unwrap();
            let fit = fit_oracle_full(&problem).unwrap();
            total += (fit.beta - &truth).norm();
        }
        errors.push(total / reps as f64);
    }
    // quadrupling n should roughly halve the error
    for w in errors.windows(2) {
        let ratio = w[1] / w[0];
        assert!((0.35..0.7).contains(&ratio), "{errors:?}");
    }
}

#[test]
fn noncentral_cdf_matches_sampling() {
    let draws = 200_000;
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    for &(x, r, nu) in &[(4.0, 2, 2.0), (12.0, 4, 6.0), (1.0, 1, 0.3)] {
        let shift = (nu / r as f64).sqrt();
        let hits = (0..draws)
            .filter(|_| {
                (0..r)
                    .map(|_| (rng.sample::<f64, _>(StandardNormal) + shift).powi(2))
                    .sum::<f64>()
                    <= x
            })
            .count();
        let emp = hits as f64 / draws as f64;
        let exact = noncentral_chisq_cdf(x, r, nu).unwrap();
        let se = (exact * (1.0 - exact) / draws as f64).sqrt();
        assert!((emp - exact).abs() < 4.0 * se, "x={x} r={r} nu={nu}: {emp} vs {exact}");
    }
}
