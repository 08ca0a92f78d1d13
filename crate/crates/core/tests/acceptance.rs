//! Acceptance criteria, one line each. Monte-Carlo criteria are reported
//! rather than asserted; set `ACCEPTANCE_STRICT=1` to turn any FAIL into a
//! nonzero exit.

mod common;

use std::time::Instant;

use common::{kkt_violation, random_data, FAMILIES};
use nalgebra::{DMatrix, DVector};
use pptest::admm::{self, AdmmConfig, ConstrainedWLassoProblem};
use pptest::inference::{central_chisq_cdf, noncentral_chisq_cdf, StatisticKind};
use pptest::linalg::kkt_solve;
use pptest::sim::{self, BetaStarSpec, HypothesisChoice, LossReport, SimReport, SimScenario};
use pptest::{glm, GlmFamily, PenaltyKind, PenaltySpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

// Tolerances, fixed here and nowhere else.
const SIZE_BAND_LINEAR: (f64, f64) = (2.5, 7.5);
const POWER_AT_04_MIN: f64 = 85.0;
const SIZE_BAND_LOGISTIC: (f64, f64) = (1.5, 8.5);
const LOSS_L2_BAND: (f64, f64) = (2.7, 3.5);
const LOSS_FP_BAND: (f64, f64) = (0.95, 1.0);
const LOSS_FN_BAND: (f64, f64) = (0.25, 0.55);
const ORACLE_REPS: usize = 200;
const ORACLE_MATCH_MIN: f64 = 0.90;
const EVENTS_MIN: f64 = 0.90;
const AGREEMENT_MIN: f64 = 0.95;
const FD_REL_TOL: f64 = 1e-5;
const KKT_FACTOR: f64 = 10.0;
const DIRECT_KKT_TOL: f64 = 1e-6;
const MC_DRAWS: usize = 1_000_000;
const MC_SE_FACTOR: f64 = 3.0;
const CENTRAL_TOL: f64 = 1e-12;
const POWER_GAP_MAX: f64 = 5.0;

const LINEAR_REPS: usize = 500;
const LOGISTIC_REPS: usize = 300;
const COMPARISON_REPS: usize = 200;

struct Outcome {
    pass: bool,
    line: String,
}

fn verdict(id: usize, title: &str, pass: bool, detail: String) -> Outcome {
    let tag = if pass { "PASS" } else { "FAIL" };
    let line = format!("[{tag}] criterion {id} {title}: {detail}");
    println!("{line}");
    Outcome { pass, line }
}

fn within(v: f64, (lo, hi): (f64, f64)) -> bool {
    v >= lo && v <= hi
}

fn testing_scenario(name: &str, family: GlmFamily, n: usize, h1: f64, hypothesis: HypothesisChoice, reps: usize) -> SimScenario {
    SimScenario {
        name: Some(name.into()),
        family,
        n,
        p: 50,
        rho: 0.5,
        beta_star: BetaStarSpec::Testing,
        h1,
        hypothesis,
        reps,
        alpha: 0.05,
        seed: 20190601,
        intercept: false,
        penalty: PenaltyKind::Scad,
    }
}

fn run(scenario: &SimScenario) -> SimReport {
    let start = Instant::now();
    let report = sim::run_replications(scenario, None).expect("simulation runs");
    eprintln!(
        "{} done in {:.1?} ({} failures)",
        scenario.name.as_deref().unwrap_or("scenario"),
        start.elapsed(),
        report.table.failures
    );
    eprint!("{}", sim::render_rejection_table(&report));
    report
}

fn lla_lrt(report: &SimReport) -> f64 {
    report.table.get(StatisticKind::Lrt, "lla").percent
}

fn criterion_1(base: &SimReport) -> Outcome {
    let mut cells = Vec::new();
    let mut pass = true;
    for est in ["lla", "oracle"] {
        for kind in StatisticKind::ALL {
            let v = base.table.get(kind, est).percent;
            pass &= within(v, SIZE_BAND_LINEAR);
            cells.push(format!("{est}-{}={v:.1}", kind.name()));
        }
    }
    verdict(
        1,
        "linear size in [2.5, 7.5]%",
        pass,
        format!("{} ({} reps)", cells.join(" "), base.table.reps_completed),
    )
}

fn criterion_2(sweep: &[(f64, &SimReport)]) -> (Outcome, f64) {
    let rates: Vec<f64> = sweep.iter().map(|(_, r)| lla_lrt(r)).collect();
    let monotone = rates.windows(2).all(|w| w[1] >= w[0]);
    let last = *rates.last().unwrap();
    let detail = sweep
        .iter()
        .zip(&rates)
        .map(|((h, _), v)| format!("h1={h}: {v:.1}%"))
        .collect::<Vec<_>>()
        .join(", ");
    let at_02 = sweep.iter().zip(&rates).find(|((h, _), _)| *h == 0.2).map(|(_, v)| *v).unwrap();
    (
        verdict(2, "LLA-LRT power monotone, >= 85% at h1=0.4", monotone && last >= POWER_AT_04_MIN, detail),
        at_02,
    )
}

fn criterion_3(report: &SimReport) -> Outcome {
    let mut cells = Vec::new();
    let mut pass = true;
    for est in ["lla", "oracle"] {
        for kind in StatisticKind::ALL {
            let v = report.table.get(kind, est).percent;
            pass &= within(v, SIZE_BAND_LOGISTIC);
            cells.push(format!("{est}-{}={v:.1}", kind.name()));
        }
    }
    verdict(
        3,
        "logistic size in [1.5, 8.5]%",
        pass,
        format!("{} ({} reps)", cells.join(" "), report.table.reps_completed),
    )
}

fn criterion_4(report: &LossReport) -> Outcome {
    let full = report.method("lla_full");
    let reduced = report.method("lla_reduced");
    let pass = within(full.l2.mean, LOSS_L2_BAND)
        && within(full.false_positives.mean, LOSS_FP_BAND)
        && within(full.false_negatives.mean, LOSS_FN_BAND);
    verdict(
        4,
        "estimator comparison (full l2 in [2.7,3.5], FP in [0.95,1], FN in [0.25,0.55])",
        pass,
        format!(
            "full l1={:.3} l2={:.3} FP={:.3} FN={:.3}; reduced l2={:.3} FP={:.3} FN={:.3} ({} reps)",
            full.l1.mean,
            full.l2.mean,
            full.false_positives.mean,
            full.false_negatives.mean,
            reduced.l2.mean,
            reduced.false_positives.mean,
            reduced.false_negatives.mean,
            report.reps_completed
        ),
    )
}

fn criterion_5(base: &SimReport) -> Outcome {
    let records = &base.records[..ORACLE_REPS.min(base.records.len())];
    let (_, summary) = sim::tabulate(records, 0);
    let pass = summary.oracle_match_rate >= ORACLE_MATCH_MIN && summary.events_rate >= EVENTS_MIN;
    verdict(
        5,
        "LLA equals oracle within 1e-6 and events hold in >= 90%",
        pass,
        format!(
            "match full={:.3} reduced={:.3} both={:.3}, events={:.3} ({} reps)",
            summary.full_oracle_match_rate,
            summary.reduced_oracle_match_rate,
            summary.oracle_match_rate,
            summary.events_rate,
            records.len()
        ),
    )
}

fn criterion_6(base: &SimReport) -> Outcome {
    let [a, b, c] = base.summary.pairwise_agreement;
    verdict(
        6,
        "pairwise decision agreement >= 95%",
        a.min(b).min(c) >= AGREEMENT_MIN,
        format!("lrt-wald={a:.3} lrt-score={b:.3} wald-score={c:.3}"),
    )
}

fn gradient_fd_error() -> f64 {
    let mut worst = 0.0_f64;
    for family in FAMILIES {
        for seed in 0..10 {
            let d = random_data(family, 20, 6, true, 100 + seed);
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let beta = DVector::from_fn(7, |_, _| 0.3 * rng.sample::<f64, _>(StandardNormal));
            let g = glm::gradient(family, &d, &beta).unwrap();
            let cols: Vec<usize> = (0..7).collect();
            let h = glm::hessian_block(family, &d, &beta, &cols).unwrap();
            let step = 1e-5;
            for j in 0..7 {
                let mut up = beta.clone();
                let mut dn = beta.clone();
                up[j] += step;
                dn[j] -= step;
                let fd = (glm::loss(family, &d, &up).unwrap() - glm::loss(family, &d, &dn).unwrap()) / (2.0 * step);
                worst = worst.max((fd - g[j]).abs() / g[j].abs().max(1.0));
                let gd = (glm::gradient(family, &d, &up).unwrap() - glm::gradient(family, &d, &dn).unwrap())
                    / (2.0 * step);
                for i in 0..7 {
                    worst = worst.max((gd[i] - h[(i, j)]).abs() / h[(i, j)].abs().max(1.0));
                }
            }
        }
    }
    worst
}

fn admm_kkt_ratio() -> f64 {
    let config = AdmmConfig::default();
    let mut worst = 0.0_f64;
    for k in 0..20u64 {
        let family = FAMILIES[(k % 3) as usize];
        let d = random_data(family, 80, 12, false, 200 + k);
        let rows = (k % 3) as usize;
        let m = vec![0, 1, 2];
        let c = DMatrix::from_fn(rows, 3, |i, j| if i == j { 1.0 } else { 0.3 * (k % 2) as f64 });
        let t = DVector::from_fn(rows, |i, _| 0.2 * i as f64);
        let weights = DVector::from_fn(9, |j, _| 0.02 * ((j + k as usize) % 5) as f64);
        let problem = ConstrainedWLassoProblem::new(family, &d, &m, c, t, weights).unwrap();
        let (fit, _, _) = admm::solve(&problem, &config, None).unwrap();
        worst = worst.max(kkt_violation(&problem, &fit) / config.tol_dual);
    }
    worst
}

fn direct_kkt_gap() -> f64 {
    let mut worst = 0.0_f64;
    for k in 0..10u64 {
        let d = random_data(GlmFamily::Gaussian, 60, 8, false, 300 + k);
        let m = vec![1, 2, 5];
        let rows = 1 + (k % 2) as usize;
        let c = DMatrix::from_fn(rows, 3, |i, j| (i + j) as f64 + 0.5);
        let t = DVector::from_fn(rows, |i, _| 0.5 - i as f64);
        let problem =
            ConstrainedWLassoProblem::new(GlmFamily::Gaussian, &d, &m, c, t.clone(), DVector::zeros(5)).unwrap();
        let (fit, _, _) = admm::solve(&problem, &AdmmConfig::default(), None).unwrap();
        let cols: Vec<usize> = (0..8).collect();
        let zero = DVector::zeros(8);
        let h = glm::hessian_block(GlmFamily::Gaussian, &d, &zero, &cols).unwrap();
        let g = glm::gradient(GlmFamily::Gaussian, &d, &zero).unwrap();
        let (direct, _) = kkt_solve(h, &g, problem.constraint_full(), &t, "direct").unwrap();
        worst = worst.max((fit.beta - direct).amax());
    }
    worst
}

fn axioms_pass() -> bool {
    let grid: Vec<f64> = (0..=10_000).map(|i| i as f64 * 1e-3).collect();
    [
        PenaltySpec::new(PenaltyKind::Scad, 1.0, 3.7).unwrap(),
        PenaltySpec::new(PenaltyKind::Mcp, 1.0, 3.0).unwrap(),
    ]
    .iter()
    .all(|p| p.verify_axioms(&grid).map(|r| r.all_pass()).unwrap_or(false))
}

/// Worst `|F̂ − F| / SE` over the check points, and the worst ν = 0 gap.
fn noncentral_checks() -> (f64, f64) {
    let points = [(2.0, 1, 0.5), (3.0, 1, 1.0), (5.0, 2, 3.0), (10.0, 3, 5.0), (20.0, 5, 10.0)];
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let mut worst_se = 0.0_f64;
    for &(x, r, nu) in &points {
        let shift = (nu / r as f64).sqrt();
        let mut below = 0usize;
        for _ in 0..MC_DRAWS {
            let s: f64 = (0..r)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    (z + shift).powi(2)
                })
                .sum();
            if s <= x {
                below += 1;
            }
        }
        let emp = below as f64 / MC_DRAWS as f64;
        let exact = noncentral_chisq_cdf(x, r, nu).unwrap();
        let se = (exact * (1.0 - exact) / MC_DRAWS as f64).sqrt();
        worst_se = worst_se.max((emp - exact).abs() / se);
    }
    let mut worst_central = 0.0_f64;
    for r in 1..=6 {
        for i in 0..=80 {
            let x = i as f64 * 0.25;
            let gap = (noncentral_chisq_cdf(x, r, 0.0).unwrap() - central_chisq_cdf(x, r).unwrap()).abs();
            worst_central = worst_central.max(gap);
        }
    }
    (worst_se, worst_central)
}

fn criterion_7() -> Outcome {
    let fd = gradient_fd_error();
    let kkt = admm_kkt_ratio();
    let direct = direct_kkt_gap();
    let axioms = axioms_pass();
    let (mc, central) = noncentral_checks();
    let checks = [
        fd < FD_REL_TOL,
        kkt <= KKT_FACTOR,
        direct <= DIRECT_KKT_TOL,
        axioms,
        mc <= MC_SE_FACTOR && central <= CENTRAL_TOL,
    ];
    verdict(
        7,
        "solver properties (a)-(e)",
        checks.iter().all(|&c| c),
        format!(
            "(a) fd rel err {fd:.2e} (b) kkt/tol {kkt:.2} (c) direct gap {direct:.2e} (d) axioms {axioms} \
             (e) mc {mc:.2} SE, nu=0 gap {central:.1e}"
        ),
    )
}

fn criterion_8(report: &SimReport) -> Outcome {
    let simulated = lla_lrt(report);
    let predicted = 100.0 * report.summary.mean_power_approx;
    verdict(
        8,
        "power approximation within 5 points at h1=0.2",
        (predicted - simulated).abs() <= POWER_GAP_MAX,
        format!("predicted {predicted:.1}%, simulated LLA-LRT {simulated:.1}%"),
    )
}

fn main() {
    let mut outcomes = Vec::new();
    outcomes.push(criterion_7());

    let base = run(&testing_scenario("linear h1=0", GlmFamily::Gaussian, 100, 0.0, HypothesisChoice::H1, LINEAR_REPS));
    outcomes.push(criterion_1(&base));
    outcomes.push(criterion_5(&base));
    outcomes.push(criterion_6(&base));

    let alternatives: Vec<(f64, SimReport)> = [0.1, 0.2, 0.4]
        .iter()
        .map(|&h| {
            let name = format!("linear h1={h}");
            (h, run(&testing_scenario(&name, GlmFamily::Gaussian, 100, h, HypothesisChoice::H1, LINEAR_REPS)))
        })
        .collect();
    let mut sweep: Vec<(f64, &SimReport)> = vec![(0.0, &base)];
    sweep.extend(alternatives.iter().map(|(h, r)| (*h, r)));
    let (c2, _) = criterion_2(&sweep);
    outcomes.push(c2);
    outcomes.push(criterion_8(&alternatives[1].1));

    let logistic = run(&testing_scenario("logistic h1=0", GlmFamily::Logistic, 300, 0.0, HypothesisChoice::H2, LOGISTIC_REPS));
    outcomes.push(criterion_3(&logistic));

    let comparison = SimScenario {
        name: Some("comparison".into()),
        beta_star: BetaStarSpec::Comparison,
        hypothesis: HypothesisChoice::Custom {
            m: vec![3],
            c: vec![vec![1.0]],
            t: vec![0.0],
        },
        reps: COMPARISON_REPS,
        seed: 20190603,
        ..testing_scenario("comparison", GlmFamily::Gaussian, 100, 0.0, HypothesisChoice::H1, COMPARISON_REPS)
    };
    let losses = sim::estimator_comparison(&comparison, None).expect("comparison runs");
    eprint!("{}", sim::render_loss_table(&losses));
    outcomes.push(criterion_4(&losses));

    outcomes.sort_by_key(|o| o.line.split_whitespace().nth(2).and_then(|s| s.parse::<usize>().ok()));
    println!("---- acceptance summary ----");
    for o in &outcomes {
        println!("{}", o.line);
    }
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!("{passed}/{} criteria passed", outcomes.len());
    if passed < outcomes.len() && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
