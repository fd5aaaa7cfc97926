//! Acceptance criteria. Each test writes one `PASS`/`FAIL` line straight to stdout (bypassing
//! the harness capture) and then asserts.

use std::io::Write;
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use relulab::bound::{bound_curve, BoundSettings, SLOPE_REL_TOL};
use relulab::config::ExperimentConfig;
use relulab::fit::{fit_lambda, SlopeFit};
use relulab::oracle::{validate_oracle, CONJUGATE_TOL, QUADRATURE_TOL};
use relulab::suite::{
    check_contraction, check_lipschitz, check_monotonicity, check_norm_bounds, check_realization, check_scaling,
    property_rng, PropertyResult, SuiteHooks, PROFILE_SPREAD, REALIZATION_TOL,
};
use relulab::sweep::{run_cell, run_sweep, SweepRow};
use relulab_core::bayes::{
    entropy_true, estimate_gen_error, Dataset, generate_dataset, log_predictive_on, product_relu_model, quadrature_free_energy,
    quadrature_posterior, GridSpec, McmcSettings, Prior, TemperatureLadder,
};
use relulab_core::seeded_rng;

const SEED: u64 = 20_261_016;

fn report(k: usize, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "[acceptance] criterion {k}: {verdict} | {detail}");
    let _ = out.flush();
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

// Criterion 1

#[derive(Debug, Clone, PartialEq)]
struct C1 {
    results: Vec<PropertyResult>,
    elapsed: Duration,
}

fn compute_c1() -> C1 {
    let t = Instant::now();
    let results = vec![
        check_contraction(10_000, &SuiteHooks::default(), &mut property_rng(SEED, 1)),
        check_lipschitz(10_000, &mut property_rng(SEED, 2)),
        check_norm_bounds(10_000, &mut property_rng(SEED, 3)),
    ];
    C1 {
        results,
        elapsed: t.elapsed(),
    }
}

fn c1() -> &'static C1 {
    static C: OnceLock<C1> = OnceLock::new();
    C.get_or_init(compute_c1)
}

#[test]
fn criterion_1_lemma_inequalities() {
    let c = c1();
    let failures: usize = c.results.iter().map(|r| r.failures).sum();
    let trials_ok = c.results.iter().all(|r| r.trials == 10_000);
    let pass = failures == 0 && trials_ok && c.elapsed < Duration::from_secs(60);
    let detail: Vec<String> = c.results.iter().map(|r| format!("{} {}/{}", r.name, r.failures, r.trials)).collect();
    report(1, pass, &format!("failures {} ({}) in {:.1}s", failures, detail.join(", "), secs(c.elapsed)));
    assert!(pass);
}

// Criterion 2

fn compute_c2() -> (PropertyResult, Duration) {
    let t = Instant::now();
    let r = check_realization(12, 1_000, &mut property_rng(SEED, 5));
    (r, t.elapsed())
}

fn c2() -> &'static (PropertyResult, Duration) {
    static C: OnceLock<(PropertyResult, Duration)> = OnceLock::new();
    C.get_or_init(compute_c2)
}

#[test]
fn criterion_2_exact_realization() {
    let (r, el) = c2();
    let pass = r.passed && r.trials >= 10 && r.worst <= REALIZATION_TOL && *el < Duration::from_secs(60);
    report(
        2,
        pass,
        &format!("{} pairs, {} failures, max deviation {:.2e} (tol {REALIZATION_TOL:e}) in {:.1}s", r.trials, r.failures, r.worst, secs(*el)),
    );
    assert!(pass);
}

// Criterion 3

fn compute_c3() -> (PropertyResult, Duration) {
    let t = Instant::now();
    let r = check_scaling(20, 200, SEED, &mut property_rng(SEED, 6));
    (r, t.elapsed())
}

fn c3() -> &'static (PropertyResult, Duration) {
    static C: OnceLock<(PropertyResult, Duration)> = OnceLock::new();
    C.get_or_init(compute_c3)
}

#[test]
fn criterion_3_essential_set_scaling() {
    let (r, el) = c3();
    let pass = r.passed && *el < Duration::from_secs(120);
    report(
        3,
        pass,
        &format!("max/min of profile(n)*sqrt(n) over n=1e2..1e5 = {:.3} (limit {PROFILE_SPREAD}) in {:.1}s", r.worst, secs(*el)),
    );
    assert!(pass);
}

// Criterion 4

#[derive(Debug, Clone, PartialEq)]
struct C4 {
    conjugate_gap: f64,
    quadrature_gap: f64,
    elapsed: Duration,
}

fn compute_c4() -> C4 {
    let t = Instant::now();
    let ladder = TemperatureLadder::default_schedule(McmcSettings::default());
    let at50 = validate_oracle(50, SEED, &ladder).unwrap();
    let at20 = validate_oracle(20, SEED, &ladder).unwrap();
    C4 {
        conjugate_gap: at50.conjugate_gap,
        quadrature_gap: at20.quadrature_gap,
        elapsed: t.elapsed(),
    }
}

fn c4() -> &'static C4 {
    static C: OnceLock<C4> = OnceLock::new();
    C.get_or_init(compute_c4)
}

#[test]
fn criterion_4_estimator_validity() {
    let c = c4();
    let pass = c.conjugate_gap <= CONJUGATE_TOL
        && c.quadrature_gap <= QUADRATURE_TOL
        && c.elapsed < Duration::from_secs(300);
    report(
        4,
        pass,
        &format!(
            "|TI - conjugate| = {:.4} at n=50 (tol {CONJUGATE_TOL}), |TI - quadrature| = {:.4} at n=20 (tol {QUADRATURE_TOL}) in {:.1}s",
            c.conjugate_gap,
            c.quadrature_gap,
            secs(c.elapsed)
        ),
    );
    assert!(pass);
}

// Criterion 5

#[derive(Debug, Clone, PartialEq)]
struct C5 {
    max_predictive_error: f64,
    increment_mean: f64,
    increment_se: f64,
    gen_mean: f64,
    gen_se: f64,
    refinement_delta: f64,
    elapsed: Duration,
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn compute_c5() -> C5 {
    let t = Instant::now();
    let (model, truth) = product_relu_model(1.0, 1.0);
    let prior = Prior::default();
    let grid = GridSpec { points_per_axis: 200 };
    let s = entropy_true(&truth);
    let mut rng = seeded_rng(SEED);
    let (mut worst, mut diffs, mut gens) = (0.0f64, Vec::new(), Vec::new());
    for _ in 0..200 {
        let all = generate_dataset(&truth, 11, &mut rng).unwrap();
        let d = all.prefix(10);
        let f10 = quadrature_free_energy(&model, &d, &prior, &grid).unwrap().value;
        let f11 = quadrature_free_energy(&model, &all, &prior, &grid).unwrap().value;
        let post = quadrature_posterior(&model, &d, &prior, &grid).unwrap();
        let tail = Dataset::from_pairs(&[(all.input(10).to_vec(), all.output(10).to_vec())]).unwrap();
        let log_pred = log_predictive_on(&model, &post, &tail).unwrap()[0];
        worst = worst.max((f11 - f10 + log_pred).abs());
        let g = estimate_gen_error(&model, &post, &truth, 100, &mut rng).unwrap().value;
        gens.push(g);
        diffs.push(g - (f11 - f10 - s));
    }
    let (increment_mean, increment_se) = mean_se(&diffs);
    let (gen_mean, gen_se) = mean_se(&gens);
    let d20 = generate_dataset(&truth, 20, &mut seeded_rng(SEED + 1)).unwrap();
    let refinement_delta = quadrature_free_energy(&model, &d20, &prior, &GridSpec { points_per_axis: 400 })
        .unwrap()
        .grid_refinement_delta
        .unwrap();
    C5 {
        max_predictive_error: worst,
        increment_mean,
        increment_se,
        gen_mean,
        gen_se,
        refinement_delta,
        elapsed: t.elapsed(),
    }
}

fn c5() -> &'static C5 {
    static C: OnceLock<C5> = OnceLock::new();
    C.get_or_init(compute_c5)
}

#[test]
fn criterion_5_quadrature_identities() {
    let c = c5();
    let pass = c.max_predictive_error <= 1e-6
        && c.increment_mean.abs() <= 3.0 * c.increment_se
        && c.gen_mean >= -3.0 * c.gen_se
        && c.refinement_delta < 1e-3
        && c.elapsed < Duration::from_secs(600);
    report(
        5,
        pass,
        &format!(
            "predictive identity max error {:.2e} (tol 1e-6); E[G_n] - (E[F_11] - E[F_10] - S) = {:.4} (SE {:.4}, limit 3 SE) over 200 reps; E[G_n] = {:.4}; grid 200->400 delta {:.2e} in {:.1}s",
            c.max_predictive_error,
            c.increment_mean,
            c.increment_se,
            c.gen_mean,
            c.refinement_delta,
            secs(c.elapsed)
        ),
    );
    assert!(pass);
}

// Criterion 6

const C6_CONFIGS: [&str; 3] = ["overparam_bounded.json", "true_model_bounded.json", "overparam_general.json"];

fn load_config(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name);
    ExperimentConfig::load(&path).unwrap()
}

#[derive(Debug, Clone, PartialEq)]
struct C6 {
    runs: Vec<(String, Vec<SweepRow>, Vec<u8>, SlopeFit)>,
    elapsed: Duration,
}

fn c6() -> &'static C6 {
    static C: OnceLock<C6> = OnceLock::new();
    C.get_or_init(|| {
        let t = Instant::now();
        let runs = C6_CONFIGS
            .iter()
            .map(|name| {
                let cfg = load_config(name);
                let mut csv = Vec::new();
                let rows = run_sweep(&cfg, &mut csv).unwrap();
                let fit = fit_lambda(&rows, cfg.lambda_bound().unwrap()).unwrap();
                (name.to_string(), rows, csv, fit)
            })
            .collect();
        C6 {
            runs,
            elapsed: t.elapsed(),
        }
    })
}

#[test]
fn criterion_6_free_energy_slope() {
    let c = c6();
    let mut pass = c.elapsed < Duration::from_secs(1800);
    let mut parts = Vec::new();
    for (name, rows, _, fit) in &c.runs {
        let ok = fit.satisfied && rows.len() == 32;
        pass &= ok;
        parts.push(format!(
            "{name}: lambda_hat {:.3} <= {} + {:.3} {}",
            fit.lambda_hat,
            fit.lambda_bound,
            fit.margin,
            if ok { "ok" } else { "VIOLATED" }
        ));
    }
    report(6, pass, &format!("{} in {:.0}s", parts.join("; "), secs(c.elapsed)));
    assert!(pass);
}

// Criterion 7

#[derive(Debug, Clone, PartialEq)]
struct C7 {
    monotone: PropertyResult,
    slope: f64,
    lambda: f64,
    relative_error: f64,
    elapsed: Duration,
}

fn compute_c7() -> C7 {
    let t = Instant::now();
    let monotone = check_monotonicity(20, &mut property_rng(SEED, 8));
    let cfg = load_config("overparam_bounded.json");
    let curve = bound_curve(
        &cfg.true_model,
        &cfg.model_arch,
        &cfg.prior(),
        cfg.support_mode(),
        &[100, 1_000, 10_000],
        &BoundSettings {
            region_samples: 200,
            num_inputs: 2_000,
            seed: SEED,
        },
    )
    .unwrap();
    C7 {
        monotone,
        slope: curve.slope,
        lambda: curve.lambda_bound,
        relative_error: curve.relative_error,
        elapsed: t.elapsed(),
    }
}

fn c7() -> &'static C7 {
    static C: OnceLock<C7> = OnceLock::new();
    C.get_or_init(compute_c7)
}

#[test]
fn criterion_7_monotonicity_and_bound_slope() {
    let c = c7();
    let pass = c.monotone.passed
        && c.monotone.trials == 20
        && c.relative_error <= SLOPE_REL_TOL
        && c.elapsed < Duration::from_secs(300);
    report(
        7,
        pass,
        &format!(
            "{} violations in {} nested pairs; bound slope {:.3} vs lambda {} (rel. error {:.3}, tol {SLOPE_REL_TOL}) in {:.1}s",
            c.monotone.failures,
            c.monotone.trials,
            c.slope,
            c.lambda,
            c.relative_error,
            secs(c.elapsed)
        ),
    );
    assert!(pass);
}

// Criterion 8

#[test]
fn criterion_8_reproducibility() {
    let mut same = Vec::new();
    same.push(("1", c1().results == compute_c1().results));
    same.push(("2", c2().0 == compute_c2().0));
    same.push(("3", c3().0 == compute_c3().0));
    let (a, b) = (c4(), compute_c4());
    same.push(("4", a.conjugate_gap == b.conjugate_gap && a.quadrature_gap == b.quadrature_gap));
    let (a, b) = (c5(), compute_c5());
    same.push((
        "5",
        a.max_predictive_error == b.max_predictive_error
            && a.increment_mean == b.increment_mean
            && a.refinement_delta == b.refinement_delta,
    ));
    // the full sweep is rerun once for its CSV bytes; each variant also replays its first
    // replication at every n in isolation
    let first = c6();
    let mut ok6 = true;
    for (name, rows, csv, _) in &first.runs {
        let cfg = load_config(name);
        for &n in &cfg.n_grid {
            let row = run_cell(&cfg, n, 0).unwrap();
            ok6 &= rows.iter().any(|r| r == &row);
        }
        if name == C6_CONFIGS[1] {
            let mut again = Vec::new();
            run_sweep(&cfg, &mut again).unwrap();
            ok6 &= &again == csv;
        }
    }
    same.push(("6", ok6));
    let (a, b) = (c7(), compute_c7());
    same.push(("7", a.monotone == b.monotone && a.slope == b.slope));
    let pass = same.iter().all(|(_, s)| *s);
    let detail: Vec<String> = same
        .iter()
        .map(|(k, s)| format!("{k}:{}", if *s { "identical" } else { "DIFFERENT" }))
        .collect();
    report(8, pass, &detail.join(" "));
    assert!(pass);
}
