//! Randomized property suite over the network inequalities, the embedding construction and the
//! restricted free energy. Each property reports its trial and failure counts.

use rand::{Rng, RngCore, SeedableRng};
use serde::Serialize;

use relulab_core::bayes::{product_relu_model, restricted_free_energy, ParamBox, Prior};
use relulab_core::embedding::{
    build_optimal_params, check_compatibility, essential_error_profile, max_b_block_output,
    sample_essential_params, verify_realization, EssentialSampleConfig, InputDistSpec, SupportMode, TrueModel,
};
use relulab_core::lemmas::{
    check_contraction_with, check_layer_lipschitz, check_norm_bound, input_lipschitz_constant, NORM_REL_SLACK,
    ABS_SLACK,
};
use relulab_core::linalg::dist;
use relulab_core::network::forward;
use relulab_core::{Activation, Architecture, LabRng, Parameters};

/// Realization tolerance on the output deviation.
pub const REALIZATION_TOL: f64 = 1e-9;
/// Allowed spread `max / min` of `profile(n) sqrt(n)`.
pub const PROFILE_SPREAD: f64 = 3.0;
pub const PROFILE_NS: [u64; 4] = [100, 1_000, 10_000, 100_000];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyResult {
    pub name: String,
    pub trials: usize,
    pub failures: usize,
    pub passed: bool,
    pub warning: Option<String>,
    /// Worst observed value of the property's figure of merit.
    pub worst: f64,
}

impl PropertyResult {
    fn new(name: &str, trials: usize, failures: usize, worst: f64) -> Self {
        PropertyResult {
            name: name.to_string(),
            trials,
            failures,
            passed: failures == 0,
            warning: (trials == 0).then(|| "no trials run; pass is vacuous".to_string()),
            worst,
        }
    }

    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let mut s = format!(
            "{verdict} {}: {} trials, {} failures, worst {:.3e}",
            self.name, self.trials, self.failures, self.worst
        );
        if let Some(w) = &self.warning {
            s.push_str(&format!(" (warning: {w})"));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub results: Vec<PropertyResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> Vec<&PropertyResult> {
        self.results.iter().filter(|r| !r.passed).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuiteCounts {
    /// Random instances for each of the inequality checks.
    pub inequality_trials: usize,
    /// Random compatible architecture pairs for the realization check.
    pub realization_pairs: usize,
    /// Inputs per realization or block check.
    pub inputs: usize,
    /// Essential-set samples per `n` in the scaling profile.
    pub profile_trials: usize,
    /// Essential-set samples per support mode in the block check.
    pub block_samples: usize,
    /// Nested box pairs for the monotonicity check.
    pub monotone_pairs: usize,
    /// Random architecture pairs for the compatibility check.
    pub compat_pairs: usize,
}

impl Default for SuiteCounts {
    fn default() -> Self {
        SuiteCounts {
            inequality_trials: 10_000,
            realization_pairs: 12,
            inputs: 1_000,
            profile_trials: 20,
            block_samples: 20,
            monotone_pairs: 20,
            compat_pairs: 200,
        }
    }
}

impl SuiteCounts {
    pub fn uniform(count: usize) -> Self {
        SuiteCounts {
            inequality_trials: count,
            realization_pairs: count,
            inputs: count.max(1),
            profile_trials: count,
            block_samples: count,
            monotone_pairs: count,
            compat_pairs: count,
        }
    }
}

/// Test hooks.
#[derive(Debug, Clone, Copy)]
pub struct SuiteHooks {
    /// Scalar activation used by the contraction check.
    pub activation: fn(f64) -> f64,
}

fn relu(t: f64) -> f64 {
    t.max(0.0)
}

impl Default for SuiteHooks {
    fn default() -> Self {
        SuiteHooks { activation: relu }
    }
}

/// Generator for property number `stream` of the suite seeded by `seed`.
pub fn property_rng(seed: u64, stream: u64) -> LabRng {
    let mut r = LabRng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn random_arch<R: Rng + ?Sized>(rng: &mut R, max_depth: usize, max_width: usize) -> Architecture {
    let depth = rng.random_range(2..=max_depth);
    let widths: Vec<usize> = (0..depth).map(|_| rng.random_range(1..=max_width)).collect();
    Architecture::new(widths, Activation::Relu).expect("positive widths")
}

fn random_params<R: Rng + ?Sized>(arch: &Architecture, scale: f64, rng: &mut R) -> Parameters {
    let d = (0..arch.num_params()).map(|_| rng.random_range(-scale..scale)).collect();
    Parameters::from_flat(arch, d).expect("matching length")
}

fn random_vec<R: Rng + ?Sized>(dim: usize, scale: f64, rng: &mut R) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-scale..scale)).collect()
}

/// A compatible `(true, model)` pair with widths up to `max_width` and depth up to `max_depth`.
pub fn random_compatible_pair<R: Rng + ?Sized>(
    rng: &mut R,
    max_depth: usize,
    max_width: usize,
) -> (Architecture, Architecture) {
    let nt = rng.random_range(2..=max_depth.min(5));
    let wt: Vec<usize> = (0..nt).map(|_| rng.random_range(1..=max_width)).collect();
    let n = rng.random_range(nt..=max_depth);
    let mut wm = Vec::with_capacity(n);
    wm.push(wt[0]);
    for k in 2..n {
        let floor = if k < nt { wt[k - 1] } else { wt[nt - 2] };
        wm.push(rng.random_range(floor..=max_width.max(floor)));
    }
    wm.push(wt[nt - 1]);
    (
        Architecture::new(wt, Activation::Relu).expect("positive widths"),
        Architecture::new(wm, Activation::Relu).expect("positive widths"),
    )
}

/// Input distribution that supports the construction: bounded when a shallow truth sits in a
/// deeper model, Gaussian otherwise.
fn input_for(arch_true: &Architecture, arch_model: &Architecture) -> InputDistSpec {
    if arch_true.depth() == 2 && arch_model.depth() > 2 {
        InputDistSpec::uniform_box(-1.0, 1.0, arch_true.input_dim()).expect("valid box")
    } else {
        InputDistSpec::gaussian(arch_true.input_dim())
    }
}

fn random_true_model<R: Rng + ?Sized>(arch_true: &Architecture, input: InputDistSpec, rng: &mut R) -> TrueModel {
    let p = random_params(arch_true, 1.5, rng);
    TrueModel::new(arch_true.clone(), p, input).expect("matching dims")
}

/// `||relu(s) - relu(t)|| <= ||s - t||` (with the hooked activation).
pub fn check_contraction(trials: usize, hooks: &SuiteHooks, rng: &mut LabRng) -> PropertyResult {
    let (mut failures, mut worst) = (0, f64::NEG_INFINITY);
    for _ in 0..trials {
        let d = rng.random_range(1..=8);
        let s = random_vec(d, 10.0, rng);
        let t = random_vec(d, 10.0, rng);
        let c = check_contraction_with(hooks.activation, &s, &t).expect("equal lengths");
        worst = worst.max(c.lhs - c.rhs);
        failures += usize::from(!c.holds_exact());
    }
    PropertyResult::new("relu_contraction", trials, failures, worst)
}

/// One-layer perturbation bound.
pub fn check_lipschitz(trials: usize, rng: &mut LabRng) -> PropertyResult {
    let (mut failures, mut worst) = (0, f64::NEG_INFINITY);
    for _ in 0..trials {
        let arch = random_arch(rng, 5, 5);
        let p = random_params(&arch, 2.0, rng);
        let q = random_params(&arch, 2.0, rng);
        let x = random_vec(arch.input_dim(), 3.0, rng);
        let k = rng.random_range(2..=arch.depth());
        let c = check_layer_lipschitz(&arch, &p, &q, &x, k).expect("valid layer");
        worst = worst.max(c.lhs - c.rhs);
        failures += usize::from(!c.holds());
    }
    PropertyResult::new("layer_lipschitz", trials, failures, worst)
}

/// Norm bound on layer outputs.
pub fn check_norm_bounds(trials: usize, rng: &mut LabRng) -> PropertyResult {
    let (mut failures, mut worst) = (0, f64::NEG_INFINITY);
    for _ in 0..trials {
        let mut arch = random_arch(rng, 5, 5);
        if rng.random_bool(0.5) {
            arch = arch.with_output_activation(Activation::Linear);
        }
        let p = random_params(&arch, 2.0, rng);
        let x = random_vec(arch.input_dim(), 3.0, rng);
        let k = rng.random_range(2..=arch.depth());
        let c = check_norm_bound(&arch, &p, &x, k).expect("valid layer");
        worst = worst.max(c.lhs - c.rhs);
        failures += usize::from(!c.holds());
    }
    PropertyResult::new("norm_bound", trials, failures, worst)
}

/// `||f(x) - f(x')|| <= prod ||w(k)|| ||x - x'||`.
pub fn check_input_lipschitz(trials: usize, rng: &mut LabRng) -> PropertyResult {
    let (mut failures, mut worst) = (0, f64::NEG_INFINITY);
    for _ in 0..trials {
        let arch = random_arch(rng, 5, 5);
        let p = random_params(&arch, 2.0, rng);
        let x = random_vec(arch.input_dim(), 3.0, rng);
        let y = random_vec(arch.input_dim(), 3.0, rng);
        let lhs = dist(&forward(&arch, &p, &x).expect("shape"), &forward(&arch, &p, &y).expect("shape"));
        let rhs = input_lipschitz_constant(&arch, &p) * dist(&x, &y);
        worst = worst.max(lhs - rhs);
        failures += usize::from(lhs > rhs * (1.0 + NORM_REL_SLACK) + ABS_SLACK);
    }
    PropertyResult::new("input_lipschitz", trials, failures, worst)
}

/// Optimal parameters reproduce the truth and silence every `B` unit.
pub fn check_realization(pairs: usize, inputs: usize, rng: &mut LabRng) -> PropertyResult {
    let (mut failures, mut worst) = (0, 0.0f64);
    for _ in 0..pairs {
        let (at, am) = random_compatible_pair(rng, 6, 6);
        let t = random_true_model(&at, input_for(&at, &am), rng);
        let ok = build_optimal_params(&t, &am, rng).and_then(|p| {
            let dev = verify_realization(&t, &am, &p, inputs, rng)?;
            let b = max_b_block_output(&t, &am, &p, 2, inputs.min(100), rng)?;
            Ok((dev, b))
        });
        match ok {
            Ok((dev, b)) => {
                worst = worst.max(dev);
                failures += usize::from(dev > REALIZATION_TOL || b != 0.0);
            }
            Err(_) => failures += 1,
        }
    }
    PropertyResult::new("realization", pairs, failures, worst)
}

/// The pair used for the scaling profile: true `(2, 3, 2)` inside `(2, 4, 4, 3, 2)`, Gaussian
/// inputs.
pub fn profile_pair(seed: u64) -> (TrueModel, Architecture) {
    let at = Architecture::relu(&[2, 3, 2]).expect("valid");
    let am = Architecture::relu(&[2, 4, 4, 3, 2]).expect("valid");
    let mut rng = property_rng(seed, 99);
    (random_true_model(&at, InputDistSpec::gaussian(2), &mut rng), am)
}

/// `max_n / min_n` of `profile(n) sqrt(n)` with `profile(n)` the worst trial at `n`.
pub fn check_scaling(trials: usize, inputs: usize, seed: u64, rng: &mut LabRng) -> PropertyResult {
    if trials == 0 {
        return PropertyResult::new("essential_scaling", 0, 0, 0.0);
    }
    let (t, am) = profile_pair(seed);
    let rows = match essential_error_profile(&t, &am, &PROFILE_NS, trials, inputs, rng) {
        Ok(r) => r,
        Err(_) => return PropertyResult::new("essential_scaling", trials, 1, f64::INFINITY),
    };
    let scaled: Vec<f64> = rows.iter().map(|r| r.sup() * (r.n as f64).sqrt()).collect();
    let max = scaled.iter().copied().fold(0.0, f64::max);
    let min = scaled.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = max / min;
    PropertyResult::new("essential_scaling", trials, usize::from(!(spread <= PROFILE_SPREAD)), spread)
}

/// Essential-set members keep the `B` units silent: from layer 3 in general mode, from layer 2
/// with nonnegative or bounded support.
pub fn check_b_blocks(samples: usize, inputs: usize, rng: &mut LabRng) -> PropertyResult {
    let at = Architecture::relu(&[2, 3, 2]).expect("valid");
    let am = Architecture::relu(&[2, 4, 5, 4, 2]).expect("valid");
    let cases = [
        (InputDistSpec::gaussian(2), SupportMode::General, 3),
        (InputDistSpec::uniform_nonneg(2.0, 2).expect("valid"), SupportMode::Nonnegative, 2),
        (InputDistSpec::uniform_box(-2.0, 2.0, 2).expect("valid"), SupportMode::Bounded, 2),
    ];
    let (mut failures, mut worst) = (0, 0.0f64);
    for (input, mode, from) in cases {
        let t = random_true_model(&at, input, rng);
        let cfg = EssentialSampleConfig::new(100, mode);
        for _ in 0..samples {
            let r = sample_essential_params(&t, &am, &cfg, rng)
                .and_then(|s| max_b_block_output(&t, &am, &s.params, from, inputs, rng));
            match r {
                Ok(b) => {
                    worst = worst.max(b);
                    failures += usize::from(b != 0.0);
                }
                Err(_) => failures += 1,
            }
        }
    }
    PropertyResult::new("b_block_outputs", 3 * samples, failures, worst)
}

/// `U2 in U1 => G(U1) <= G(U2)` with shared inputs and proposals.
pub fn check_monotonicity(pairs: usize, rng: &mut LabRng) -> PropertyResult {
    let (model, truth) = product_relu_model(1.0, 1.0);
    let prior = Prior::default();
    let (mut failures, mut worst) = (0, f64::NEG_INFINITY);
    for _ in 0..pairs {
        let outer = random_box(&ParamBox::cube(2, prior.half_width).expect("valid"), rng);
        let inner = random_box(&outer, rng);
        let n = [10u64, 100, 1000][rng.random_range(0..3)];
        let seed = rng.next_u64();
        let g = |b: &ParamBox| {
            let b = b.clone();
            restricted_free_energy(
                &truth,
                &model,
                &prior,
                n,
                &move |t: &[f64]| b.contains(t),
                &outer,
                2000,
                200,
                &mut LabRng::seed_from_u64(seed),
            )
        };
        match (g(&outer), g(&inner)) {
            (Ok(g1), Ok(g2)) => {
                let gap = g1.value - g2.value;
                if gap.is_finite() {
                    worst = worst.max(gap);
                }
                failures += usize::from(!(g1.value <= g2.value));
            }
            _ => failures += 1,
        }
    }
    PropertyResult::new("restricted_monotonicity", pairs, failures, worst)
}

/// A uniformly placed sub-box of `within` whose sides are at least 20% of the parent's.
pub fn random_box<R: Rng + ?Sized>(within: &ParamBox, rng: &mut R) -> ParamBox {
    let (mut lo, mut hi) = (Vec::new(), Vec::new());
    for (&a, &b) in within.lo.iter().zip(&within.hi) {
        let len = (b - a) * rng.random_range(0.2..1.0);
        let start = a + (b - a - len) * rng.random::<f64>();
        lo.push(start);
        hi.push((start + len).min(b));
    }
    ParamBox::new(lo, hi).expect("nonempty sides")
}

/// The compatibility report agrees with whether the optimal construction succeeds.
pub fn check_compatibility_agreement(pairs: usize, inputs: usize, rng: &mut LabRng) -> PropertyResult {
    let mut failures = 0;
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let (at, mut am) = random_compatible_pair(rng, 5, 5);
        if rng.random_bool(0.5) {
            let mut w = am.widths().to_vec();
            let k = rng.random_range(0..w.len());
            w[k] = rng.random_range(1..=5);
            am = Architecture::new(w, Activation::Relu).expect("positive widths");
        }
        let report = check_compatibility(&at, &am);
        let input = InputDistSpec::uniform_box(-1.0, 1.0, at.input_dim()).expect("valid");
        let t = random_true_model(&at, input, rng);
        let built = if report.satisfied {
            build_optimal_params(&t, &am, rng).and_then(|p| verify_realization(&t, &am, &p, inputs.min(100), rng))
        } else {
            build_optimal_params(&t, &am, rng).map(|_| f64::INFINITY)
        };
        match (report.satisfied, built) {
            (true, Ok(dev)) => {
                worst = worst.max(dev);
                failures += usize::from(dev > REALIZATION_TOL);
            }
            (false, Err(_)) => {}
            _ => failures += 1,
        }
    }
    PropertyResult::new("compatibility", pairs, failures, worst)
}

/// Run every property with its own generator stream.
pub fn run_lemma_suite(seed: u64, counts: &SuiteCounts, hooks: &SuiteHooks) -> SuiteReport {
    let results = vec![
        check_contraction(counts.inequality_trials, hooks, &mut property_rng(seed, 1)),
        check_lipschitz(counts.inequality_trials, &mut property_rng(seed, 2)),
        check_norm_bounds(counts.inequality_trials, &mut property_rng(seed, 3)),
        check_input_lipschitz(counts.inequality_trials, &mut property_rng(seed, 4)),
        check_realization(counts.realization_pairs, counts.inputs, &mut property_rng(seed, 5)),
        check_scaling(counts.profile_trials, counts.inputs.min(200), seed, &mut property_rng(seed, 6)),
        check_b_blocks(counts.block_samples, counts.inputs.min(200), &mut property_rng(seed, 7)),
        check_monotonicity(counts.monotone_pairs, &mut property_rng(seed, 8)),
        check_compatibility_agreement(counts.compat_pairs, counts.inputs, &mut property_rng(seed, 9)),
    ];
    SuiteReport { seed, results }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let counts = SuiteCounts {
            inequality_trials: 200,
            realization_pairs: 5,
            inputs: 100,
            profile_trials: 3,
            block_samples: 3,
            monotone_pairs: 5,
            compat_pairs: 30,
        };
        let r = run_lemma_suite(1, &counts, &SuiteHooks::default());
        for p in &r.results {
            assert!(p.passed, "{}", p.line());
        }
    }

    #[test]
    fn doubled_relu_fails_contraction() {
        let hooks = SuiteHooks {
            activation: |t| 2.0 * t.max(0.0),
        };
        let r = check_contraction(500, &hooks, &mut property_rng(0, 1));
        assert!(!r.passed && r.failures > 0);
    }

    #[test]
    fn zero_trials_is_a_flagged_vacuous_pass() {
        let r = run_lemma_suite(0, &SuiteCounts::uniform(0), &SuiteHooks::default());
        assert!(r.passed());
        assert!(r.results.iter().any(|p| p.warning.is_some()));
        assert!(r.results.iter().filter(|p| p.trials == 0).all(|p| p.warning.is_some()));
    }

    #[test]
    fn compatible_pairs_are_compatible() {
        let mut rng = property_rng(3, 0);
        for _ in 0..500 {
            let (at, am) = random_compatible_pair(&mut rng, 6, 6);
            assert!(check_compatibility(&at, &am).satisfied, "{at:?} {am:?}");
            assert!(am.depth() <= 6 && am.max_width() <= 6);
        }
    }

    #[test]
    fn same_seed_same_report() {
        let c = SuiteCounts::uniform(3);
        assert_eq!(run_lemma_suite(4, &c, &SuiteHooks::default()), run_lemma_suite(4, &c, &SuiteHooks::default()));
    }
}
