use rand::Rng;
use serde::Serialize;

use super::essential::{sample_essential_params, EssentialSampleConfig, DEFAULT_DELTA};
use super::layout::BlockLayout;
use super::true_model::TrueModel;
use crate::error::{LabError, Result};
use crate::linalg::{dist, norm};
use crate::network::{all_layer_outputs, Architecture, Evaluator, Parameters};

/// Largest output deviation `||f(N)(w, b, x) - f*(x)||` over `num_inputs` draws from `q(x)`.
pub fn verify_realization<R: Rng + ?Sized>(
    true_model: &TrueModel,
    arch_model: &Architecture,
    params: &Parameters,
    num_inputs: usize,
    rng: &mut R,
) -> Result<f64> {
    params.check(arch_model)?;
    let mut ev_model = Evaluator::new(arch_model);
    let mut ev_true = Evaluator::new(true_model.arch());
    let mut x = vec![0.0; arch_model.input_dim()];
    let mut worst: f64 = 0.0;
    for _ in 0..num_inputs {
        true_model.input_dist().sample_into(rng, &mut x);
        let y = ev_model.eval(arch_model, params.as_flat(), &x);
        let ystar = ev_true.eval(true_model.arch(), true_model.params().as_flat(), &x);
        worst = worst.max(dist(y, ystar));
    }
    Ok(worst)
}

/// Largest `|f_B(k)|` entry over hidden layers `from_layer..=N-1` and `num_inputs` draws.
pub fn max_b_block_output<R: Rng + ?Sized>(
    true_model: &TrueModel,
    arch_model: &Architecture,
    params: &Parameters,
    from_layer: usize,
    num_inputs: usize,
    rng: &mut R,
) -> Result<f64> {
    let layout = BlockLayout::new(true_model.arch(), arch_model);
    let mut worst: f64 = 0.0;
    for _ in 0..num_inputs {
        let x = true_model.input_dist().sample(rng);
        let outs = all_layer_outputs(arch_model, params, &x)?;
        for k in from_layer.max(2)..arch_model.depth() {
            let a = layout.a_dim(k);
            for v in &outs[k - 1][a..] {
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(worst)
}

/// One row of [`essential_error_profile`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileRow {
    pub n: u64,
    /// Per trial: `max_x ||f(N)(w, b, x) - f*(x)|| / (||x|| + 1)`.
    pub per_trial: Vec<f64>,
    /// Per trial: the same quantity for the `A` block of layer `N* - 1`.
    pub hidden_per_trial: Vec<f64>,
}

impl ProfileRow {
    pub fn sup(&self) -> f64 {
        self.per_trial.iter().copied().fold(0.0, f64::max)
    }

    pub fn hidden_sup(&self) -> f64 {
        self.hidden_per_trial.iter().copied().fold(0.0, f64::max)
    }

    pub fn median(&self) -> f64 {
        median(&self.per_trial)
    }
}

fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

/// Worst normalized output deviation of essential-set members, for each `n` in `n_list`.
///
/// The support mode comes from the true model's input distribution and `delta` is the
/// default.
pub fn essential_error_profile<R: Rng + ?Sized>(
    true_model: &TrueModel,
    arch_model: &Architecture,
    n_list: &[u64],
    trials: usize,
    num_inputs: usize,
    rng: &mut R,
) -> Result<Vec<ProfileRow>> {
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LabError::InvalidArgument("n_list must be strictly ascending".into()));
    }
    if n_list.iter().any(|&n| n < 4) {
        return Err(LabError::InvalidArgument("every n must be at least 4".into()));
    }
    let layout = BlockLayout::new(true_model.arch(), arch_model);
    let hidden = true_model.arch().depth() - 1;
    let support = true_model.input_dist().support_mode();
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let cfg = EssentialSampleConfig {
            n,
            delta: DEFAULT_DELTA,
            support_mode: support,
            bounded_bias_floor: None,
        };
        let mut per_trial = Vec::with_capacity(trials);
        let mut hidden_per_trial = Vec::with_capacity(trials);
        for _ in 0..trials {
            let s = sample_essential_params(true_model, arch_model, &cfg, rng)?;
            let (mut worst, mut worst_hidden) = (0.0f64, 0.0f64);
            for _ in 0..num_inputs {
                let x = true_model.input_dist().sample(rng);
                let scale = norm(&x) + 1.0;
                let model_outs = all_layer_outputs(arch_model, &s.params, &x)?;
                let true_outs = all_layer_outputs(true_model.arch(), true_model.params(), &x)?;
                let out_dev = dist(&model_outs[arch_model.depth() - 1], &true_outs[hidden]);
                let a = layout.a_dim(hidden);
                let hid_dev = dist(&model_outs[hidden - 1][..a], &true_outs[hidden - 1]);
                worst = worst.max(out_dev / scale);
                worst_hidden = worst_hidden.max(hid_dev / scale);
            }
            per_trial.push(worst);
            hidden_per_trial.push(worst_hidden);
        }
        rows.push(ProfileRow {
            n,
            per_trial,
            hidden_per_trial,
        });
    }
    Ok(rows)
}
