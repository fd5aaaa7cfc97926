//! Upper bounds on the free energy through restricted integrals
//! `G(U) = -log integral_U exp(-n K) phi`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::likelihood::{entropy_true, kl_on_inputs, true_outputs};
use super::model::{ModelSpace, Prior};
use super::stats::log_sum_exp;
use crate::embedding::{sample_essential_params, CoordinateCounts, EssentialSampleConfig, TrueModel};
use crate::error::{LabError, Result};
use crate::network::{Architecture, Evaluator};

/// Default number of fresh inputs used to estimate `K`.
pub const DEFAULT_KL_INPUTS: usize = 10_000;

/// Axis-aligned box `[lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ParamBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(LabError::LengthMismatch {
                left: lo.len(),
                right: hi.len(),
            });
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(LabError::InvalidArgument("box needs finite lo < hi on every axis".into()));
        }
        Ok(ParamBox { lo, hi })
    }

    /// `[-h, h]^dim`.
    pub fn cube(dim: usize, half_width: f64) -> Result<Self> {
        Self::new(vec![-half_width; dim], vec![half_width; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| a <= v && v <= b)
    }

    /// Whether `other` lies inside `self`.
    pub fn contains_box(&self, other: &ParamBox) -> bool {
        self.dim() == other.dim()
            && self.lo.iter().zip(&other.lo).all(|(a, b)| a <= b)
            && self.hi.iter().zip(&other.hi).all(|(a, b)| a >= b)
    }

    pub fn log_volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a).ln()).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&a, &b)| rng.random_range(a..b))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriorMassBound {
    /// `nS - log[Vol(W_E) mean(exp(-nK) phi)]`.
    pub value: f64,
    /// `nS`.
    pub n_entropy: f64,
    pub log_volume: f64,
    /// `log mean(exp(-nK) phi)` over the region samples.
    pub log_mean: f64,
    pub counts: CoordinateCounts,
}

impl PriorMassBound {
    /// `value - nS`.
    pub fn excess(&self) -> f64 {
        self.value - self.n_entropy
    }
}

fn draw_inputs<R: Rng + ?Sized>(true_model: &TrueModel, num_inputs: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    if num_inputs == 0 {
        return Err(LabError::InvalidArgument("num_inputs must be at least 1".into()));
    }
    Ok((0..num_inputs).map(|_| true_model.input_dist().sample(rng)).collect())
}

/// Monte-Carlo right-hand side of `E[F_n] <= nS - log integral_W exp(-nK) phi` with `W` the
/// essential set at sample size `n` (which overrides `config.n`).
///
/// `K` is evaluated on one shared set of `num_inputs` inputs drawn before the region samples.
#[allow(clippy::too_many_arguments)]
pub fn prior_mass_upper_bound<R: Rng + ?Sized>(
    true_model: &TrueModel,
    arch_model: &Architecture,
    prior: &Prior,
    n: u64,
    config: &EssentialSampleConfig,
    num_region_samples: usize,
    num_inputs: usize,
    rng: &mut R,
) -> Result<PriorMassBound> {
    if num_region_samples == 0 {
        return Err(LabError::InvalidArgument("num_region_samples must be at least 1".into()));
    }
    let cfg = EssentialSampleConfig { n, ..*config };
    cfg.validate()?;
    let inputs = draw_inputs(true_model, num_inputs, rng)?;
    let targets = true_outputs(true_model, &inputs);
    let mut ev = Evaluator::new(arch_model);
    let nf = n as f64;
    let mut terms = Vec::with_capacity(num_region_samples);
    let mut log_volume = 0.0;
    let mut counts = CoordinateCounts::default();
    for _ in 0..num_region_samples {
        let s = sample_essential_params(true_model, arch_model, &cfg, rng)?;
        log_volume = s.log_volume;
        counts = s.counts;
        let log_phi = prior.log_density(s.params.as_flat());
        let k = kl_on_inputs(arch_model, s.params.as_flat(), &inputs, &targets, &mut ev);
        terms.push(log_phi - nf * k);
    }
    let log_mean = log_sum_exp(&terms) - (num_region_samples as f64).ln();
    let n_entropy = nf * entropy_true(true_model);
    Ok(PriorMassBound {
        value: n_entropy - log_volume - log_mean,
        n_entropy,
        log_volume,
        log_mean,
        counts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RestrictedEstimate {
    /// `G(U)` in nats; `+inf` when no proposal landed in the region.
    pub value: f64,
    /// Proposals inside both the region and the prior support.
    pub accepted: usize,
    pub infinite: bool,
}

/// Monte-Carlo `G(U) = -log integral_U exp(-n K) phi` by uniform proposals over `proposal_box`.
///
/// Inputs for `K` are drawn first and all `num_samples` proposals are drawn regardless of the
/// region, so two calls with equal seeds see identical inputs and proposals and the estimate is
/// exactly monotone under region inclusion.
#[allow(clippy::too_many_arguments)]
pub fn restricted_free_energy<R: Rng + ?Sized>(
    true_model: &TrueModel,
    model: &ModelSpace,
    prior: &Prior,
    n: u64,
    region: &dyn Fn(&[f64]) -> bool,
    proposal_box: &ParamBox,
    num_samples: usize,
    num_inputs: usize,
    rng: &mut R,
) -> Result<RestrictedEstimate> {
    if proposal_box.dim() != model.dim() {
        return Err(LabError::LengthMismatch {
            left: model.dim(),
            right: proposal_box.dim(),
        });
    }
    if num_samples == 0 {
        return Err(LabError::InvalidArgument("num_samples must be at least 1".into()));
    }
    let inputs = draw_inputs(true_model, num_inputs, rng)?;
    let targets = true_outputs(true_model, &inputs);
    let mut ev = Evaluator::new(model.arch());
    let mut full = model.base().as_flat().to_vec();
    let nf = n as f64;
    let mut terms = Vec::new();
    for _ in 0..num_samples {
        let theta = proposal_box.sample(rng);
        if !region(&theta) || !prior.contains(&theta) {
            continue;
        }
        model.fill(&theta, &mut full);
        let k = if n == 0 {
            0.0
        } else {
            kl_on_inputs(model.arch(), &full, &inputs, &targets, &mut ev)
        };
        terms.push(prior.log_norm(theta.len()) - nf * k);
    }
    let accepted = terms.len();
    if accepted == 0 {
        return Ok(RestrictedEstimate {
            value: f64::INFINITY,
            accepted,
            infinite: true,
        });
    }
    let log_integral = proposal_box.log_volume() + log_sum_exp(&terms) - (num_samples as f64).ln();
    Ok(RestrictedEstimate {
        value: -log_integral,
        accepted,
        infinite: false,
    })
}
