//! Component-wise adaptive random-walk Metropolis for tempered posteriors
//! `phi(theta) exp(beta * log L(theta))`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::likelihood::LikelihoodEvaluator;
use super::model::{ModelSpace, Prior};
use crate::error::{LabError, Result};

/// Per-coordinate acceptance rate the proposal scales are tuned toward.
pub const TARGET_ACCEPTANCE: f64 = 0.234;
const MIN_SCALE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McmcSettings {
    /// Sweeps used for scale adaptation and discarded.
    pub burn_in: usize,
    /// Sweeps after burn-in.
    pub steps: usize,
    /// Keep every `thin`-th post-burn-in sweep.
    pub thin: usize,
    /// Initial proposal standard deviation, relative to the prior half-width.
    pub init_scale: f64,
    /// Sweeps between scale updates during burn-in.
    pub adapt_interval: usize,
    /// Batches for the batch-means error estimate.
    pub batches: usize,
}

impl Default for McmcSettings {
    fn default() -> Self {
        McmcSettings {
            burn_in: 500,
            steps: 2000,
            thin: 1,
            init_scale: 0.1,
            adapt_interval: 25,
            batches: 20,
        }
    }
}

impl McmcSettings {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.thin == 0 || self.adapt_interval == 0 || self.batches == 0 {
            return Err(LabError::InvalidArgument(
                "steps, thin, adapt_interval and batches must be positive".into(),
            ));
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return Err(LabError::InvalidArgument("init_scale must be positive".into()));
        }
        Ok(())
    }
}

/// Output of one chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainResult {
    pub beta: f64,
    /// Retained states (free coordinates).
    pub samples: Vec<Vec<f64>>,
    /// `log L` at each retained state.
    pub log_likelihoods: Vec<f64>,
    /// Post-burn-in acceptance rate over all coordinate proposals.
    pub acceptance_rate: f64,
    pub final_state: Vec<f64>,
    pub scales: Vec<f64>,
}

/// Mutable chain state; exposed inside the crate so the tempering driver can run rungs in
/// lockstep and exchange states.
#[derive(Debug, Clone)]
pub(crate) struct Chain<'a> {
    pub beta: f64,
    pub theta: Vec<f64>,
    log_lik: Option<f64>,
    pub scales: Vec<f64>,
    window_acc: Vec<usize>,
    window_prop: usize,
    pub accepted: usize,
    pub proposed: usize,
    prior: Prior,
    lik: LikelihoodEvaluator<'a>,
}

impl<'a> Chain<'a> {
    pub fn new(
        model: &'a ModelSpace,
        dataset: &'a Dataset,
        prior: Prior,
        beta: f64,
        theta: Vec<f64>,
        scales: Vec<f64>,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(LabError::InvalidArgument(format!("beta = {beta} outside [0, 1]")));
        }
        if theta.len() != model.dim() || scales.len() != model.dim() {
            return Err(LabError::LengthMismatch {
                left: model.dim(),
                right: theta.len(),
            });
        }
        let mut lik = LikelihoodEvaluator::new(model, dataset)?;
        let ll = lik.log_likelihood(&theta);
        if !prior.contains(&theta) || !ll.is_finite() {
            return Err(LabError::NonFinite("log-density at chain initialization".into()));
        }
        Ok(Chain {
            beta,
            window_acc: vec![0; theta.len()],
            window_prop: 0,
            theta,
            log_lik: Some(ll),
            scales,
            accepted: 0,
            proposed: 0,
            prior,
            lik,
        })
    }

    pub fn log_lik(&mut self) -> f64 {
        match self.log_lik {
            Some(v) => v,
            None => {
                let v = self.lik.log_likelihood(&self.theta);
                self.log_lik = Some(v);
                v
            }
        }
    }

    /// Replace the state (used by replica exchange).
    pub fn set_state(&mut self, theta: Vec<f64>, log_lik: f64) {
        self.theta = theta;
        self.log_lik = Some(log_lik);
    }

    /// One pass over all coordinates.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R, count: bool) {
        let b = self.prior.half_width;
        for i in 0..self.theta.len() {
            let old = self.theta[i];
            let z: f64 = rng.sample(StandardNormal);
            let prop = old + self.scales[i] * z;
            let mut ok = false;
            if prop.abs() <= b {
                if self.beta == 0.0 {
                    self.theta[i] = prop;
                    self.log_lik = None;
                    ok = true;
                } else {
                    let cur = self.log_lik();
                    self.theta[i] = prop;
                    let new = self.lik.log_likelihood(&self.theta);
                    let log_u: f64 = rng.random::<f64>().ln();
                    if new.is_finite() && log_u < self.beta * (new - cur) {
                        self.log_lik = Some(new);
                        ok = true;
                    } else {
                        self.theta[i] = old;
                    }
                }
            }
            if ok {
                self.window_acc[i] += 1;
            }
            if count {
                self.proposed += 1;
                self.accepted += usize::from(ok);
            }
        }
        self.window_prop += 1;
    }

    /// Robbins-Monro style update of each coordinate's scale from its recent acceptance rate.
    pub fn adapt(&mut self) {
        if self.window_prop == 0 {
            return;
        }
        let cap = 2.0 * self.prior.half_width;
        for (s, acc) in self.scales.iter_mut().zip(self.window_acc.iter_mut()) {
            let rate = *acc as f64 / self.window_prop as f64;
            *s = (*s * (rate - TARGET_ACCEPTANCE).exp()).clamp(MIN_SCALE, cap);
            *acc = 0;
        }
        self.window_prop = 0;
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            1.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

pub(crate) fn initial_scales(prior: &Prior, dim: usize, settings: &McmcSettings) -> Vec<f64> {
    vec![settings.init_scale * prior.half_width; dim]
}

/// Run a chain from `init` (or a prior draw) and collect post-burn-in samples.
pub(crate) fn run_chain<R: Rng + ?Sized>(
    model: &ModelSpace,
    dataset: &Dataset,
    prior: &Prior,
    beta: f64,
    settings: &McmcSettings,
    init: Option<(Vec<f64>, Vec<f64>)>,
    rng: &mut R,
) -> Result<ChainResult> {
    settings.validate()?;
    let (theta, scales) = match init {
        Some(s) => s,
        None => (
            prior.sample(model.dim(), rng),
            initial_scales(prior, model.dim(), settings),
        ),
    };
    let mut chain = Chain::new(model, dataset, *prior, beta, theta, scales)?;
    for s in 0..settings.burn_in {
        chain.sweep(rng, false);
        if (s + 1) % settings.adapt_interval == 0 {
            chain.adapt();
        }
    }
    let mut samples = Vec::with_capacity(settings.steps / settings.thin);
    let mut lls = Vec::with_capacity(settings.steps / settings.thin);
    for s in 0..settings.steps {
        chain.sweep(rng, true);
        if (s + 1) % settings.thin == 0 {
            lls.push(chain.log_lik());
            samples.push(chain.theta.clone());
        }
    }
    Ok(ChainResult {
        beta,
        samples,
        log_likelihoods: lls,
        acceptance_rate: chain.acceptance_rate(),
        final_state: chain.theta.clone(),
        scales: chain.scales.clone(),
    })
}

/// Sample the tempered posterior at inverse temperature `beta`, starting from a prior draw.
pub fn mcmc_chain<R: Rng + ?Sized>(
    model: &ModelSpace,
    dataset: &Dataset,
    prior: &Prior,
    beta: f64,
    settings: &McmcSettings,
    rng: &mut R,
) -> Result<ChainResult> {
    run_chain(model, dataset, prior, beta, settings, None, rng)
}
