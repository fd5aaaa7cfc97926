//! Generalization error `G_n = E_{x,y ~ q}[log q(y|x) - log p(y | x, D_n)]` with the predictive
//! distribution taken from weighted posterior samples.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::likelihood::{log_density, LikelihoodEvaluator};
use super::mcmc::ChainResult;
use super::model::ModelSpace;
use super::stats::{log_sum_exp, mean_se};
use super::dataset::Dataset;
use crate::embedding::TrueModel;
use crate::error::{LabError, Result};
use crate::network::Evaluator;

/// Weights below `max - PRUNE` (in log space) are dropped; `exp(-50)` is below double precision
/// relative to the largest weight.
const PRUNE: f64 = 50.0;

/// Posterior samples with normalized log weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSamples {
    points: Vec<Vec<f64>>,
    log_weights: Vec<f64>,
}

impl WeightedSamples {
    /// Normalizes `log_weights` and drops negligible points.
    pub fn new(points: Vec<Vec<f64>>, log_weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(LabError::InvalidArgument("empty sample set".into()));
        }
        if points.len() != log_weights.len() {
            return Err(LabError::LengthMismatch {
                left: points.len(),
                right: log_weights.len(),
            });
        }
        let z = log_sum_exp(&log_weights);
        if !z.is_finite() {
            return Err(LabError::NonFinite("sample weights".into()));
        }
        let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (points, raw): (Vec<_>, Vec<_>) = points
            .into_iter()
            .zip(log_weights)
            .filter(|(_, w)| *w >= max - PRUNE)
            .unzip();
        let z = log_sum_exp(&raw);
        let log_weights = raw.into_iter().map(|w| w - z).collect();
        Ok(WeightedSamples { points, log_weights })
    }

    /// Equally weighted samples.
    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let w = vec![0.0; points.len()];
        Self::new(points, w)
    }

    pub fn from_chain(chain: &ChainResult) -> Result<Self> {
        Self::uniform(chain.samples.clone())
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `log p(y | x, D_n) = log sum_j w_j p(y | x, theta_j)`.
    pub fn log_predictive(&self, model: &ModelSpace, x: &[f64], y: &[f64]) -> f64 {
        let mut full = model.base().as_flat().to_vec();
        let mut ev = Evaluator::new(model.arch());
        self.log_predictive_with(model, x, y, &mut full, &mut ev, &mut Vec::new())
    }

    fn log_predictive_with(
        &self,
        model: &ModelSpace,
        x: &[f64],
        y: &[f64],
        full: &mut [f64],
        ev: &mut Evaluator,
        buf: &mut Vec<f64>,
    ) -> f64 {
        buf.clear();
        for (p, w) in self.points.iter().zip(&self.log_weights) {
            model.fill(p, full);
            buf.push(w + log_density(y, ev.eval(model.arch(), full, x)));
        }
        log_sum_exp(buf)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GenError {
    pub value: f64,
    pub std_error: f64,
}

/// Monte-Carlo `G_n` over `num_test` fresh pairs from the true model.
pub fn estimate_gen_error<R: Rng + ?Sized>(
    model: &ModelSpace,
    samples: &WeightedSamples,
    true_model: &TrueModel,
    num_test: usize,
    rng: &mut R,
) -> Result<GenError> {
    if samples.is_empty() {
        return Err(LabError::InvalidArgument("empty sample set".into()));
    }
    if num_test == 0 {
        return Err(LabError::InvalidArgument("num_test must be at least 1".into()));
    }
    if samples.points[0].len() != model.dim() {
        return Err(LabError::LengthMismatch {
            left: model.dim(),
            right: samples.points[0].len(),
        });
    }
    let mut full = model.base().as_flat().to_vec();
    let mut ev = Evaluator::new(model.arch());
    let mut ev_true = Evaluator::new(true_model.arch());
    let mut buf = Vec::with_capacity(samples.len());
    let mut y = vec![0.0; true_model.arch().output_dim()];
    let mut terms = Vec::with_capacity(num_test);
    for _ in 0..num_test {
        let x = true_model.input_dist().sample(rng);
        let fx = ev_true.eval(true_model.arch(), true_model.params().as_flat(), &x);
        for (yi, f) in y.iter_mut().zip(fx) {
            *yi = f + rng.sample::<f64, _>(StandardNormal);
        }
        let log_q = log_density(&y, fx);
        let log_p = samples.log_predictive_with(model, &x, &y, &mut full, &mut ev, &mut buf);
        terms.push(log_q - log_p);
    }
    let (value, std_error) = mean_se(&terms);
    Ok(GenError { value, std_error })
}

/// `log p(Y | X, D_n)` for every pair of `test` under the given posterior.
pub fn log_predictive_on(model: &ModelSpace, samples: &WeightedSamples, test: &Dataset) -> Result<Vec<f64>> {
    LikelihoodEvaluator::new(model, test)?;
    let mut full = model.base().as_flat().to_vec();
    let mut ev = Evaluator::new(model.arch());
    let mut buf = Vec::new();
    Ok(test
        .iter()
        .map(|(x, y)| samples.log_predictive_with(model, x, y, &mut full, &mut ev, &mut buf))
        .collect())
}
