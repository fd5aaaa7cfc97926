//! The prior-mass upper bound as a function of `n`, with its fitted `log n` slope.

use serde::Serialize;

use relulab_core::bayes::{prior_mass_upper_bound, Prior};
use relulab_core::embedding::{lambda_relu, EssentialSampleConfig, SupportMode, TrueModel};
use relulab_core::{seeded_rng, Architecture};

use crate::error::CliError;
use crate::sweep::cell_seed;

/// Relative tolerance on the slope of the bound curve.
pub const SLOPE_REL_TOL: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundPoint {
    pub n: u64,
    pub bound: f64,
    /// `bound - nS`.
    pub excess: f64,
    pub log_volume: f64,
    pub log_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCurve {
    pub points: Vec<BoundPoint>,
    /// Least-squares slope of `excess` on `log n`.
    pub slope: f64,
    pub lambda_bound: f64,
    pub relative_error: f64,
    pub within_tolerance: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundSettings {
    pub region_samples: usize,
    pub num_inputs: usize,
    pub seed: u64,
}

impl Default for BoundSettings {
    fn default() -> Self {
        BoundSettings {
            region_samples: 200,
            num_inputs: 2_000,
            seed: 0,
        }
    }
}

/// Evaluate the bound at every `n` (each with its own generator) and fit the slope.
pub fn bound_curve(
    true_model: &TrueModel,
    arch_model: &Architecture,
    prior: &Prior,
    support: SupportMode,
    ns: &[u64],
    settings: &BoundSettings,
) -> Result<BoundCurve, CliError> {
    if ns.len() < 2 {
        return Err(CliError::Validation("bound curve needs at least 2 sample sizes".into()));
    }
    let lambda = lambda_relu(true_model.arch(), arch_model, support)?.to_f64();
    let mut points = Vec::with_capacity(ns.len());
    for &n in ns {
        let cfg = EssentialSampleConfig::new(n, support);
        let mut rng = seeded_rng(cell_seed(settings.seed, n as usize, 0));
        let b = prior_mass_upper_bound(
            true_model,
            arch_model,
            prior,
            n,
            &cfg,
            settings.region_samples,
            settings.num_inputs,
            &mut rng,
        )?;
        points.push(BoundPoint {
            n,
            bound: b.value,
            excess: b.excess(),
            log_volume: b.log_volume,
            log_mean: b.log_mean,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
    let k = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / k;
    let ybar = points.iter().map(|p| p.excess).sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(CliError::Validation("bound curve needs distinct sample sizes".into()));
    }
    let sxy: f64 = xs.iter().zip(&points).map(|(x, p)| (x - xbar) * (p.excess - ybar)).sum();
    let slope = sxy / sxx;
    let relative_error = (slope - lambda).abs() / lambda;
    Ok(BoundCurve {
        points,
        slope,
        lambda_bound: lambda,
        relative_error,
        within_tolerance: relative_error <= SLOPE_REL_TOL,
    })
}
