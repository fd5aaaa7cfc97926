//! Bayesian layer: data, likelihood, prior, posterior sampling and free-energy estimation.

mod bounds;
mod conjugate;
mod dataset;
mod generalization;
mod ladder;
mod likelihood;
mod mcmc;
mod model;
mod quadrature;
mod stats;
mod ti;

pub use bounds::{
    prior_mass_upper_bound, restricted_free_energy, PriorMassBound, ParamBox, RestrictedEstimate,
    DEFAULT_KL_INPUTS,
};
pub use conjugate::{scalar_mean_free_energy, scalar_mean_model, scalar_mean_posterior};
pub use dataset::{generate_dataset, generate_dataset_with_noise, Dataset};
pub use generalization::{estimate_gen_error, log_predictive_on, GenError, WeightedSamples};
pub use ladder::{ExchangeMode, TemperatureLadder, DEFAULT_RUNGS, MIN_PRODUCTION_RUNGS};
pub use likelihood::{
    empirical_entropy, entropy_true, kl_divergence_mc, log_density, log_likelihood,
    LikelihoodEvaluator,
};
pub use mcmc::{mcmc_chain, ChainResult, McmcSettings, TARGET_ACCEPTANCE};
pub use model::{ModelSpace, Prior, DEFAULT_PRIOR_HALF_WIDTH};
pub use quadrature::{
    product_relu_model, quadrature_free_energy, quadrature_posterior, GridSpec, MAX_QUADRATURE_DIM,
};
pub use stats::{batch_means, log_sum_exp, BatchSummary};
pub use ti::{
    estimate_free_energy_ti, write_rung_csv, write_samples_csv, EstimatorMethod,
    FreeEnergyEstimate, RungDiagnostic, MIN_ACCEPTANCE,
};
