use serde::{Deserialize, Serialize};

use super::mcmc::McmcSettings;
use crate::error::{LabError, Result};

/// Default number of intervals `J` in the power schedule.
pub const DEFAULT_RUNGS: usize = 32;
/// Smallest ladder (number of betas) accepted by experiment configs.
pub const MIN_PRODUCTION_RUNGS: usize = 8;
const DEFAULT_POWER: f64 = 5.0;

/// How the rungs of the ladder are run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExchangeMode {
    /// Rungs run one after another, each starting from the previous rung's final state.
    #[default]
    Annealed,
    /// Every rung starts from a prior draw; rungs run in parallel.
    Independent,
    /// All rungs advance together and adjacent rungs propose a state swap every `every` sweeps.
    ReplicaExchange { every: usize },
}

/// Inverse temperatures `0 = beta_0 < ... < beta_J = 1` with shared chain settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureLadder {
    pub betas: Vec<f64>,
    pub settings: McmcSettings,
    #[serde(default)]
    pub exchange: ExchangeMode,
}

impl TemperatureLadder {
    pub fn new(betas: Vec<f64>, settings: McmcSettings) -> Result<Self> {
        let l = TemperatureLadder {
            betas,
            settings,
            exchange: ExchangeMode::Annealed,
        };
        l.validate()?;
        Ok(l)
    }

    /// `beta_j = (j / J)^power`, `j = 0..=J`.
    pub fn power(intervals: usize, power: f64, settings: McmcSettings) -> Result<Self> {
        if intervals == 0 {
            return Err(LabError::InvalidArgument("ladder needs at least one interval".into()));
        }
        let betas = (0..=intervals)
            .map(|j| (j as f64 / intervals as f64).powf(power))
            .collect();
        Self::new(betas, settings)
    }

    /// `J = 32`, power 5.
    pub fn default_schedule(settings: McmcSettings) -> Self {
        Self::power(DEFAULT_RUNGS, DEFAULT_POWER, settings).expect("valid default")
    }

    pub fn with_exchange(mut self, exchange: ExchangeMode) -> Self {
        self.exchange = exchange;
        self
    }

    /// Structural checks: endpoints 0 and 1, strictly ascending.
    pub fn validate(&self) -> Result<()> {
        let b = &self.betas;
        if b.len() < 2 {
            return Err(LabError::InvalidArgument("ladder needs at least 2 betas".into()));
        }
        if b[0] != 0.0 || *b.last().expect("non-empty") != 1.0 {
            return Err(LabError::InvalidArgument("ladder must start at 0 and end at 1".into()));
        }
        if b.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(LabError::InvalidArgument("betas must be strictly ascending".into()));
        }
        if let ExchangeMode::ReplicaExchange { every: 0 } = self.exchange {
            return Err(LabError::InvalidArgument("exchange interval must be positive".into()));
        }
        self.settings.validate()
    }

    /// Structural checks plus the minimum rung count for production runs.
    pub fn validate_production(&self) -> Result<()> {
        self.validate()?;
        if self.betas.len() < MIN_PRODUCTION_RUNGS {
            return Err(LabError::InvalidArgument(format!(
                "ladder has {} rungs, need at least {MIN_PRODUCTION_RUNGS}",
                self.betas.len()
            )));
        }
        Ok(())
    }

    /// Trapezoid weights: `integral_0^1 g = sum_j weights[j] g(beta_j)`.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let b = &self.betas;
        let mut w = vec![0.0; b.len()];
        for j in 0..b.len() - 1 {
            let h = b[j + 1] - b[j];
            w[j] += 0.5 * h;
            w[j + 1] += 0.5 * h;
        }
        w
    }
}
