//! Experiment configuration: one JSON document, paths relative to the file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use relulab_core::bayes::{ExchangeMode, McmcSettings, ModelSpace, Prior, TemperatureLadder, DEFAULT_RUNGS};
use relulab_core::embedding::{check_compatibility, lambda_relu, SupportMode, TrueModel};
use relulab_core::{Activation, Architecture, Parameters};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderSpec {
    /// Number of intervals `J`; the ladder has `J + 1` betas.
    #[serde(default = "default_rungs")]
    pub rungs: usize,
    #[serde(default = "default_power")]
    pub power: f64,
    #[serde(default)]
    pub mcmc: McmcSettings,
    #[serde(default)]
    pub exchange: ExchangeMode,
}

fn default_rungs() -> usize {
    DEFAULT_RUNGS
}

fn default_power() -> f64 {
    5.0
}

impl Default for LadderSpec {
    fn default() -> Self {
        LadderSpec {
            rungs: DEFAULT_RUNGS,
            power: default_power(),
            mcmc: McmcSettings::default(),
            exchange: ExchangeMode::default(),
        }
    }
}

impl LadderSpec {
    pub fn build(&self) -> Result<TemperatureLadder, CliError> {
        let l = TemperatureLadder::power(self.rungs, self.power, self.mcmc)?.with_exchange(self.exchange);
        l.validate_production()?;
        Ok(l)
    }
}

/// Coordinates held fixed at `base` values; only `free` indices (into the flat parameter
/// vector) are sampled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PinSpec {
    /// `null` pins to the true parameters (requires model = true architecture).
    #[serde(default)]
    pub base: Option<serde_json::Value>,
    pub free: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorChoice {
    /// Quadrature when the free dimension is at most 3, thermodynamic integration otherwise.
    #[default]
    Auto,
    Ti,
    Quadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub true_model: TrueModel,
    pub model_arch: Architecture,
    #[serde(default = "default_half_width")]
    pub prior_half_width: f64,
    #[serde(default)]
    pub ladder: LadderSpec,
    pub n_grid: Vec<usize>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    pub seed: u64,
    /// Defaults to the support of the true model's input distribution.
    #[serde(default)]
    pub support_mode: Option<SupportMode>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub pinned: Option<PinSpec>,
    #[serde(default)]
    pub estimator: EstimatorChoice,
    #[serde(default = "default_grid")]
    pub quadrature_points: usize,
}

fn default_half_width() -> f64 {
    relulab_core::bayes::DEFAULT_PRIOR_HALF_WIDTH
}

fn default_replications() -> usize {
    1
}

fn default_grid() -> usize {
    200
}

impl ExperimentConfig {
    /// Parse and validate; a relative `output_dir` is resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(dir) = &cfg.output_dir {
            if dir.is_relative() {
                let root = path.parent().unwrap_or_else(|| Path::new("."));
                cfg.output_dir = Some(root.join(dir));
            }
        }
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn support_mode(&self) -> SupportMode {
        self.support_mode
            .unwrap_or_else(|| self.true_model.input_dist().support_mode())
    }

    pub fn prior(&self) -> Prior {
        Prior {
            half_width: self.prior_half_width,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let mut problems = Vec::new();
        if self.n_grid.len() < 3 {
            problems.push(format!("n_grid needs at least 3 values, got {}", self.n_grid.len()));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            problems.push("n_grid must be strictly ascending".to_string());
        }
        if self.n_grid.first() == Some(&0) {
            problems.push("n_grid values must be positive".to_string());
        }
        if self.replications == 0 {
            problems.push("replications must be at least 1".to_string());
        }
        if let Err(e) = Prior::uniform(self.prior_half_width).and_then(|p| p.validate_for(&self.true_model)) {
            problems.push(e.to_string());
        }
        let report = check_compatibility(self.true_model.arch(), &self.model_arch);
        problems.extend(report.violation_strings());
        if let Err(e) = self.ladder.build() {
            problems.push(e.to_string());
        }
        if let Err(e) = self.check_support() {
            problems.push(e);
        }
        if let Err(e) = self.model_space() {
            problems.push(e.to_string());
        }
        if self.quadrature_points < 2 {
            problems.push("quadrature_points must be at least 2".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(problems.join("; ")))
        }
    }

    /// A declared support mode may be weaker than the input distribution's, never stronger.
    fn check_support(&self) -> Result<(), String> {
        let actual = self.true_model.input_dist().support_mode();
        let declared = self.support_mode();
        let ok = match declared {
            SupportMode::General => true,
            SupportMode::Nonnegative => actual == SupportMode::Nonnegative,
            SupportMode::Bounded => actual != SupportMode::General,
        };
        if ok {
            Ok(())
        } else {
            Err(format!("support mode {declared} does not hold for {actual} inputs"))
        }
    }

    pub fn model_space(&self) -> Result<ModelSpace, CliError> {
        match &self.pinned {
            None => Ok(ModelSpace::full(&self.model_arch)),
            Some(pin) => {
                let base = match &pin.base {
                    Some(v) => Parameters::from_json_value(&self.model_arch, v.clone())?,
                    None if &self.model_arch == self.true_model.arch() => self.true_model.params().clone(),
                    None => {
                        return Err(CliError::Validation(
                            "pinned.base may only be omitted when the model is the true architecture".into(),
                        ))
                    }
                };
                Ok(ModelSpace::pinned(&self.model_arch, base, pin.free.clone())?)
            }
        }
    }

    /// `lambda_ReLU` for the configured pair; a fully pinned model has bound 0.
    pub fn lambda_bound(&self) -> Result<f64, CliError> {
        if matches!(&self.pinned, Some(p) if p.free.is_empty()) {
            return Ok(0.0);
        }
        Ok(lambda_relu(self.true_model.arch(), &self.model_arch, self.support_mode())?.to_f64())
    }

    /// Apply command-line overrides and revalidate.
    pub fn with_overrides(
        mut self,
        seed: Option<u64>,
        support: Option<SupportMode>,
        activation: Option<Activation>,
        out: Option<PathBuf>,
    ) -> Result<Self, CliError> {
        if let Some(s) = seed {
            self.seed = s;
        }
        if support.is_some() {
            self.support_mode = support;
        }
        if let Some(a) = activation {
            self.model_arch = self.model_arch.with_output_activation(a);
            let arch = self.true_model.arch().with_output_activation(a);
            self.true_model = TrueModel::new(arch, self.true_model.params().clone(), *self.true_model.input_dist())?;
        }
        if out.is_some() {
            self.output_dir = out;
        }
        self.validate()?;
        Ok(self)
    }
}
