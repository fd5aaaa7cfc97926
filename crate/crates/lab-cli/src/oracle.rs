//! Estimator validation against exactly solvable references.

use serde::Serialize;

use relulab_core::bayes::{
    estimate_free_energy_ti, generate_dataset, product_relu_model, quadrature_free_energy, scalar_mean_free_energy,
    scalar_mean_model, Dataset, GridSpec, Prior, TemperatureLadder,
};
use relulab_core::seeded_rng;

use crate::error::CliError;
use crate::suite::property_rng;

/// Pass threshold for `|TI - closed form|` on the scalar-mean model.
pub const CONJUGATE_TOL: f64 = 0.2;
/// Pass threshold for `|TI - quadrature|` on the two-weight ReLU model.
pub const QUADRATURE_TOL: f64 = 0.3;
pub const MAX_ORACLE_N: usize = 200;
const SCALAR_MEAN: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub n: usize,
    pub rungs: usize,
    pub conjugate_exact: f64,
    pub conjugate_ti: f64,
    pub conjugate_gap: f64,
    pub conjugate_pass: bool,
    pub quadrature: f64,
    pub quadrature_refinement_delta: f64,
    pub quadrature_ti: f64,
    pub quadrature_gap: f64,
    pub quadrature_pass: bool,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.conjugate_pass && self.quadrature_pass
    }
}

fn data_or_empty(
    truth: &relulab_core::embedding::TrueModel,
    n: usize,
    seed: u64,
) -> Result<Dataset, CliError> {
    if n == 0 {
        return Ok(Dataset::new(truth.arch().input_dim(), truth.arch().output_dim()));
    }
    Ok(generate_dataset(truth, n, &mut seeded_rng(seed))?)
}

/// Compare thermodynamic integration on `ladder` with the scalar-mean closed form and with grid
/// quadrature on `f(x) = a relu(b x)`, both at sample size `n`.
pub fn validate_oracle(n: usize, seed: u64, ladder: &TemperatureLadder) -> Result<OracleReport, CliError> {
    if n > MAX_ORACLE_N {
        return Err(CliError::Validation(format!("oracle n must be at most {MAX_ORACLE_N}, got {n}")));
    }
    ladder.validate()?;
    let prior = Prior::default();

    let (model, truth) = scalar_mean_model(SCALAR_MEAN);
    let data = data_or_empty(&truth, n, seed)?;
    let ys: Vec<f64> = data.iter().map(|(_, y)| y[0]).collect();
    let conjugate_exact = scalar_mean_free_energy(&ys, prior.half_width);
    let conjugate_ti = estimate_free_energy_ti(&model, &data, &prior, ladder, &mut property_rng(seed, 1))?.value;

    let (model, truth) = product_relu_model(1.0, 1.0);
    let data = data_or_empty(&truth, n, seed.wrapping_add(1))?;
    let q = quadrature_free_energy(&model, &data, &prior, &GridSpec::default())?;
    let quadrature_ti = estimate_free_energy_ti(&model, &data, &prior, ladder, &mut property_rng(seed, 2))?.value;

    let conjugate_gap = (conjugate_ti - conjugate_exact).abs();
    let quadrature_gap = (quadrature_ti - q.value).abs();
    Ok(OracleReport {
        n,
        rungs: ladder.betas.len(),
        conjugate_exact,
        conjugate_ti,
        conjugate_gap,
        conjugate_pass: conjugate_gap <= CONJUGATE_TOL,
        quadrature: q.value,
        quadrature_refinement_delta: q.grid_refinement_delta.unwrap_or(0.0),
        quadrature_ti,
        quadrature_gap,
        quadrature_pass: quadrature_gap <= QUADRATURE_TOL,
    })
}
