//! Exhaustive midpoint quadrature of `Z_n` over the prior box, for models with at most three
//! free coordinates.

use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::generalization::WeightedSamples;
use super::likelihood::LikelihoodEvaluator;
use super::model::{ModelSpace, Prior};
use super::stats::log_sum_exp;
use super::ti::{EstimatorMethod, FreeEnergyEstimate};
use crate::embedding::{InputDistSpec, TrueModel};
use crate::error::{LabError, Result};
use crate::network::{Architecture, Parameters};

/// Largest free dimension the oracle accepts.
pub const MAX_QUADRATURE_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub points_per_axis: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { points_per_axis: 200 }
    }
}

fn check(model: &ModelSpace, grid: &GridSpec) -> Result<()> {
    if model.dim() > MAX_QUADRATURE_DIM {
        return Err(LabError::InvalidArgument(format!(
            "quadrature needs at most {MAX_QUADRATURE_DIM} free coordinates, got {}",
            model.dim()
        )));
    }
    if grid.points_per_axis < 2 {
        return Err(LabError::InvalidArgument("grid needs at least 2 points per axis".into()));
    }
    Ok(())
}

/// Midpoints of an `m`-point grid on `[-h, h]^d`, in lexicographic order.
fn grid_points(dim: usize, m: usize, h: f64) -> impl Iterator<Item = Vec<f64>> {
    let step = 2.0 * h / m as f64;
    let total = m.pow(dim as u32);
    (0..total).map(move |mut idx| {
        let mut p = vec![0.0; dim];
        for v in p.iter_mut().rev() {
            *v = -h + (idx % m) as f64 * step + 0.5 * step;
            idx /= m;
        }
        p
    })
}

/// `(points, log L at each point)` on the `m`-point grid.
fn grid_log_liks(
    model: &ModelSpace,
    dataset: &Dataset,
    prior: &Prior,
    m: usize,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let mut lik = LikelihoodEvaluator::new(model, dataset)?;
    let points: Vec<Vec<f64>> = grid_points(model.dim(), m, prior.half_width).collect();
    let lls = points.iter().map(|p| lik.log_likelihood(p)).collect();
    Ok((points, lls))
}

/// `-log Z_n` from grid log-likelihoods: each cell carries prior mass `m^-d`.
fn free_energy_from(lls: &[f64], dim: usize, m: usize) -> f64 {
    -(log_sum_exp(lls) - dim as f64 * (m as f64).ln())
}

/// Midpoint-rule `F_n`; the refinement delta compares against a grid with half the points.
pub fn quadrature_free_energy(
    model: &ModelSpace,
    dataset: &Dataset,
    prior: &Prior,
    grid: &GridSpec,
) -> Result<FreeEnergyEstimate> {
    check(model, grid)?;
    let m = grid.points_per_axis;
    let d = model.dim();
    let (_, lls) = grid_log_liks(model, dataset, prior, m)?;
    let value = free_energy_from(&lls, d, m);
    let delta = if d == 0 {
        0.0
    } else {
        let (_, coarse) = grid_log_liks(model, dataset, prior, m / 2)?;
        (value - free_energy_from(&coarse, d, m / 2)).abs()
    };
    Ok(FreeEnergyEstimate {
        value,
        std_error: 0.0,
        method: EstimatorMethod::QuadratureOracle,
        diagnostics: Vec::new(),
        flagged_rungs: Vec::new(),
        grid_refinement_delta: Some(delta),
    })
}

/// The grid posterior: every grid point weighted by its normalized likelihood.
pub fn quadrature_posterior(
    model: &ModelSpace,
    dataset: &Dataset,
    prior: &Prior,
    grid: &GridSpec,
) -> Result<WeightedSamples> {
    check(model, grid)?;
    let (points, lls) = grid_log_liks(model, dataset, prior, grid.points_per_axis)?;
    WeightedSamples::new(points, lls)
}

/// `f(x) = a relu(b x)` as a network `(1, 1, 1)` with biases pinned to 0 and the two weights
/// `(b, a)` free, plus the true model with the given weights and standard Gaussian inputs.
pub fn product_relu_model(a: f64, b: f64) -> (ModelSpace, TrueModel) {
    let arch = Architecture::linear(&[1, 1, 1]).expect("valid widths");
    let truth = Parameters::from_flat(&arch, vec![b, 0.0, a, 0.0]).expect("four parameters");
    let free = vec![arch.weight_index(2, 0, 0), arch.weight_index(3, 0, 0)];
    let model = ModelSpace::pinned(&arch, Parameters::zeros(&arch), free).expect("valid coordinates");
    let true_model = TrueModel::new(arch, truth, InputDistSpec::gaussian(1)).expect("matching dims");
    (model, true_model)
}
