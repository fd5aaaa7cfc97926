//! Slope of the replication-averaged `F_n - n S_n` against `log n`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::sweep::SweepRow;

/// Slope standard errors in the margin of the bound check.
pub const MARGIN_SE: f64 = 2.0;

/// Replication summary for one `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub n: usize,
    pub count: usize,
    pub mean: f64,
    /// Standard error of `mean` over replications (0 with a single replication).
    pub std_error: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub lambda_hat: f64,
    pub intercept: f64,
    /// Root mean square residual of the fitted line.
    pub residual_std: f64,
    /// Combined replication and residual standard error of the slope.
    pub slope_std_error: f64,
    pub margin: f64,
    pub lambda_bound: f64,
    pub satisfied: bool,
    pub per_n: Vec<CellSummary>,
}

pub fn summarize(rows: &[SweepRow]) -> Vec<CellSummary> {
    let mut by_n: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in rows {
        by_n.entry(r.n).or_default().push(r.f_minus_nsn);
    }
    by_n.into_iter()
        .map(|(n, v)| {
            let k = v.len() as f64;
            let mean = v.iter().sum::<f64>() / k;
            let std_error = if v.len() > 1 {
                (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
            } else {
                0.0
            };
            CellSummary {
                n,
                count: v.len(),
                mean,
                std_error,
                min: v.iter().copied().fold(f64::INFINITY, f64::min),
                max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect()
}

/// Ordinary least squares of the per-`n` means on `log n`.
///
/// The slope variance adds the propagated replication variance `sum c_i^2 se_i^2` and the
/// residual variance `RSS / ((k - 2) Sxx)` (the latter only with more than two points).
pub fn fit_lambda(rows: &[SweepRow], lambda_bound: f64) -> Result<SlopeFit, CliError> {
    let per_n = summarize(rows);
    if per_n.len() < 3 {
        return Err(CliError::Validation(format!(
            "slope fit needs at least 3 distinct n, got {}",
            per_n.len()
        )));
    }
    let xs: Vec<f64> = per_n.iter().map(|c| (c.n as f64).ln()).collect();
    let ys: Vec<f64> = per_n.iter().map(|c| c.mean).collect();
    let k = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / k;
    let ybar = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(CliError::Validation("degenerate design: all n equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let rep_var: f64 = xs
        .iter()
        .zip(&per_n)
        .map(|(x, c)| ((x - xbar) / sxx).powi(2) * c.std_error.powi(2))
        .sum();
    let resid_var = rss / ((k - 2.0) * sxx);
    let slope_std_error = (rep_var + resid_var).sqrt();
    let margin = MARGIN_SE * slope_std_error;
    Ok(SlopeFit {
        lambda_hat: slope,
        intercept,
        residual_std: (rss / k).sqrt(),
        slope_std_error,
        margin,
        lambda_bound,
        satisfied: slope <= lambda_bound + margin,
        per_n,
    })
}
