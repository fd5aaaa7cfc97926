//! Closed forms for the scalar-mean model `y = theta + N(0, 1)` under a uniform prior on
//! `[-B, B]`. The posterior is a truncated normal, so the marginal likelihood is exact.

use std::f64::consts::PI;

use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::model::ModelSpace;
use crate::embedding::{InputDistSpec, TrueModel};
use crate::network::{Architecture, Parameters};

/// The scalar-mean model as a one-free-coordinate network (`w` pinned to 0, `b` free) and the
/// data-generating model with `b = theta_true`.
pub fn scalar_mean_model(theta_true: f64) -> (ModelSpace, TrueModel) {
    let arch = Architecture::linear(&[1, 1]).expect("valid widths");
    let base = Parameters::from_flat(&arch, vec![0.0, theta_true]).expect("two parameters");
    let model = ModelSpace::pinned(&arch, base.clone(), vec![arch.bias_index(2, 0)])
        .expect("valid coordinate");
    let truth = TrueModel::new(arch, base, InputDistSpec::gaussian(1)).expect("matching dims");
    (model, truth)
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// `P(lo < Z < hi)` computed on the side with less cancellation.
fn normal_mass(lo: f64, hi: f64) -> f64 {
    let n = std_normal();
    if lo > 0.0 {
        n.sf(lo) - n.sf(hi)
    } else {
        n.cdf(hi) - n.cdf(lo)
    }
}

/// `-log Z_n` for observations `ys` under the uniform prior on `[-half_width, half_width]`.
pub fn scalar_mean_free_energy(ys: &[f64], half_width: f64) -> f64 {
    let n = ys.len();
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let mean = ys.iter().sum::<f64>() / nf;
    let ss: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let s = nf.sqrt();
    let mass = normal_mass(s * (-half_width - mean), s * (half_width - mean));
    0.5 * nf * (2.0 * PI).ln() + 0.5 * ss - 0.5 * (2.0 * PI / nf).ln() + (2.0 * half_width).ln()
        - mass.ln()
}

/// Posterior mean and variance of `theta` (truncated normal).
pub fn scalar_mean_posterior(ys: &[f64], half_width: f64) -> (f64, f64) {
    let nf = ys.len() as f64;
    let mu = ys.iter().sum::<f64>() / nf;
    let sigma = 1.0 / nf.sqrt();
    let a = (-half_width - mu) / sigma;
    let b = (half_width - mu) / sigma;
    let n = std_normal();
    let z = normal_mass(a, b);
    let (pa, pb) = (n.pdf(a), n.pdf(b));
    let mean = mu + sigma * (pa - pb) / z;
    let var = sigma * sigma * (1.0 + (a * pa - b * pb) / z - ((pa - pb) / z).powi(2));
    (mean, var)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent route: midpoint quadrature of the marginal likelihood.
    fn brute_force(ys: &[f64], b: f64) -> f64 {
        let m = 200_000;
        let h = 2.0 * b / m as f64;
        let logs: Vec<f64> = (0..m)
            .map(|i| {
                let t = -b + (i as f64 + 0.5) * h;
                ys.iter()
                    .map(|y| -0.5 * (2.0 * PI).ln() - 0.5 * (y - t).powi(2))
                    .sum::<f64>()
            })
            .collect();
        let lz = crate::bayes::stats::log_sum_exp(&logs) + h.ln() - (2.0 * b).ln();
        -lz
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let ys = [0.3, -0.1, 1.2, 0.8, 0.45];
        for b in [1.0, 5.0] {
            let exact = scalar_mean_free_energy(&ys, b);
            assert!((exact - brute_force(&ys, b)).abs() < 1e-8, "B = {b}");
        }
    }

    #[test]
    fn empty_sample_has_zero_free_energy() {
        assert_eq!(scalar_mean_free_energy(&[], 5.0), 0.0);
    }

    #[test]
    fn wide_prior_posterior_is_gaussian() {
        let ys = [1.0, 2.0, 3.0, 2.0];
        let (m, v) = scalar_mean_posterior(&ys, 50.0);
        assert!((m - 2.0).abs() < 1e-12);
        assert!((v - 0.25).abs() < 1e-12);
    }
}
