//! Elementary inequalities for ReLU layers: contraction of the activation, the one-layer
//! Lipschitz bound in the parameters, and the norm bound on layer outputs.
//!
//! Each check returns both sides so callers can report slack, not just a verdict.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::linalg::{dist, norm, spectral_norm};
use crate::network::{all_layer_outputs, Architecture, Parameters};

/// Relative slack allowed when comparing the two sides of an inequality whose right-hand side
/// involves spectral norms from the power iteration.
pub const NORM_REL_SLACK: f64 = 1e-8;
/// Absolute slack for floating-point roundoff.
pub const ABS_SLACK: f64 = 1e-12;

/// Two sides of an inequality `lhs <= rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Inequality {
    pub lhs: f64,
    pub rhs: f64,
}

impl Inequality {
    /// Exact comparison up to roundoff.
    pub fn holds_exact(&self) -> bool {
        self.lhs <= self.rhs + ABS_SLACK + 4.0 * f64::EPSILON * self.rhs.abs()
    }

    /// Comparison allowing for the power-iteration tolerance in `rhs`.
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + NORM_REL_SLACK) + ABS_SLACK
    }
}

/// `(||sigma(s) - sigma(t)||, ||s - t||)` for `sigma = relu`.
pub fn check_sigma_contraction(s: &[f64], t: &[f64]) -> Result<Inequality> {
    check_contraction_with(|v| v.max(0.0), s, t)
}

/// Contraction check for an arbitrary scalar activation applied componentwise.
pub fn check_contraction_with<F: Fn(f64) -> f64>(act: F, s: &[f64], t: &[f64]) -> Result<Inequality> {
    if s.len() != t.len() {
        return Err(LabError::LengthMismatch {
            left: s.len(),
            right: t.len(),
        });
    }
    let lhs = s
        .iter()
        .zip(t)
        .map(|(&a, &b)| (act(a) - act(b)).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(Inequality {
        lhs,
        rhs: dist(s, t),
    })
}

fn check_layer_range(arch: &Architecture, k: usize) -> Result<()> {
    if k < 2 || k > arch.depth() {
        return Err(LabError::LayerOutOfRange {
            index: k,
            max: arch.depth(),
        });
    }
    Ok(())
}

/// One-layer perturbation bound:
/// `||f(k)(w) - f(k)(w')|| <= ||w(k) - w'(k)|| ||f(k-1)(w)|| + ||b(k) - b'(k)||
///   + ||w'(k)|| ||f(k-1)(w) - f(k-1)(w')||` with spectral norms.
pub fn check_layer_lipschitz(
    arch: &Architecture,
    params: &Parameters,
    other: &Parameters,
    x: &[f64],
    k: usize,
) -> Result<Inequality> {
    check_layer_range(arch, k)?;
    let f = all_layer_outputs(arch, params, x)?;
    let g = all_layer_outputs(arch, other, x)?;
    let dw = params
        .weight(k)
        .to_owned()
        .sub(&other.weight(k).to_owned());
    let lhs = dist(&f[k - 1], &g[k - 1]);
    let rhs = spectral_norm(dw.as_ref()) * norm(&f[k - 2])
        + dist(params.bias(k), other.bias(k))
        + spectral_norm(other.weight(k)) * dist(&f[k - 2], &g[k - 2]);
    Ok(Inequality { lhs, rhs })
}

/// Norm bound obtained by unrolling `||f(k)|| <= ||w(k)|| ||f(k-1)|| + ||b(k)||` down to the input:
/// `prod_{j=2..k} ||w(j)|| ||x|| + ||b(k)|| + sum_{j=1}^{k-2} (prod_{i=k-j+1..k} ||w(i)||) ||b(k-j)||`.
pub fn norm_bound(arch: &Architecture, params: &Parameters, x: &[f64], k: usize) -> Result<f64> {
    check_layer_range(arch, k)?;
    params.check(arch)?;
    let op: Vec<f64> = (2..=k).map(|j| spectral_norm(params.weight(j))).collect();
    // op[j - 2] = ||w(j)||
    let tail = |from: usize| -> f64 { (from..=k).map(|i| op[i - 2]).product() };
    let mut rhs = tail(2) * norm(x) + norm(params.bias(k));
    for j in 1..=k.saturating_sub(2) {
        rhs += tail(k - j + 1) * norm(params.bias(k - j));
    }
    Ok(rhs)
}

/// `(||f(k)(w, b, x)||, norm_bound)`.
pub fn check_norm_bound(
    arch: &Architecture,
    params: &Parameters,
    x: &[f64],
    k: usize,
) -> Result<Inequality> {
    check_layer_range(arch, k)?;
    let f = all_layer_outputs(arch, params, x)?;
    Ok(Inequality {
        lhs: norm(&f[k - 1]),
        rhs: norm_bound(arch, params, x, k)?,
    })
}

/// Global Lipschitz constant in the input: product of the spectral norms of all weights.
pub fn input_lipschitz_constant(arch: &Architecture, params: &Parameters) -> f64 {
    (2..=arch.depth())
        .map(|k| spectral_norm(params.weight(k)))
        .product()
}

/// Zero parameters with the same shape, used as the `w' = 0` comparison point.
pub fn zero_like(arch: &Architecture) -> Parameters {
    Parameters::zeros(arch)
}
