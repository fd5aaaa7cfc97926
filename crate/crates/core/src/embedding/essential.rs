//! Optimal parameters and random members of the essential parameter set.
//!
//! Both constructions share one block recipe. Every entry of the model's parameter vector is
//! one coordinate: a fixed offset plus a value drawn from an interval. The essential set is the
//! product of those intervals, so its volume is the product of interval lengths.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::compat::check_compatibility;
use super::input::SupportMode;
use super::layout::{BlockLayout, Section};
use super::true_model::TrueModel;
use crate::error::{LabError, Result};
use crate::linalg::Matrix;
use crate::network::{Architecture, Parameters};

/// Default width of the positive perturbation added to pass-through identity blocks.
pub const DEFAULT_DELTA: f64 = 0.05;
const MAX_RESAMPLES: usize = 16;

/// Sampling configuration for the essential parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EssentialSampleConfig {
    /// Sample-size scale; convergent entries lie in `(-1/sqrt(n), 1/sqrt(n))`.
    pub n: u64,
    pub delta: f64,
    pub support_mode: SupportMode,
    /// Floor `B0` for second-layer redundant biases in bounded mode; those biases are drawn from
    /// `[-(B0 + 1), -B0]`. `None` derives `B0 = 2 H_1 x_max + 1` from the input box.
    #[serde(default)]
    pub bounded_bias_floor: Option<f64>,
}

impl EssentialSampleConfig {
    pub fn new(n: u64, support_mode: SupportMode) -> Self {
        EssentialSampleConfig {
            n,
            delta: DEFAULT_DELTA,
            support_mode,
            bounded_bias_floor: None,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn epsilon(&self) -> f64 {
        1.0 / (self.n as f64).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(LabError::InvalidArgument(format!(
                "sample-size scale n = {} must be at least 2",
                self.n
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(LabError::InvalidArgument(format!(
                "delta = {} must lie in (0, 1)",
                self.delta
            )));
        }
        if let Some(b0) = self.bounded_bias_floor {
            if !(b0.is_finite() && b0 >= 0.0) {
                return Err(LabError::InvalidArgument(format!("bad bias floor {b0}")));
            }
        }
        Ok(())
    }
}

/// How many coordinates of each kind a sample used.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CoordinateCounts {
    /// Width `2/sqrt(n)`.
    pub convergent: usize,
    /// Width `delta`.
    pub small: usize,
    /// Width 1.
    pub constant: usize,
}

impl CoordinateCounts {
    pub fn total(&self) -> usize {
        self.convergent + self.small + self.constant
    }

    /// Half the number of convergent coordinates: the `log n` exponent of the set volume.
    pub fn volume_exponent(&self) -> f64 {
        self.convergent as f64 / 2.0
    }
}

/// A member of the essential parameter set with its volume bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct EssentialSample {
    pub params: Parameters,
    pub counts: CoordinateCounts,
    /// `log Vol(W_E)`.
    pub log_volume: f64,
}

#[derive(Clone, Copy, PartialEq)]
enum Recipe {
    Optimal,
    Essential,
}

struct Draws<'a, R: ?Sized> {
    rng: &'a mut R,
    eps: f64,
    delta: f64,
    counts: CoordinateCounts,
    log_volume: f64,
}

impl<R: Rng + ?Sized> Draws<'_, R> {
    fn convergent(&mut self) -> f64 {
        if self.eps == 0.0 {
            return 0.0;
        }
        self.counts.convergent += 1;
        self.log_volume += (2.0 * self.eps).ln();
        self.rng.random_range(-self.eps..self.eps)
    }

    fn small(&mut self) -> f64 {
        if self.delta == 0.0 {
            return 0.0;
        }
        self.counts.small += 1;
        self.log_volume += self.delta.ln();
        self.rng.random_range(0.0..self.delta)
    }

    /// Uniform on `[lo, lo + 1]`.
    fn unit_from(&mut self, lo: f64) -> f64 {
        self.counts.constant += 1;
        self.rng.random_range(lo..=lo + 1.0)
    }

    fn positive(&mut self) -> f64 {
        self.unit_from(1.0)
    }

    fn negative(&mut self) -> f64 {
        self.unit_from(-2.0)
    }
}

fn bias_floor(true_model: &TrueModel, support: SupportMode, explicit: Option<f64>) -> Result<f64> {
    if let Some(b0) = explicit {
        return Ok(b0);
    }
    match support {
        SupportMode::Bounded => {
            let x_max = true_model.input_dist().abs_bound().ok_or_else(|| {
                LabError::Unsupported("bounded mode needs an input distribution with bounded support".into())
            })?;
            Ok(2.0 * true_model.arch().input_dim() as f64 * x_max + 1.0)
        }
        _ => Ok(1.0),
    }
}

fn ensure_compatible(true_model: &TrueModel, arch_model: &Architecture) -> Result<()> {
    let report = check_compatibility(true_model.arch(), arch_model);
    if report.satisfied {
        Ok(())
    } else {
        Err(LabError::Incompatible(report.violation_strings()))
    }
}

fn block(p: &Parameters, k: usize, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Matrix {
    let w = p.weight(k);
    let mut m = Matrix::zeros(rows.len(), cols.len());
    for (i, r) in rows.clone().enumerate() {
        for (j, c) in cols.clone().enumerate() {
            m.set(i, j, w.get(r, c));
        }
    }
    m
}

/// Core recipe shared by [`build_optimal_params`] and [`sample_essential_params`].
fn construct<R: Rng + ?Sized>(
    true_model: &TrueModel,
    arch_model: &Architecture,
    recipe: Recipe,
    support: SupportMode,
    eps: f64,
    delta: f64,
    explicit_floor: Option<f64>,
    rng: &mut R,
) -> Result<EssentialSample> {
    let layout = BlockLayout::new(true_model.arch(), arch_model);
    let (nt, n) = (layout.true_depth(), layout.model_depth());
    let wstar = true_model.params();

    if nt == 2 && n > 2 && support == SupportMode::General {
        return Err(LabError::Unsupported(
            "pass-through layers directly after an unbounded input cannot stay linear".into(),
        ));
    }
    let floor = bias_floor(true_model, support, explicit_floor)?;
    // Only the first model layer sees raw (possibly negative) inputs.
    let first_layer_guard = support == SupportMode::Bounded;

    let mut d = Draws {
        rng,
        eps,
        delta,
        counts: CoordinateCounts::default(),
        log_volume: 0.0,
    };
    let mut p = Parameters::zeros(arch_model);

    for k in 2..n {
        let (a, a_in) = (layout.a_dim(k), layout.a_dim(k - 1));
        let (rows, cols) = (arch_model.width(k), arch_model.width(k - 1));
        let mut w = Matrix::zeros(rows, cols);
        let mut b = vec![0.0; rows];
        match layout.section(k) {
            Section::Copy => {
                let ws = wstar.weight(k);
                for r in 0..rows {
                    for c in 0..cols {
                        let v = match (r < a, c < a_in) {
                            (true, true) => match recipe {
                                Recipe::Optimal => ws.get(r, c),
                                Recipe::Essential => ws.get(r, c) + d.convergent(),
                            },
                            // f_B of layer 2 may be nonzero under general support, so the
                            // block reading it into layer 3 must vanish as n grows.
                            (true, false) if k == 3 && support == SupportMode::General => {
                                match recipe {
                                    Recipe::Optimal => d.positive(),
                                    Recipe::Essential => d.convergent(),
                                }
                            }
                            (true, false) => d.positive(),
                            (false, true) if k == 2 && recipe == Recipe::Optimal => 0.0,
                            (false, true) => d.negative(),
                            (false, false) => match recipe {
                                Recipe::Optimal => d.positive(),
                                Recipe::Essential => d.negative(),
                            },
                        };
                        w.set(r, c, v);
                    }
                }
                for r in 0..rows {
                    b[r] = if r < a {
                        match recipe {
                            Recipe::Optimal => wstar.bias(k)[r],
                            Recipe::Essential => wstar.bias(k)[r] + d.convergent(),
                        }
                    } else if k == 2 && first_layer_guard {
                        d.unit_from(-(floor + 1.0))
                    } else {
                        d.negative()
                    };
                }
            }
            Section::Pass => {
                for r in 0..rows {
                    for c in 0..cols {
                        let v = match (r < a, c < a_in) {
                            (true, true) => {
                                let diag = if r == c { 1.0 } else { 0.0 };
                                match recipe {
                                    Recipe::Optimal => diag,
                                    Recipe::Essential => diag + d.small(),
                                }
                            }
                            (true, false) if k == 3 && support == SupportMode::General => {
                                match recipe {
                                    Recipe::Optimal => d.positive(),
                                    Recipe::Essential => d.convergent(),
                                }
                            }
                            (true, false) => d.positive(),
                            _ => d.negative(),
                        };
                        w.set(r, c, v);
                    }
                }
                for r in 0..rows {
                    b[r] = match (r < a, k == 2 && first_layer_guard) {
                        (true, true) => d.unit_from(floor),
                        (false, true) => d.unit_from(-(floor + 1.0)),
                        (true, false) => d.positive(),
                        (false, false) => d.negative(),
                    };
                }
            }
            Section::Input | Section::Output => unreachable!("k in 2..N"),
        }
        p.weight_mut(k).copy_from_slice(&w.data);
        p.bias_mut(k).copy_from_slice(&b);
    }

    // Pass-through product P = w_AA(N-1) ... w_AA(N*) and the bias accumulated along the A path.
    let a_pass = layout.a_dim(n - 1);
    let mut prod = Matrix::identity(a_pass);
    let mut shift = vec![0.0; a_pass];
    for k in nt..n {
        let waa = block(&p, k, 0..a_pass, 0..a_pass);
        prod = waa.mul(&prod);
        shift = waa.as_ref().matvec(&shift);
        for (s, bk) in shift.iter_mut().zip(&p.bias(k)[..a_pass]) {
            *s += bk;
        }
    }
    let prod_inv = prod.inverse()?;
    let ws_out = wstar.weight(nt).to_owned();
    let target = ws_out.mul(&prod_inv);

    let (rows, cols) = (arch_model.width(n), arch_model.width(n - 1));
    let mut w = Matrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            let v = if c < a_pass {
                match recipe {
                    Recipe::Optimal => target.get(r, c),
                    Recipe::Essential => target.get(r, c) + d.convergent(),
                }
            } else if n == 3 && support == SupportMode::General && recipe == Recipe::Essential {
                d.convergent()
            } else {
                d.positive()
            };
            w.set(r, c, v);
        }
    }
    let waa_out = block_of(&w, 0..rows, 0..a_pass);
    let comp = waa_out.as_ref().matvec(&shift);
    let mut b = vec![0.0; rows];
    for r in 0..rows {
        b[r] = wstar.bias(nt)[r] - comp[r];
        if recipe == Recipe::Essential {
            b[r] += d.convergent();
        }
    }
    p.weight_mut(n).copy_from_slice(&w.data);
    p.bias_mut(n).copy_from_slice(&b);

    if p.as_flat().iter().any(|v| !v.is_finite()) {
        return Err(LabError::Singular("pass-through product is ill-conditioned".into()));
    }
    Ok(EssentialSample {
        params: p,
        counts: d.counts,
        log_volume: d.log_volume,
    })
}

fn block_of(m: &Matrix, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Matrix {
    let mut out = Matrix::zeros(rows.len(), cols.len());
    for (i, r) in rows.enumerate() {
        for (j, c) in cols.clone().enumerate() {
            out.set(i, j, m.get(r, c));
        }
    }
    out
}

/// Canonical optimal parameters: the model computes exactly the true network.
///
/// Arbitrary blocks are drawn from `[1, 2]` (or `[-2, -1]` where they must be negative).
pub fn build_optimal_params<R: Rng + ?Sized>(
    true_model: &TrueModel,
    arch_model: &Architecture,
    rng: &mut R,
) -> Result<Parameters> {
    ensure_compatible(true_model, arch_model)?;
    let support = true_model.input_dist().support_mode();
    construct(true_model, arch_model, Recipe::Optimal, support, 0.0, 0.0, None, rng)
        .map(|s| s.params)
}

/// Random member of the essential parameter set, with its coordinate counts and log volume.
///
/// A numerically singular pass-through product is resampled up to a fixed number of times.
pub fn sample_essential_params<R: Rng + ?Sized>(
    true_model: &TrueModel,
    arch_model: &Architecture,
    config: &EssentialSampleConfig,
    rng: &mut R,
) -> Result<EssentialSample> {
    ensure_compatible(true_model, arch_model)?;
    config.validate()?;
    let mut last_err = None;
    for _ in 0..MAX_RESAMPLES {
        match construct(
            true_model,
            arch_model,
            Recipe::Essential,
            config.support_mode,
            config.epsilon(),
            config.delta,
            config.bounded_bias_floor,
            rng,
        ) {
            Ok(s) => return Ok(s),
            Err(e @ LabError::Singular(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.expect("at least one attempt"))
}
