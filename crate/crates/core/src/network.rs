//! Fully connected ReLU networks.
//!
//! Layers are numbered `1..=N` with layer 1 the input. Weights and biases are indexed by their
//! destination layer `k = 2..=N`: `w(k)` has shape `H_k x H_{k-1}` and `b(k)` length `H_k`.
//! The recursion is `f(1) = x`, `f(k) = relu(w(k) f(k-1) + b(k))`; the last layer applies
//! `relu` or the identity depending on [`Activation`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::{MatRef, Matrix};

/// Activation applied at the output layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Linear,
}

impl std::str::FromStr for Activation {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "linear" => Ok(Activation::Linear),
            other => Err(LabError::InvalidArgument(format!(
                "unknown output activation '{other}'"
            ))),
        }
    }
}

/// Layer widths `H_1..H_N` plus the output activation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ArchitectureJson")]
pub struct Architecture {
    widths: Vec<usize>,
    #[serde(default)]
    output_activation: Activation,
}

#[derive(Deserialize)]
struct ArchitectureJson {
    widths: Vec<usize>,
    #[serde(default)]
    output_activation: Activation,
}

impl TryFrom<ArchitectureJson> for Architecture {
    type Error = LabError;

    fn try_from(a: ArchitectureJson) -> Result<Self> {
        Architecture::new(a.widths, a.output_activation)
    }
}

impl Architecture {
    pub fn new(widths: Vec<usize>, output_activation: Activation) -> Result<Self> {
        if widths.len() < 2 {
            return Err(LabError::InvalidArchitecture(format!(
                "need at least 2 layers, got {}",
                widths.len()
            )));
        }
        if let Some(pos) = widths.iter().position(|&h| h == 0) {
            return Err(LabError::InvalidArchitecture(format!(
                "layer {} has width 0",
                pos + 1
            )));
        }
        Ok(Architecture {
            widths,
            output_activation,
        })
    }

    /// Architecture with a ReLU output layer.
    pub fn relu(widths: &[usize]) -> Result<Self> {
        Self::new(widths.to_vec(), Activation::Relu)
    }

    pub fn linear(widths: &[usize]) -> Result<Self> {
        Self::new(widths.to_vec(), Activation::Linear)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    /// Number of layers `N`.
    pub fn depth(&self) -> usize {
        self.widths.len()
    }

    /// Width `H_k` for 1-based `k`.
    pub fn width(&self, k: usize) -> usize {
        self.widths[k - 1]
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().expect("validated non-empty")
    }

    pub fn output_activation(&self) -> Activation {
        self.output_activation
    }

    pub fn with_output_activation(&self, act: Activation) -> Self {
        Architecture {
            widths: self.widths.clone(),
            output_activation: act,
        }
    }

    pub fn max_width(&self) -> usize {
        self.widths.iter().copied().max().unwrap_or(0)
    }

    /// Total number of weights and biases.
    pub fn num_params(&self) -> usize {
        self.widths.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
    }

    /// Offset of `w(k)` inside the flat parameter vector; `b(k)` follows immediately.
    pub fn layer_offset(&self, k: usize) -> usize {
        self.widths[..k - 1].windows(2).map(|w| w[1] * (w[0] + 1)).sum()
    }

    /// Flat index of weight entry `w(k)[r][c]`.
    pub fn weight_index(&self, k: usize, r: usize, c: usize) -> usize {
        self.layer_offset(k) + r * self.width(k - 1) + c
    }

    /// Flat index of bias entry `b(k)[r]`.
    pub fn bias_index(&self, k: usize, r: usize) -> usize {
        self.layer_offset(k) + self.width(k) * self.width(k - 1) + r
    }
}

/// Weights and biases of one network, stored as a single flat vector.
///
/// The flat layout is `w(2), b(2), w(3), b(3), ...` with weights row-major. The same layout is
/// used as the coordinate system of the posterior sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    widths: Vec<usize>,
    data: Vec<f64>,
}

impl Parameters {
    pub fn zeros(arch: &Architecture) -> Self {
        Parameters {
            widths: arch.widths.clone(),
            data: vec![0.0; arch.num_params()],
        }
    }

    pub fn from_flat(arch: &Architecture, data: Vec<f64>) -> Result<Self> {
        if data.len() != arch.num_params() {
            return Err(LabError::Dimension {
                layer: 0,
                expected: arch.num_params(),
                actual: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(LabError::NonFinite("parameters".into()));
        }
        Ok(Parameters {
            widths: arch.widths.clone(),
            data,
        })
    }

    /// Build from per-layer weights and biases, listed for `k = 2..=N`.
    pub fn from_layers(arch: &Architecture, weights: &[Matrix], biases: &[Vec<f64>]) -> Result<Self> {
        let n = arch.depth();
        if weights.len() != n - 1 || biases.len() != n - 1 {
            return Err(LabError::Dimension {
                layer: 0,
                expected: n - 1,
                actual: weights.len().min(biases.len()),
            });
        }
        let mut p = Parameters::zeros(arch);
        for k in 2..=n {
            let (w, b) = (&weights[k - 2], &biases[k - 2]);
            if w.rows != arch.width(k) {
                return Err(LabError::Dimension {
                    layer: k,
                    expected: arch.width(k),
                    actual: w.rows,
                });
            }
            if w.cols != arch.width(k - 1) {
                return Err(LabError::Dimension {
                    layer: k,
                    expected: arch.width(k - 1),
                    actual: w.cols,
                });
            }
            if b.len() != arch.width(k) {
                return Err(LabError::Dimension {
                    layer: k,
                    expected: arch.width(k),
                    actual: b.len(),
                });
            }
            p.weight_mut(k).copy_from_slice(&w.data);
            p.bias_mut(k).copy_from_slice(b);
        }
        if p.data.iter().any(|v| !v.is_finite()) {
            return Err(LabError::NonFinite("parameters".into()));
        }
        Ok(p)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    pub fn depth(&self) -> usize {
        self.widths.len()
    }

    fn offset(&self, k: usize) -> usize {
        self.widths[..k - 1].windows(2).map(|w| w[1] * (w[0] + 1)).sum()
    }

    fn weight_range(&self, k: usize) -> std::ops::Range<usize> {
        let o = self.offset(k);
        o..o + self.widths[k - 1] * self.widths[k - 2]
    }

    fn bias_range(&self, k: usize) -> std::ops::Range<usize> {
        let o = self.offset(k) + self.widths[k - 1] * self.widths[k - 2];
        o..o + self.widths[k - 1]
    }

    /// Weight matrix `w(k)`, `2 <= k <= N`.
    pub fn weight(&self, k: usize) -> MatRef<'_> {
        MatRef::new(
            self.widths[k - 1],
            self.widths[k - 2],
            &self.data[self.weight_range(k)],
        )
    }

    pub fn weight_mut(&mut self, k: usize) -> &mut [f64] {
        let r = self.weight_range(k);
        &mut self.data[r]
    }

    pub fn bias(&self, k: usize) -> &[f64] {
        &self.data[self.bias_range(k)]
    }

    pub fn bias_mut(&mut self, k: usize) -> &mut [f64] {
        let r = self.bias_range(k);
        &mut self.data[r]
    }

    /// Shape check against an architecture.
    pub fn check(&self, arch: &Architecture) -> Result<()> {
        if self.widths.len() != arch.widths.len() {
            return Err(LabError::Dimension {
                layer: 0,
                expected: arch.depth(),
                actual: self.widths.len(),
            });
        }
        for (i, (&a, &b)) in arch.widths.iter().zip(&self.widths).enumerate() {
            if a != b {
                return Err(LabError::Dimension {
                    layer: i + 1,
                    expected: a,
                    actual: b,
                });
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct ParametersJson {
    weights: BTreeMap<usize, Vec<Vec<f64>>>,
    biases: BTreeMap<usize, Vec<f64>>,
}

impl Serialize for Parameters {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.depth();
        let json = ParametersJson {
            weights: (2..=n)
                .map(|k| (k, self.weight(k).to_owned().to_rows()))
                .collect(),
            biases: (2..=n).map(|k| (k, self.bias(k).to_vec())).collect(),
        };
        json.serialize(s)
    }
}

impl Parameters {
    /// Parse the JSON form produced by `Serialize`, checking shapes against `arch`.
    pub fn from_json_value(arch: &Architecture, value: serde_json::Value) -> Result<Self> {
        let json: ParametersJson = serde_json::from_value(value)?;
        let n = arch.depth();
        let mut weights = Vec::with_capacity(n - 1);
        let mut biases = Vec::with_capacity(n - 1);
        for k in 2..=n {
            let rows = json.weights.get(&k).ok_or(LabError::Dimension {
                layer: k,
                expected: arch.width(k),
                actual: 0,
            })?;
            let w = if rows.is_empty() {
                Matrix::zeros(0, arch.width(k - 1))
            } else {
                Matrix::from_rows(rows)?
            };
            weights.push(w);
            biases.push(json.biases.get(&k).cloned().unwrap_or_default());
        }
        Parameters::from_layers(arch, &weights, &biases)
    }
}

/// Output of one layer, `f(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerOutput {
    pub values: Vec<f64>,
    pub layer_index: usize,
}

/// Componentwise `max(t_i, 0)`.
pub fn relu(t: &[f64]) -> Vec<f64> {
    t.iter().map(|&v| v.max(0.0)).collect()
}

#[inline]
fn relu_in_place(t: &mut [f64]) {
    for v in t.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

fn check_input(arch: &Architecture, params: &Parameters, x: &[f64]) -> Result<()> {
    params.check(arch)?;
    if x.len() != arch.input_dim() {
        return Err(LabError::Dimension {
            layer: 1,
            expected: arch.input_dim(),
            actual: x.len(),
        });
    }
    Ok(())
}

/// Network output `f(N)(w, b, x)`.
pub fn forward(arch: &Architecture, params: &Parameters, x: &[f64]) -> Result<Vec<f64>> {
    check_input(arch, params, x)?;
    let mut ev = Evaluator::new(arch);
    Ok(ev.eval(arch, params.as_flat(), x).to_vec())
}

/// Output of layer `k`, `1 <= k <= N`.
pub fn layer_output(
    arch: &Architecture,
    params: &Parameters,
    x: &[f64],
    k: usize,
) -> Result<LayerOutput> {
    if k == 0 || k > arch.depth() {
        return Err(LabError::LayerOutOfRange {
            index: k,
            max: arch.depth(),
        });
    }
    check_input(arch, params, x)?;
    let mut outs = all_layer_outputs(arch, params, x)?;
    Ok(LayerOutput {
        values: outs.swap_remove(k - 1),
        layer_index: k,
    })
}

/// `[f(1), f(2), ..., f(N)]`.
pub fn all_layer_outputs(
    arch: &Architecture,
    params: &Parameters,
    x: &[f64],
) -> Result<Vec<Vec<f64>>> {
    check_input(arch, params, x)?;
    let n = arch.depth();
    let mut outs = Vec::with_capacity(n);
    outs.push(x.to_vec());
    for k in 2..=n {
        let mut h = params.weight(k).matvec(&outs[k - 2]);
        for (hi, bi) in h.iter_mut().zip(params.bias(k)) {
            *hi += bi;
        }
        if k < n || arch.output_activation() == Activation::Relu {
            relu_in_place(&mut h);
        }
        outs.push(h);
    }
    Ok(outs)
}

/// Allocation-free evaluator over a flat parameter slice.
///
/// Shapes are not checked; callers validate once up front. This is the likelihood hot path.
#[derive(Debug, Clone)]
pub struct Evaluator {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Evaluator {
    pub fn new(arch: &Architecture) -> Self {
        let m = arch.max_width();
        Evaluator {
            a: vec![0.0; m],
            b: vec![0.0; m],
        }
    }

    /// Evaluate the network; the returned slice has length `H_N`.
    pub fn eval(&mut self, arch: &Architecture, theta: &[f64], x: &[f64]) -> &[f64] {
        let widths = arch.widths();
        let n = widths.len();
        self.a[..widths[0]].copy_from_slice(x);
        let mut off = 0;
        for k in 1..n {
            let (cols, rows) = (widths[k - 1], widths[k]);
            let w = &theta[off..off + rows * cols];
            let bias = &theta[off + rows * cols..off + rows * cols + rows];
            off += rows * (cols + 1);
            let input = &self.a[..cols];
            let out = &mut self.b[..rows];
            for r in 0..rows {
                let row = &w[r * cols..(r + 1) * cols];
                let mut acc = bias[r];
                for c in 0..cols {
                    acc += row[c] * input[c];
                }
                out[r] = acc;
            }
            if k + 1 < n || arch.output_activation() == Activation::Relu {
                relu_in_place(out);
            }
            std::mem::swap(&mut self.a, &mut self.b);
        }
        &self.a[..widths[n - 1]]
    }
}
