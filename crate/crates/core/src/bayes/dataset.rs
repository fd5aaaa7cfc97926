use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::embedding::TrueModel;
use crate::error::{LabError, Result};
use crate::network::Evaluator;

/// `n` input/output pairs, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    input_dim: usize,
    output_dim: usize,
    inputs: Vec<f64>,
    outputs: Vec<f64>,
    /// Seed of the generator that produced the data, when known.
    pub seed: Option<u64>,
}

impl Dataset {
    pub fn new(input_dim: usize, output_dim: usize) -> Self {
        Dataset {
            input_dim,
            output_dim,
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed: None,
        }
    }

    pub fn from_pairs(pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<Self> {
        let (x0, y0) = pairs
            .first()
            .ok_or_else(|| LabError::InvalidArgument("empty dataset".into()))?;
        let mut d = Dataset::new(x0.len(), y0.len());
        for (x, y) in pairs {
            d.push(x, y)?;
        }
        Ok(d)
    }

    pub fn push(&mut self, x: &[f64], y: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(LabError::LengthMismatch {
                left: self.input_dim,
                right: x.len(),
            });
        }
        if y.len() != self.output_dim {
            return Err(LabError::LengthMismatch {
                left: self.output_dim,
                right: y.len(),
            });
        }
        self.inputs.extend_from_slice(x);
        self.outputs.extend_from_slice(y);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.inputs.len().checked_div(self.input_dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn output(&self, i: usize) -> &[f64] {
        &self.outputs[i * self.output_dim..(i + 1) * self.output_dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], &[f64])> {
        (0..self.len()).map(move |i| (self.input(i), self.output(i)))
    }

    /// First `m` pairs.
    pub fn prefix(&self, m: usize) -> Dataset {
        let m = m.min(self.len());
        Dataset {
            input_dim: self.input_dim,
            output_dim: self.output_dim,
            inputs: self.inputs[..m * self.input_dim].to_vec(),
            outputs: self.outputs[..m * self.output_dim].to_vec(),
            seed: self.seed,
        }
    }

    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if (self.input_dim, self.output_dim) != (other.input_dim, other.output_dim) {
            return Err(LabError::LengthMismatch {
                left: self.input_dim,
                right: other.input_dim,
            });
        }
        let mut d = self.clone();
        d.inputs.extend_from_slice(&other.inputs);
        d.outputs.extend_from_slice(&other.outputs);
        Ok(d)
    }
}

/// Draw `n` pairs `X ~ q(x)`, `Y = f*(X) + N(0, I)`.
pub fn generate_dataset<R: Rng + ?Sized>(true_model: &TrueModel, n: usize, rng: &mut R) -> Result<Dataset> {
    generate_dataset_with_noise(true_model, n, 1.0, rng)
}

/// As [`generate_dataset`] with the noise scaled by `noise_scale` (0 gives noiseless data).
pub fn generate_dataset_with_noise<R: Rng + ?Sized>(
    true_model: &TrueModel,
    n: usize,
    noise_scale: f64,
    rng: &mut R,
) -> Result<Dataset> {
    if n == 0 {
        return Err(LabError::InvalidArgument("dataset size must be at least 1".into()));
    }
    let arch = true_model.arch();
    let mut ev = Evaluator::new(arch);
    let mut d = Dataset::new(arch.input_dim(), arch.output_dim());
    let mut x = vec![0.0; arch.input_dim()];
    let mut y = vec![0.0; arch.output_dim()];
    for _ in 0..n {
        true_model.input_dist().sample_into(rng, &mut x);
        let f = ev.eval(arch, true_model.params().as_flat(), &x);
        for (yi, fi) in y.iter_mut().zip(f) {
            let e: f64 = rng.sample(StandardNormal);
            *yi = fi + noise_scale * e;
        }
        d.push(&x, &y)?;
    }
    Ok(d)
}
