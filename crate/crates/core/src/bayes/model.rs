use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::TrueModel;
use crate::error::{LabError, Result};
use crate::network::{Architecture, Parameters};

pub const DEFAULT_PRIOR_HALF_WIDTH: f64 = 5.0;

/// A network whose parameters are partly pinned.
///
/// The free coordinates are indices into the flat parameter vector; everything else keeps the
/// value in `base`. A model with every coordinate free is the ordinary network model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpace {
    arch: Architecture,
    base: Parameters,
    free: Vec<usize>,
}

impl ModelSpace {
    /// All parameters free.
    pub fn full(arch: &Architecture) -> Self {
        ModelSpace {
            arch: arch.clone(),
            base: Parameters::zeros(arch),
            free: (0..arch.num_params()).collect(),
        }
    }

    pub fn pinned(arch: &Architecture, base: Parameters, free: Vec<usize>) -> Result<Self> {
        base.check(arch)?;
        let mut sorted = free.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != free.len() {
            return Err(LabError::InvalidArgument("duplicate free coordinates".into()));
        }
        if let Some(&bad) = free.iter().find(|&&i| i >= arch.num_params()) {
            return Err(LabError::InvalidArgument(format!(
                "free coordinate {bad} out of range for {} parameters",
                arch.num_params()
            )));
        }
        Ok(ModelSpace {
            arch: arch.clone(),
            base,
            free,
        })
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn base(&self) -> &Parameters {
        &self.base
    }

    pub fn free_indices(&self) -> &[usize] {
        &self.free
    }

    /// Number of free coordinates.
    pub fn dim(&self) -> usize {
        self.free.len()
    }

    /// Write free values into a full flat parameter vector.
    #[inline]
    pub fn fill(&self, free: &[f64], full: &mut [f64]) {
        for (&i, &v) in self.free.iter().zip(free) {
            full[i] = v;
        }
    }

    pub fn params(&self, free: &[f64]) -> Parameters {
        let mut full = self.base.as_flat().to_vec();
        self.fill(free, &mut full);
        Parameters::from_flat(&self.arch, full).expect("shape preserved")
    }

    pub fn free_values(&self, params: &Parameters) -> Vec<f64> {
        self.free.iter().map(|&i| params.as_flat()[i]).collect()
    }
}

/// Normalized uniform prior on `[-half_width, half_width]^d` over the free coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prior {
    pub half_width: f64,
}

impl Default for Prior {
    fn default() -> Self {
        Prior {
            half_width: DEFAULT_PRIOR_HALF_WIDTH,
        }
    }
}

impl Prior {
    pub fn uniform(half_width: f64) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(LabError::InvalidArgument(format!(
                "prior half-width {half_width} must be positive"
            )));
        }
        Ok(Prior { half_width })
    }

    /// The box must clear every true parameter by a margin of 2.
    pub fn validate_for(&self, true_model: &TrueModel) -> Result<()> {
        let need = true_model.max_abs_param() + 2.0;
        if self.half_width > need {
            Ok(())
        } else {
            Err(LabError::InvalidArgument(format!(
                "prior half-width {} must exceed max |true parameter| + 2 = {need}",
                self.half_width
            )))
        }
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.iter().all(|v| v.abs() <= self.half_width)
    }

    /// `log phi` of the normalized density on a `dim`-dimensional box.
    pub fn log_norm(&self, dim: usize) -> f64 {
        -(dim as f64) * (2.0 * self.half_width).ln()
    }

    pub fn log_density(&self, theta: &[f64]) -> f64 {
        if self.contains(theta) {
            self.log_norm(theta.len())
        } else {
            f64::NEG_INFINITY
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, dim: usize, rng: &mut R) -> Vec<f64> {
        (0..dim)
            .map(|_| rng.random_range(-self.half_width..=self.half_width))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::InputDistSpec;

    #[test]
    fn pinned_fill_and_validation() {
        let arch = Architecture::linear(&[1, 1]).unwrap();
        let base = Parameters::from_flat(&arch, vec![0.0, 7.0]).unwrap();
        let m = ModelSpace::pinned(&arch, base, vec![1]).unwrap();
        assert_eq!(m.dim(), 1);
        assert_eq!(m.params(&[2.5]).as_flat(), &[0.0, 2.5]);
        assert!(ModelSpace::pinned(&arch, Parameters::zeros(&arch), vec![2]).is_err());
        assert!(ModelSpace::pinned(&arch, Parameters::zeros(&arch), vec![0, 0]).is_err());
    }

    #[test]
    fn prior_density_and_validation() {
        let p = Prior::uniform(2.0).unwrap();
        assert!((p.log_density(&[0.0, 1.9]) - (-2.0 * 4f64.ln())).abs() < 1e-15);
        assert_eq!(p.log_density(&[2.1]), f64::NEG_INFINITY);
        assert!(Prior::uniform(0.0).is_err());

        let arch = Architecture::linear(&[1, 1]).unwrap();
        let t = TrueModel::new(
            arch.clone(),
            Parameters::from_flat(&arch, vec![1.5, -0.5]).unwrap(),
            InputDistSpec::gaussian(1),
        )
        .unwrap();
        assert!(Prior::uniform(3.0).unwrap().validate_for(&t).is_err());
        assert!(Prior::uniform(3.6).unwrap().validate_for(&t).is_ok());
    }
}
