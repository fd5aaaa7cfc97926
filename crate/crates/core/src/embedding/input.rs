use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// How much is known about the support of the input distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SupportMode {
    General,
    Nonnegative,
    Bounded,
}

impl std::str::FromStr for SupportMode {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(SupportMode::General),
            "nonnegative" => Ok(SupportMode::Nonnegative),
            "bounded" => Ok(SupportMode::Bounded),
            other => Err(LabError::InvalidArgument(format!("unknown support mode '{other}'"))),
        }
    }
}

impl std::fmt::Display for SupportMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SupportMode::General => "general",
            SupportMode::Nonnegative => "nonnegative",
            SupportMode::Bounded => "bounded",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputKind {
    GaussianStandard,
    UniformBox { lo: f64, hi: f64 },
    UniformNonneg { hi: f64 },
}

/// Input distribution `q(x)`: i.i.d. coordinates of the given kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InputDistJson")]
pub struct InputDistSpec {
    #[serde(flatten)]
    kind: InputKind,
    dim: usize,
}

#[derive(Deserialize)]
struct InputDistJson {
    #[serde(flatten)]
    kind: InputKind,
    dim: usize,
}

impl TryFrom<InputDistJson> for InputDistSpec {
    type Error = LabError;

    fn try_from(j: InputDistJson) -> Result<Self> {
        InputDistSpec::new(j.kind, j.dim)
    }
}

impl InputDistSpec {
    pub fn new(kind: InputKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(LabError::InvalidArgument("input dimension must be positive".into()));
        }
        match kind {
            InputKind::UniformBox { lo, hi } if !(lo.is_finite() && hi.is_finite() && lo < hi) => {
                Err(LabError::InvalidArgument(format!("bad uniform box [{lo}, {hi}]")))
            }
            InputKind::UniformNonneg { hi } if !(hi.is_finite() && hi > 0.0) => {
                Err(LabError::InvalidArgument(format!("bad nonnegative bound {hi}")))
            }
            _ => Ok(InputDistSpec { kind, dim }),
        }
    }

    pub fn gaussian(dim: usize) -> Self {
        InputDistSpec {
            kind: InputKind::GaussianStandard,
            dim,
        }
    }

    pub fn uniform_box(lo: f64, hi: f64, dim: usize) -> Result<Self> {
        Self::new(InputKind::UniformBox { lo, hi }, dim)
    }

    pub fn uniform_nonneg(hi: f64, dim: usize) -> Result<Self> {
        Self::new(InputKind::UniformNonneg { hi }, dim)
    }

    pub fn kind(&self) -> InputKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support_mode(&self) -> SupportMode {
        match self.kind {
            InputKind::GaussianStandard => SupportMode::General,
            InputKind::UniformBox { .. } => SupportMode::Bounded,
            InputKind::UniformNonneg { .. } => SupportMode::Nonnegative,
        }
    }

    /// Bound on `|x_i|` over the support, if the support is bounded.
    pub fn abs_bound(&self) -> Option<f64> {
        match self.kind {
            InputKind::GaussianStandard => None,
            InputKind::UniformBox { lo, hi } => Some(lo.abs().max(hi.abs())),
            InputKind::UniformNonneg { hi } => Some(hi),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        self.sample_into(rng, &mut x);
        x
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, x: &mut [f64]) {
        for xi in x.iter_mut() {
            *xi = match self.kind {
                InputKind::GaussianStandard => rng.sample(StandardNormal),
                InputKind::UniformBox { lo, hi } => rng.random_range(lo..hi),
                InputKind::UniformNonneg { hi } => rng.random_range(0.0..hi),
            };
        }
    }
}
