use serde::{Deserialize, Serialize};

use super::compat::check_compatibility;
use super::input::SupportMode;
use crate::error::{LabError, Result};
use crate::network::Architecture;

/// Exact non-negative multiple of one half, stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HalfInteger {
    pub twice: u64,
}

impl HalfInteger {
    pub fn from_twice(twice: u64) -> Self {
        HalfInteger { twice }
    }

    pub fn to_f64(self) -> f64 {
        self.twice as f64 / 2.0
    }
}

impl std::fmt::Display for HalfInteger {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.twice.is_multiple_of(2) {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}.5", self.twice / 2)
        }
    }
}

/// Coefficient of `log n` in the free-energy upper bound.
///
/// Bounded or nonnegative support:
/// `(H*_{N*} (H*_{N*-1} + 1) + sum_{k=2}^{N*-1} H*_k (H*_{k-1} + 1)) / 2`, i.e. half the
/// parameter count of the true network. General support adds `H*_3 (H_2 - H*_2) / 2` when the
/// true network has at least one hidden layer.
pub fn lambda_relu(
    arch_true: &Architecture,
    arch_model: &Architecture,
    support: SupportMode,
) -> Result<HalfInteger> {
    let report = check_compatibility(arch_true, arch_model);
    if !report.satisfied {
        return Err(LabError::Incompatible(report.violation_strings()));
    }
    let nt = arch_true.depth();
    let h = |k: usize| arch_true.width(k) as u64;
    let mut twice = h(nt) * (h(nt - 1) + 1);
    for k in 2..nt {
        twice += h(k) * (h(k - 1) + 1);
    }
    if support == SupportMode::General && nt >= 3 {
        twice += h(3) * (arch_model.width(2) as u64 - h(2));
    }
    Ok(HalfInteger::from_twice(twice))
}
