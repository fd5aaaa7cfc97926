use serde::{Deserialize, Serialize};

use super::input::InputDistSpec;
use crate::error::{LabError, Result};
use crate::network::{Architecture, Parameters};

/// Data-generating network `(w*, b*)` together with its input distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueModel {
    arch: Architecture,
    params: Parameters,
    input_dist: InputDistSpec,
}

impl TrueModel {
    pub fn new(arch: Architecture, params: Parameters, input_dist: InputDistSpec) -> Result<Self> {
        params.check(&arch)?;
        if input_dist.dim() != arch.input_dim() {
            return Err(LabError::Dimension {
                layer: 1,
                expected: arch.input_dim(),
                actual: input_dist.dim(),
            });
        }
        Ok(TrueModel {
            arch,
            params,
            input_dist,
        })
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn params(&self) -> &Parameters {
        &self.params
    }

    pub fn input_dist(&self) -> &InputDistSpec {
        &self.input_dist
    }

    pub fn with_input_dist(&self, input_dist: InputDistSpec) -> Result<Self> {
        Self::new(self.arch.clone(), self.params.clone(), input_dist)
    }

    /// Largest absolute parameter entry.
    pub fn max_abs_param(&self) -> f64 {
        self.params.as_flat().iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Serialize, Deserialize)]
struct TrueModelJson {
    arch: Architecture,
    params: serde_json::Value,
    input_dist: InputDistSpec,
}

impl Serialize for TrueModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TrueModelJson {
            arch: self.arch.clone(),
            params: serde_json::to_value(&self.params).map_err(serde::ser::Error::custom)?,
            input_dist: self.input_dist,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TrueModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = TrueModelJson::deserialize(d)?;
        let params =
            Parameters::from_json_value(&j.arch, j.params).map_err(serde::de::Error::custom)?;
        TrueModel::new(j.arch, params, j.input_dist).map_err(serde::de::Error::custom)
    }
}
