use serde::Serialize;

use crate::network::Architecture;

/// Conditions under which the model can realize the true network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Condition {
    /// `N* <= N`
    DepthAtLeastTrue,
    /// `H*_1 = H_1`
    InputWidthEqual,
    /// `H*_{N*} = H_N`
    OutputWidthEqual,
    /// `H*_k <= H_k` for a true hidden layer `k`.
    HiddenWidth { layer: usize },
    /// `H*_{N*-1} <= H_k` for an extra layer `k`.
    ExtraLayerWidth { layer: usize },
    /// Both networks must use the same output activation.
    OutputActivation,
}

impl std::fmt::Display for Condition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Condition::DepthAtLeastTrue => write!(f, "N* <= N"),
            Condition::InputWidthEqual => write!(f, "H*_1 = H_1"),
            Condition::OutputWidthEqual => write!(f, "H*_N* = H_N"),
            Condition::HiddenWidth { layer } => write!(f, "H*_{layer} <= H_{layer}"),
            Condition::ExtraLayerWidth { layer } => write!(f, "H*_(N*-1) <= H_{layer}"),
            Condition::OutputActivation => write!(f, "output activations match"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompatibilityReport {
    pub satisfied: bool,
    pub violations: Vec<Condition>,
}

impl CompatibilityReport {
    pub fn violation_strings(&self) -> Vec<String> {
        self.violations.iter().map(ToString::to_string).collect()
    }
}

pub fn check_compatibility(arch_true: &Architecture, arch_model: &Architecture) -> CompatibilityReport {
    let (nt, n) = (arch_true.depth(), arch_model.depth());
    let mut v = Vec::new();
    if nt > n {
        v.push(Condition::DepthAtLeastTrue);
    }
    if arch_true.input_dim() != arch_model.input_dim() {
        v.push(Condition::InputWidthEqual);
    }
    if arch_true.output_dim() != arch_model.output_dim() {
        v.push(Condition::OutputWidthEqual);
    }
    for k in 2..nt.min(n + 1) {
        if arch_true.width(k) > arch_model.width(k) {
            v.push(Condition::HiddenWidth { layer: k });
        }
    }
    if nt <= n {
        for k in nt..n {
            if arch_true.width(nt - 1) > arch_model.width(k) {
                v.push(Condition::ExtraLayerWidth { layer: k });
            }
        }
    }
    if arch_true.output_activation() != arch_model.output_activation() {
        v.push(Condition::OutputActivation);
    }
    CompatibilityReport {
        satisfied: v.is_empty(),
        violations: v,
    }
}
