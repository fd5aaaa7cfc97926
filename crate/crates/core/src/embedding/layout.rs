use crate::network::Architecture;

/// Role of a model layer in the embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Section {
    Input,
    /// `2 <= k <= N*-1`: the `A` block copies a true layer.
    Copy,
    /// `N* <= k <= N-1`: the `A` block passes its input through.
    Pass,
    Output,
}

/// Sizes of the `A` (tracking) and `B` (redundant) unit blocks of each model layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLayout {
    true_widths: Vec<usize>,
    model_widths: Vec<usize>,
}

impl BlockLayout {
    /// Assumes the architectures are compatible.
    pub fn new(arch_true: &Architecture, arch_model: &Architecture) -> Self {
        BlockLayout {
            true_widths: arch_true.widths().to_vec(),
            model_widths: arch_model.widths().to_vec(),
        }
    }

    pub fn true_depth(&self) -> usize {
        self.true_widths.len()
    }

    pub fn model_depth(&self) -> usize {
        self.model_widths.len()
    }

    pub fn section(&self, k: usize) -> Section {
        let (nt, n) = (self.true_depth(), self.model_depth());
        if k == 1 {
            Section::Input
        } else if k == n {
            Section::Output
        } else if k < nt {
            Section::Copy
        } else {
            Section::Pass
        }
    }

    /// Number of `A` units in model layer `k`.
    pub fn a_dim(&self, k: usize) -> usize {
        let nt = self.true_depth();
        match self.section(k) {
            Section::Input | Section::Copy => self.true_widths[k - 1],
            Section::Pass => self.true_widths[nt - 2],
            Section::Output => self.true_widths[nt - 1],
        }
    }

    /// Number of `B` units in model layer `k`.
    pub fn b_dim(&self, k: usize) -> usize {
        self.model_widths[k - 1] - self.a_dim(k)
    }
}
