//! Embedding a data-generating ReLU network inside an overparametrized model.
//!
//! Units of every model layer are split into an `A` part that tracks the true network and a
//! `B` part of redundant units. Layers `2..N*-1` copy the true weights, layers `N*..N-1` pass
//! the `A` signal through (near-)identity blocks with positive biases, and the output layer
//! undoes the accumulated product and bias shift. Redundant units are silenced by strictly
//! negative incoming weights and biases.

mod compat;
mod essential;
mod input;
mod lambda;
mod layout;
mod true_model;
mod verify;

pub use compat::{check_compatibility, CompatibilityReport, Condition};
pub use essential::{
    build_optimal_params, sample_essential_params, CoordinateCounts, EssentialSample,
    EssentialSampleConfig, DEFAULT_DELTA,
};
pub use input::{InputDistSpec, InputKind, SupportMode};
pub use lambda::{lambda_relu, HalfInteger};
pub use layout::BlockLayout;
pub use true_model::TrueModel;
pub use verify::{
    essential_error_profile, max_b_block_output, verify_realization, ProfileRow,
};
