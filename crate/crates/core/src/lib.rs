//! Numerical laboratory for deep ReLU networks viewed as Bayesian statistical models.
//!
//! The crate is organised in three layers:
//!
//! - [`network`] and [`lemmas`]: deterministic network evaluation plus the elementary
//!   contraction / Lipschitz / norm inequalities satisfied by ReLU layers.
//! - [`embedding`]: embeds a small "true" network inside a wider and deeper model, either
//!   exactly (optimal parameters) or as a random member of the essential parameter set, and
//!   evaluates the free-energy coefficient `lambda_relu`.
//! - [`bayes`]: data generation, Gaussian likelihood, posterior sampling and free-energy
//!   estimation by thermodynamic integration with an exhaustive quadrature oracle.
//!
//! Every random operation takes an explicit generator; there is no global state.

pub mod bayes;
pub mod embedding;
pub mod error;
pub mod lemmas;
pub mod linalg;
pub mod network;

pub use error::{LabError, Result};
pub use network::{Activation, Architecture, LayerOutput, Parameters};

/// Seeded generator used throughout the crate.
pub type LabRng = rand_chacha::ChaCha8Rng;

/// Build a [`LabRng`] from a `u64` seed.
pub fn seeded_rng(seed: u64) -> LabRng {
    use rand::SeedableRng;
    LabRng::seed_from_u64(seed)
}
