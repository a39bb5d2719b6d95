//! Exact finite-alphabet probability: pmfs, kernels, marginals, entropies and
//! mutual informations. All logarithms are base 2.
//!
//! Conditioning on a zero-probability symbol yields a uniform row; such rows
//! carry zero weight in every expectation, so they never change a result but
//! keep kernels total.

mod alphabet;
mod functional;
mod info;
mod pmf;
pub(crate) mod tensor;

pub use alphabet::Alphabet;
pub use functional::EntropyCombination;
pub use info::{
    conditional_mutual_information, entropy, entropy_of, h2, mutual_information, total_variation, Distance, NEG_CLAMP,
};
pub use pmf::{compose, condition, marginalize, CondPmf, JointPmf, PmfWire, PMF_TOL};
