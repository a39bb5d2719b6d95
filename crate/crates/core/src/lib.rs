//! Coordination through actions over finite alphabets.
//!
//! Two agents act repeatedly in a random i.i.d. state. Agent 1 sees the state
//! (causally or non-causally) and Agent 2 only sees a noisy channel output
//! driven by both agents' actions. This crate decides which joint laws of
//! `(state, action 1, action 2)` the agents can implement, optimizes a common
//! payoff over them, computes the analogous distortion optima for state
//! communication, and simulates the block-Markov random code that achieves
//! them.
//!
//! Modules:
//! - [`prob`]: pmfs, kernels, entropy and mutual information (bits).
//! - [`coordination`]: implementability tests and payoff optimization.
//! - [`power_control`]: the two-pair interference channel scenario and SNR sweep.
//! - [`state_comm`]: distortion optima for the four encoder/decoder causality cases.
//! - [`codec`]: Monte Carlo simulation of the block-Markov coding scheme.

pub mod codec;
pub mod coordination;
pub mod error;
pub mod optim;
pub mod power_control;
pub mod prob;
pub mod rng;
pub mod state_comm;

pub use error::{Error, Result};
