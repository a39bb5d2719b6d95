//! Monte Carlo simulation of the block-Markov random code for state
//! communication.
//!
//! In every block `b` the encoder covers the state block with a codeword
//! `u(i_b)`, then covers `(x0, u)` with some `v(j_b, ℓ)` whose row index
//! `j_b = i_{b+1}` announces the next block's `u`-codeword, and synthesizes
//! `x1` symbol by symbol. Agent 2 outputs `x2_t = g(u_t(î_b), y_t)` as the
//! channel outputs arrive and, at the end of the block, recovers `ĵ_b` by a
//! joint-typicality search, which becomes `î_{b+1}`.
//!
//! Codebooks with up to [`EXPLICIT_AUTO_LIMIT`] symbols are stored and
//! searched. Beyond that ([`SimMode::Ensemble`]) each search is replaced by
//! its exact law over the random codebook: the chance that one codeword is
//! typical is computed exactly (see [`FreshCodeword`]), the number of hits is
//! drawn from it, and the winning codeword is sampled conditioned on being
//! typical. Indices then lose their numeric identity; the trace uses the
//! labels described on [`IndexTrace`].

mod codebook;
mod ensemble;
mod rates;
mod scheme;
mod sim;
mod typical;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use codebook::{
    codebook_size, codebook_symbols, generate_codebooks, BlockCodebook, Codebooks, MAX_CODEBOOK_SYMBOLS,
};
pub use ensemble::FreshCodeword;
pub use rates::{rate_region_check, Deltas, RateRegion};
pub use scheme::{decode_block_end, decode_symbol, find_u_index, typical_l_indices, BlockEnd, CausalDecoder};
pub use sim::{
    argmin_decoder, law_distortion, run_simulation, write_events_csv, BlockEvents, BlockRecord, EventCounts,
    IndexTrace, SimResult, EVENTS_CSV_HEADER, EXPLICIT_AUTO_LIMIT,
};
pub use typical::{is_typical, TypicalSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    /// Explicit when the codebooks fit under [`EXPLICIT_AUTO_LIMIT`].
    #[default]
    Auto,
    Explicit,
    Ensemble,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlockCodeParams {
    pub n: usize,
    pub blocks: usize,
    pub r: f64,
    pub r_tilde: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    pub eps_tilde: f64,
    pub eps: f64,
    pub seed: u64,
    pub mode: SimMode,
}

impl Default for BlockCodeParams {
    fn default() -> Self {
        Self {
            n: 800,
            blocks: 8,
            r: 0.0,
            r_tilde: 0.0,
            eps1: 0.1,
            eps2: 0.15,
            eps3: 0.2,
            eps_tilde: 0.25,
            eps: 0.3,
            seed: 0,
            mode: SimMode::Auto,
        }
    }
}

impl BlockCodeParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.blocks == 0 {
            return Err(Error::Argument("block length and block count must be positive".into()));
        }
        for (name, r) in [("r", self.r), ("r_tilde", self.r_tilde)] {
            if !(r.is_finite() && r >= 0.0) {
                return Err(Error::Argument(format!("{name} = {r} must be finite and non-negative")));
            }
        }
        let ladder = [0.0, self.eps1, self.eps2, self.eps3, self.eps_tilde, self.eps];
        if ladder.windows(2).any(|w| !(w[0] < w[1])) || !self.eps.is_finite() {
            return Err(Error::Argument(format!(
                "need 0 < eps1 < eps2 < eps3 < eps_tilde < eps, got {:?}",
                &ladder[1..]
            )));
        }
        Ok(())
    }
}
