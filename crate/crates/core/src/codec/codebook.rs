//! Random codebooks, regenerated independently for every block.

use super::BlockCodeParams;
use crate::error::{Error, Result};
use crate::rng::{self, tag};

/// Largest number of stored codeword symbols.
pub const MAX_CODEBOOK_SYMBOLS: f64 = 1e9;

/// `⌊2^(nR)⌋`, exact while it fits in a double's mantissa.
pub fn codebook_size(n: usize, rate: f64) -> f64 {
    // The nudge keeps an integral `nR` from flooring one below.
    (n as f64 * rate + 1e-9).exp2().floor()
}

/// One block's codebooks: `u(i)` for `i = 1..=M` and `v(j, ℓ)` for
/// `j = 1..=M`, `ℓ = 1..=M̃`, as contiguous `n`-symbol rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockCodebook {
    pub n: usize,
    pub m: usize,
    pub m_tilde: usize,
    u: Vec<u8>,
    v: Vec<u8>,
}

impl BlockCodebook {
    pub fn u(&self, i: usize) -> &[u8] {
        &self.u[(i - 1) * self.n..i * self.n]
    }

    pub fn v(&self, j: usize, l: usize) -> &[u8] {
        let row = (j - 1) * self.m_tilde + (l - 1);
        &self.v[row * self.n..(row + 1) * self.n]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codebooks {
    /// `blocks[b - 1]` serves block `b`.
    pub blocks: Vec<BlockCodebook>,
}

/// Stored symbols for all blocks.
pub fn codebook_symbols(params: &BlockCodeParams) -> f64 {
    let m = codebook_size(params.n, params.r);
    let mt = codebook_size(params.n, params.r_tilde);
    params.blocks as f64 * params.n as f64 * (m + m * mt)
}

/// Draws every block's codebooks i.i.d. from `q_u` and `q_v`.
pub fn generate_codebooks(params: &BlockCodeParams, q_u: &[f64], q_v: &[f64]) -> Result<Codebooks> {
    params.validate()?;
    let total = codebook_symbols(params);
    if total > MAX_CODEBOOK_SYMBOLS {
        return Err(Error::TooLarge(format!(
            "codebooks need {total:.3e} symbols, the limit is {MAX_CODEBOOK_SYMBOLS:.0e}"
        )));
    }
    if q_u.len() > 256 || q_v.len() > 256 {
        return Err(Error::TooLarge("codebook alphabets are limited to 256 symbols".into()));
    }
    let blocks = (1..=params.blocks).map(|b| generate_block(params, b, q_u, q_v)).collect();
    Ok(Codebooks { blocks })
}

pub(crate) fn generate_block(params: &BlockCodeParams, b: usize, q_u: &[f64], q_v: &[f64]) -> BlockCodebook {
    let n = params.n;
    let m = codebook_size(n, params.r) as usize;
    let m_tilde = codebook_size(n, params.r_tilde) as usize;
    let mut r = rng::stream(params.seed, tag::CODEBOOK, b as u64);
    let mut u = vec![0u8; m * n];
    super::ensemble::fill_iid(&mut r, q_u, &mut u);
    let mut v = vec![0u8; m * m_tilde * n];
    super::ensemble::fill_iid(&mut r, q_v, &mut v);
    BlockCodebook { n, m, m_tilde, u, v }
}
