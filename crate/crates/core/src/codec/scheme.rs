//! Encoder and decoder steps over stored codebooks.

use rand::Rng;

use super::codebook::BlockCodebook;
use super::typical::TypicalSet;
use crate::state_comm::Decoder;

/// Smallest `i` with `(x0, u(i))` typical.
pub fn find_u_index(x0: &[u8], cb: &BlockCodebook, set_x0u: &TypicalSet) -> Option<usize> {
    (1..=cb.m).find(|&i| set_x0u.contains(&[x0, cb.u(i)]))
}

/// Every `ℓ` with `(x0, u, v(j, ℓ))` typical.
pub fn typical_l_indices(x0: &[u8], u: &[u8], cb: &BlockCodebook, j: usize, set_x0uv: &TypicalSet) -> Vec<usize> {
    (1..=cb.m_tilde).filter(|&l| set_x0uv.contains(&[x0, u, cb.v(j, l)])).collect()
}

/// Uniform pick, if there is anything to pick from.
pub fn pick_uniform<T: Copy, R: Rng + ?Sized>(rng: &mut R, items: &[T]) -> Option<T> {
    (!items.is_empty()).then(|| items[rng.random_range(0..items.len())])
}

/// Agent 2's output at position `t` of a block: `g(u_t(î_b), y_t)`. Nothing
/// beyond the current channel output enters.
pub fn decode_symbol(t: usize, y_t: u8, u_codeword: &[u8], g: &Decoder) -> u8 {
    g.apply(u_codeword[t] as usize, y_t as usize) as u8
}

/// Symbol-by-symbol decoder for one block, fed one channel output at a time.
#[derive(Debug)]
pub struct CausalDecoder<'a> {
    u_codeword: &'a [u8],
    g: &'a Decoder,
    t: usize,
}

impl<'a> CausalDecoder<'a> {
    pub fn new(u_codeword: &'a [u8], g: &'a Decoder) -> Self {
        Self { u_codeword, g, t: 0 }
    }

    pub fn push(&mut self, y_t: u8) -> u8 {
        let x2 = decode_symbol(self.t, y_t, self.u_codeword, self.g);
        self.t += 1;
        x2
    }
}

/// End-of-block search over all `(j, ℓ)` with `(û, y, v(j, ℓ))` typical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockEnd {
    /// The uniformly chosen pair; `None` is a packing failure.
    pub pick: Option<(usize, usize)>,
    pub candidates: Vec<(usize, usize)>,
}

pub fn decode_block_end<R: Rng + ?Sized>(
    u_hat: &[u8],
    y: &[u8],
    cb: &BlockCodebook,
    set_uyv: &TypicalSet,
    rng: &mut R,
) -> BlockEnd {
    let candidates: Vec<(usize, usize)> = (1..=cb.m)
        .flat_map(|j| (1..=cb.m_tilde).map(move |l| (j, l)))
        .filter(|&(j, l)| set_uyv.contains(&[u_hat, y, cb.v(j, l)]))
        .collect();
    BlockEnd { pick: pick_uniform(rng, &candidates), candidates }
}
