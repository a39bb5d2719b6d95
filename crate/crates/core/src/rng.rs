//! Seed splitting. Every random work unit (a restart, a Monte Carlo trial, a
//! block) draws from its own ChaCha stream keyed by `(master seed, purpose,
//! index)`, so results do not depend on how work is scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

pub type StreamRng = ChaCha8Rng;

/// Purpose tags; distinct tags never share a stream.
pub mod tag {
    pub const SLACK_RESTART: u32 = 1;
    pub const PAYOFF_RESTART: u32 = 2;
    pub const CAUSAL_SIM: u32 = 3;
    pub const DISTORTION_RESTART: u32 = 4;
    pub const CODEBOOK: u32 = 5;
    pub const SOURCE: u32 = 6;
    pub const ENCODER: u32 = 7;
    pub const CHANNEL: u32 = 8;
    pub const DECODER: u32 = 9;
    pub const TRIAL: u32 = 10;
    pub const ALTERNATING: u32 = 11;
}

pub fn stream(seed: u64, tag: u32, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((tag as u64) << 48) ^ index);
    rng
}

/// Derives a child seed, for handing a whole sub-computation its own master seed.
pub fn child_seed(seed: u64, tag: u32, index: u64) -> u64 {
    stream(seed, tag, index).random()
}

/// A Dirichlet(1, .., 1) draw, i.e. a uniform point of the simplex.
pub fn uniform_simplex<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let mut row: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = row.iter().sum();
    row.iter_mut().for_each(|x| *x /= total);
    row
}

/// Draws an index from a pmf by inversion.
pub fn sample_index<R: Rng + ?Sized>(rng: &mut R, pmf: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in pmf.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Round-off: return the last symbol with positive mass.
    pmf.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}
