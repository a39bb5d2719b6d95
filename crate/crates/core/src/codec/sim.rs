//! The full pipeline: source, two-pass encoder, channel, causal decoder and
//! end-of-block index decoding, with the per-block error events.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::codebook::{codebook_size, codebook_symbols, generate_codebooks, Codebooks};
use super::ensemble::{fill_iid, ln_factorials, ln_no_hit, success_count, FreshCodeword};
use super::scheme::{decode_block_end, find_u_index, pick_uniform, typical_l_indices, CausalDecoder};
use super::typical::TypicalSet;
use super::{BlockCodeParams, SimMode};
use crate::error::{Error, Result};
use crate::prob::{Alphabet, JointPmf};
use crate::rng::{self, tag, StreamRng};
use crate::state_comm::{Decoder, StateCommProblem};

/// Auto mode stores codebooks up to this many symbols.
pub const EXPLICIT_AUTO_LIMIT: f64 = (1u64 << 24) as f64;

pub const EVENTS_CSV_HEADER: &str = "block,e0,e1,e2,e3,e4,distortion";

/// Stream index offset separating a block's second-pass draws.
const SECOND_PASS: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BlockEvents {
    pub e0: bool,
    pub e1: bool,
    pub e2: bool,
    pub e3: bool,
    /// Only defined from the second block on.
    pub e4: bool,
}

impl BlockEvents {
    pub fn any(&self) -> bool {
        self.e0 || self.e1 || self.e2 || self.e3 || self.e4
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub block: usize,
    #[serde(flatten)]
    pub events: BlockEvents,
    pub distortion: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EventCounts {
    pub e0: usize,
    pub e1: usize,
    pub e2: usize,
    pub e3: usize,
    pub e4: usize,
}

/// Indices of one block, 1-based. With stored codebooks these are the
/// actual indices. Without them, `1` still means index 1, `2` stands for the
/// encoder's index when that is not 1, and `0` for any other index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexTrace {
    pub block: usize,
    pub i: u64,
    pub j: u64,
    pub l: u64,
    pub i_hat: u64,
    pub j_hat: u64,
    pub l_hat: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    /// `explicit` or `ensemble`.
    pub mode: SimMode,
    pub n: usize,
    pub blocks: usize,
    pub r: f64,
    pub r_tilde: f64,
    pub blocks_detail: Vec<BlockRecord>,
    pub counts: EventCounts,
    /// `(1/T) Σ δ(x0_t, x2_t)` over all `T = nB` symbols.
    pub distortion: f64,
    /// Share of blocks `2..=B` with any event.
    pub block_error_fraction: f64,
    /// Blocks whose decoded `ĵ_b` differs from `j_b`.
    pub wrong_index_blocks: usize,
    /// Blocks where no `(j, ℓ)` was typical.
    pub packing_failures: usize,
    /// Empirical type of `(x0, x1, x2)`.
    pub joint_type: JointPmf,
    pub trace: Vec<IndexTrace>,
}

impl SimResult {
    pub fn wrong_index_rate(&self) -> f64 {
        self.wrong_index_blocks as f64 / self.blocks as f64
    }
}

pub fn write_events_csv(result: &SimResult, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{EVENTS_CSV_HEADER}")?;
    let b = |x: bool| x as u8;
    for r in &result.blocks_detail {
        let e = r.events;
        writeln!(out, "{},{},{},{},{},{},{}", r.block, b(e.e0), b(e.e1), b(e.e2), b(e.e3), b(e.e4), r.distortion)?;
    }
    Ok(())
}

/// `E_Q[δ(X0, g(U, Y))]` for a law over `(X0, U, V, X1, Y)`.
pub fn law_distortion(problem: &StateCommProblem, law: &JointPmf, g: &Decoder) -> Result<f64> {
    let shape = law.shape();
    if shape.len() != 5 {
        return Err(Error::Dimension("scheme law needs 5 axes (x0, u, v, x1, y)".into()));
    }
    let (_, nu, nv, n1, ny) = (shape[0], shape[1], shape[2], shape[3], shape[4]);
    Ok(law
        .probs()
        .iter()
        .enumerate()
        .map(|(flat, &p)| {
            let y = flat % ny;
            let u = flat / (ny * n1 * nv) % nu;
            let x0 = flat / (ny * n1 * nv * nu);
            p * problem.delta(x0, g.apply(u, y))
        })
        .sum())
}

/// `g(u, y) = argmin_x2 Σ_x0 Q(x0, u, y) δ(x0, x2)`, first minimizer on ties.
pub fn argmin_decoder(problem: &StateCommProblem, law: &JointPmf) -> Result<Decoder> {
    let (n0, _, n2, ny) = problem.dims();
    if law.rank() != 5 || law.shape()[0] != n0 || law.shape()[4] != ny {
        return Err(Error::Dimension("scheme law does not fit the problem".into()));
    }
    let nu = law.shape()[1];
    let x0uy = law.marginalize(&[0, 1, 4])?;
    let table = (0..nu * ny)
        .map(|uy| {
            let cost = |x2: usize| -> f64 {
                (0..n0).map(|x0| x0uy.get(&[x0, uy / ny, uy % ny]) * problem.delta(x0, x2)).sum()
            };
            (0..n2).fold((0, f64::INFINITY), |best, x2| if cost(x2) < best.1 { (x2, cost(x2)) } else { best }).0
        })
        .collect();
    Ok(Decoder::OfUY { u_size: nu, y_size: ny, table })
}

/// Everything the encoder and decoder derive from the law.
struct Laws {
    prior: Vec<f64>,
    q_u: Vec<f64>,
    q_v: Vec<f64>,
    /// `Q(x1 | x0, u, v)`, rows by flat `(x0, u, v)`.
    x1_rows: Vec<Vec<f64>>,
    /// `Γ(y | x0, x1)`, rows by flat `(x0, x1)`.
    channel_rows: Vec<Vec<f64>>,
    n1: usize,
    n2: usize,
    x0u: TypicalSet,
    x0uv: TypicalSet,
    /// Axes `(u, y, v)`.
    uyv: TypicalSet,
    full: TypicalSet,
    with_x2: TypicalSet,
}

fn check_inputs(problem: &StateCommProblem, law: &JointPmf, g: &Decoder) -> Result<()> {
    let (n0, n1, n2, ny) = problem.dims();
    let shape = law.shape();
    if shape.len() != 5 || shape[0] != n0 || shape[3] != n1 || shape[4] != ny {
        return Err(Error::Dimension(format!(
            "scheme law shape {shape:?} does not fit |X0| = {n0}, |X1| = {n1}, |Y| = {ny}"
        )));
    }
    if shape.iter().chain([&n2]).any(|&d| d > 256) {
        return Err(Error::TooLarge("the simulator handles alphabets of at most 256 symbols".into()));
    }
    let prior = problem.state_prior().probs();
    let x0 = law.marginalize(&[0])?;
    let max_dev = x0.probs().iter().zip(prior).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if max_dev > 1e-9 {
        return Err(Error::WrongMarginal { max_dev });
    }
    let x0x1y = law.marginalize(&[0, 3, 4])?;
    for x0 in 0..n0 {
        for x1 in 0..n1 {
            let mass: f64 = (0..ny).map(|y| x0x1y.get(&[x0, x1, y])).sum();
            if mass <= 1e-12 {
                continue;
            }
            for y in 0..ny {
                let dev = (x0x1y.get(&[x0, x1, y]) / mass - problem.gamma(x0, x1, y)).abs();
                if dev > 1e-9 {
                    return Err(Error::Argument(format!("law's channel differs from the problem's at ({x0}, {x1})")));
                }
            }
        }
    }
    let (nu, ok) = match g {
        Decoder::Constant { x2 } => (shape[1], *x2 < n2),
        Decoder::OfY { table } => (shape[1], table.len() == ny && table.iter().all(|&x| x < n2)),
        Decoder::OfUY { u_size, y_size, table } => {
            (*u_size, *y_size == ny && table.len() == u_size * y_size && table.iter().all(|&x| x < n2))
        }
    };
    if !ok || nu != shape[1] {
        return Err(Error::Dimension("decoder does not fit the law's alphabets".into()));
    }
    Ok(())
}

impl Laws {
    fn new(problem: &StateCommProblem, law: &JointPmf, g: &Decoder, p: &BlockCodeParams) -> Result<Self> {
        check_inputs(problem, law, g)?;
        let (n0, n1, n2, ny) = problem.dims();
        let shape = law.shape();
        let (nu, nv) = (shape[1], shape[2]);
        let x1_kernel = law.marginalize(&[0, 1, 2, 3])?.condition(&[0, 1, 2])?;
        let x1_rows = (0..x1_kernel.rows()).map(|r| x1_kernel.row(r).to_vec()).collect();
        let channel_rows = (0..n0 * n1).map(|r| (0..ny).map(|y| problem.gamma(r / n1, r % n1, y)).collect()).collect();
        let mut axes = law.axes().to_vec();
        axes.push(Alphabet::new(n2)?);
        let with_x2 =
            JointPmf::from_weights(axes, |i| if g.apply(i[1], i[4]) == i[5] { law.get(&i[..5]) } else { 0.0 })?;
        let n = p.n;
        Ok(Self {
            prior: problem.state_prior().probs().to_vec(),
            q_u: law.marginalize(&[1])?.probs().to_vec(),
            q_v: law.marginalize(&[2])?.probs().to_vec(),
            x1_rows,
            channel_rows,
            n1,
            n2,
            x0u: TypicalSet::new(&law.marginalize(&[0, 1])?, n, p.eps1),
            x0uv: TypicalSet::new(&law.marginalize(&[0, 1, 2])?, n, p.eps2),
            uyv: TypicalSet::new(&law.marginalize(&[1, 4, 2])?, n, p.eps3),
            full: TypicalSet::new(law, n, p.eps3),
            with_x2: TypicalSet::new(&with_x2, n, p.eps_tilde),
        })
        .inspect(|l: &Laws| debug_assert_eq!((l.q_u.len(), l.q_v.len()), (nu, nv)))
    }
}

/// Codebooks, stored or represented by their distribution.
enum Engine {
    Explicit(Codebooks),
    Ensemble { m: f64, m_tilde: f64, ln_fact: Vec<f64> },
}

/// What the encoder settled on for one block.
struct EncoderBlock {
    x0: Vec<u8>,
    i: u64,
    u: Vec<u8>,
    e0: bool,
}

fn sample_block(rng: &mut StreamRng, pmf: &[f64], n: usize) -> Vec<u8> {
    let mut out = vec![0u8; n];
    fill_iid(rng, pmf, &mut out);
    out
}

fn bernoulli(rng: &mut StreamRng, p: f64) -> bool {
    rng.random::<f64>() < p
}

/// Runs the block-Markov scheme for `B` blocks of length `n`.
///
/// Rates are taken from `params` as given; checking them against the rate
/// region is the caller's business, so that failure regimes can be run too.
pub fn run_simulation(
    problem: &StateCommProblem,
    law: &JointPmf,
    g: &Decoder,
    params: &BlockCodeParams,
) -> Result<SimResult> {
    params.validate()?;
    let laws = Laws::new(problem, law, g, params)?;
    let (n, big_b, seed) = (params.n, params.blocks, params.seed);
    let explicit = match params.mode {
        SimMode::Explicit => true,
        SimMode::Ensemble => false,
        SimMode::Auto => codebook_symbols(params) <= EXPLICIT_AUTO_LIMIT,
    };
    let engine = if explicit {
        Engine::Explicit(generate_codebooks(params, &laws.q_u, &laws.q_v)?)
    } else {
        Engine::Ensemble {
            m: codebook_size(n, params.r),
            m_tilde: codebook_size(n, params.r_tilde),
            ln_fact: ln_factorials(n),
        }
    };

    // Pass 1: the U-indices of every block.
    let enc: Vec<EncoderBlock> = (1..=big_b)
        .map(|b| {
            let x0 = sample_block(&mut rng::stream(seed, tag::SOURCE, b as u64), &laws.prior, n);
            match &engine {
                Engine::Explicit(cb) => {
                    let cb = &cb.blocks[b - 1];
                    let found = find_u_index(&x0, cb, &laws.x0u);
                    let i = if b == 1 { 1 } else { found.unwrap_or(1) };
                    let u = cb.u(i).to_vec();
                    EncoderBlock { x0, i: i as u64, u, e0: found.is_none() }
                }
                Engine::Ensemble { m, ln_fact, .. } => {
                    let mut r = rng::stream(seed, tag::CODEBOOK, b as u64);
                    let fresh = FreshCodeword::new(&laws.x0u, &[&x0], &laws.q_u, ln_fact);
                    let ln_none = ln_no_hit(m.ln(), fresh.ln_prob());
                    let e0 = bernoulli(&mut r, ln_none.exp());
                    // Given some hit, the first codeword is one with this probability.
                    let first_hits = !e0 && bernoulli(&mut r, fresh.ln_prob().exp() / -ln_none.exp_m1());
                    let (i, typical) = match (b, e0, first_hits) {
                        (1, _, hit) => (1, hit),
                        (_, true, _) => (1, false),
                        (_, false, true) => (1, true),
                        (_, false, false) => (2, true),
                    };
                    let u = if typical {
                        fresh.sample_typical(&mut r, ln_fact).expect("a hit has positive probability")
                    } else {
                        fresh.sample_atypical(&mut r, &[&x0])
                    };
                    EncoderBlock { x0, i, u, e0 }
                }
            }
        })
        .collect();

    let mut blocks_detail = Vec::with_capacity(big_b);
    let mut trace = Vec::with_capacity(big_b);
    let mut counts = EventCounts::default();
    let (n0, n1, n2) = (laws.prior.len(), laws.n1, laws.n2);
    let mut joint_counts = vec![0u64; n0 * n1 * n2];
    let mut total_distortion = 0.0;
    let mut wrong_index_blocks = 0;
    let mut packing_failures = 0;
    let mut i_hat: u64 = 1;

    for b in 1..=big_b {
        let EncoderBlock { x0, i, u, e0 } = &enc[b - 1];
        let j = if b < big_b { enc[b].i } else { 1 };

        // Pass 2: the V-index and the channel input.
        let mut enc_rng = rng::stream(seed, tag::ENCODER, b as u64);
        let (l, v, e1) = match &engine {
            Engine::Explicit(cb) => {
                let cb = &cb.blocks[b - 1];
                let hits = typical_l_indices(x0, u, cb, j as usize, &laws.x0uv);
                let l = pick_uniform(&mut enc_rng, &hits);
                let l_used = l.unwrap_or(1);
                (l_used as u64, cb.v(j as usize, l_used).to_vec(), l.is_none())
            }
            Engine::Ensemble { m_tilde, ln_fact, .. } => {
                let mut r = rng::stream(seed, tag::CODEBOOK, SECOND_PASS | b as u64);
                let fresh = FreshCodeword::new(&laws.x0uv, &[x0, u], &laws.q_v, ln_fact);
                let e1 = bernoulli(&mut r, ln_no_hit(m_tilde.ln(), fresh.ln_prob()).exp());
                if e1 {
                    (1, fresh.sample_atypical(&mut r, &[x0, u]), true)
                } else {
                    // The chosen index is uniform over the hits, hence 1 with probability 1/M̃.
                    let l = if bernoulli(&mut r, 1.0 / m_tilde) { 1 } else { 2 };
                    (l, fresh.sample_typical(&mut r, ln_fact).expect("a hit has positive probability"), false)
                }
            }
        };
        let x1: Vec<u8> = (0..n)
            .map(|t| {
                let row = (x0[t] as usize * laws.q_u.len() + u[t] as usize) * laws.q_v.len() + v[t] as usize;
                rng::sample_index(&mut enc_rng, &laws.x1_rows[row]) as u8
            })
            .collect();
        let mut ch = rng::stream(seed, tag::CHANNEL, b as u64);
        let y: Vec<u8> = (0..n)
            .map(|t| rng::sample_index(&mut ch, &laws.channel_rows[x0[t] as usize * n1 + x1[t] as usize]) as u8)
            .collect();

        // Decoder: the U-codeword it believes in, then symbol-by-symbol outputs.
        let mut dec_rng = rng::stream(seed, tag::DECODER, b as u64);
        let u_hat: Vec<u8> = match &engine {
            Engine::Explicit(cb) => cb.blocks[b - 1].u(i_hat as usize).to_vec(),
            Engine::Ensemble { ln_fact, .. } => {
                if i_hat == *i {
                    u.clone()
                } else if i_hat == 1 {
                    // The encoder skipped index 1, so that codeword is not typical.
                    FreshCodeword::new(&laws.x0u, &[x0], &laws.q_u, ln_fact).sample_atypical(&mut dec_rng, &[x0])
                } else {
                    sample_block(&mut dec_rng, &laws.q_u, n)
                }
            }
        };
        let mut decoder = CausalDecoder::new(&u_hat, g);
        let x2: Vec<u8> = y.iter().map(|&yt| decoder.push(yt)).collect();

        let e2 = !laws.full.contains(&[x0, &u_hat, &v, &x1, &y]);
        let e4 = b >= 2 && !laws.with_x2.contains(&[x0, &u_hat, &v, &x1, &y, &x2]);

        // End of block: recover (j, ℓ).
        let (pick, e3) = match &engine {
            Engine::Explicit(cb) => {
                let end = decode_block_end(&u_hat, &y, &cb.blocks[b - 1], &laws.uyv, &mut dec_rng);
                let e3 = end.candidates.iter().any(|&(jj, _)| jj as u64 != j);
                (end.pick.map(|(a, c)| (a as u64, c as u64)), e3)
            }
            Engine::Ensemble { m, m_tilde, ln_fact } => {
                let right = laws.uyv.contains(&[&u_hat, &y, &v]) as u8 as f64;
                let p = FreshCodeword::new(&laws.uyv, &[&u_hat, &y], &laws.q_v, ln_fact).ln_prob().exp();
                let same_row = success_count(&mut dec_rng, m_tilde - 1.0, p);
                let other_rows = success_count(&mut dec_rng, (m - 1.0) * m_tilde, p);
                let total = right + same_row + other_rows;
                let pick = (total > 0.0).then(|| {
                    let r = dec_rng.random::<f64>() * total;
                    if r < right {
                        (j, l)
                    } else if r < right + same_row {
                        (j, 0)
                    } else {
                        (0, 0)
                    }
                });
                (pick, other_rows > 0.0)
            }
        };
        if pick.is_none() {
            packing_failures += 1;
        }
        let (j_hat, l_hat) = pick.unwrap_or((1, 1));
        if j_hat != j {
            wrong_index_blocks += 1;
        }

        let events = BlockEvents { e0: *e0, e1, e2, e3, e4 };
        counts.e0 += *e0 as usize;
        counts.e1 += e1 as usize;
        counts.e2 += e2 as usize;
        counts.e3 += e3 as usize;
        counts.e4 += e4 as usize;
        let mut block_distortion = 0.0;
        for t in 0..n {
            block_distortion += problem.delta(x0[t] as usize, x2[t] as usize);
            joint_counts[(x0[t] as usize * n1 + x1[t] as usize) * n2 + x2[t] as usize] += 1;
        }
        total_distortion += block_distortion;
        blocks_detail.push(BlockRecord { block: b, events, distortion: block_distortion / n as f64 });
        trace.push(IndexTrace { block: b, i: *i, j, l, i_hat, j_hat, l_hat });
        i_hat = j_hat;
    }

    let total = (n * big_b) as f64;
    let later = &blocks_detail[1.min(big_b)..];
    let block_error_fraction = if later.is_empty() {
        0.0
    } else {
        later.iter().filter(|r| r.events.any()).count() as f64 / later.len() as f64
    };
    let joint_type = JointPmf::from_shape(&[n0, n1, n2], joint_counts.iter().map(|&c| c as f64 / total).collect())?;
    Ok(SimResult {
        mode: if explicit { SimMode::Explicit } else { SimMode::Ensemble },
        n,
        blocks: big_b,
        r: params.r,
        r_tilde: params.r_tilde,
        blocks_detail,
        counts,
        distortion: (total_distortion / total).clamp(0.0, problem.d_max()),
        block_error_fraction,
        wrong_index_blocks,
        packing_failures,
        joint_type,
        trace,
    })
}
