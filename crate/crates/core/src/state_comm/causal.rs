//! Causally informed encoder: symbol-by-symbol strategies are optimal.

use serde::{Deserialize, Serialize};

use super::{Decoder, DistortionReport, StateCommProblem};
use crate::error::{Error, Result};
use crate::optim::Rows;
use crate::rng::{self, tag};

/// Largest `|X1|^|X0| · |X2|^|Y|` searched exhaustively.
pub const EXACT_LIMIT: f64 = 1e7;

const ALTERNATING_RESTARTS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CausalMode {
    /// Exhaustive when within [`EXACT_LIMIT`], alternating otherwise.
    Auto,
    Exact,
    Alternating,
}

fn argmin_first(values: impl Iterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, v) in values.enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best
}

/// Strictly causal decoding: Agent 2 can only play a constant.
pub fn min_dist_c_enc_sc_dec(problem: &StateCommProblem) -> DistortionReport {
    let (n0, _, n2, _) = problem.dims();
    let rho = problem.state_prior().probs();
    let (x2, value) = argmin_first((0..n2).map(|x2| (0..n0).map(|x0| rho[x0] * problem.delta(x0, x2)).sum()));
    DistortionReport {
        min_distortion: value.clamp(0.0, problem.d_max()),
        decoder: Decoder::Constant { x2 },
        encoder_map: None,
        law: None,
        slack: None,
        exact: true,
        aux_sizes: None,
    }
}

/// Distortion of an encoder `P(x1 | x0)` with its best decoder `y -> x2`.
pub fn encoder_distortion(problem: &StateCommProblem, encoder: &Rows) -> (f64, Vec<usize>) {
    let (n0, n1, n2, ny) = problem.dims();
    let rho = problem.state_prior().probs();
    // P(x0, y)
    let mut joint = vec![0.0; n0 * ny];
    for x0 in 0..n0 {
        for x1 in 0..n1 {
            let p = rho[x0] * encoder.row(x0)[x1];
            if p == 0.0 {
                continue;
            }
            for y in 0..ny {
                joint[x0 * ny + y] += p * problem.gamma(x0, x1, y);
            }
        }
    }
    let mut table = Vec::with_capacity(ny);
    let mut total = 0.0;
    for y in 0..ny {
        let (x2, cost) =
            argmin_first((0..n2).map(|x2| (0..n0).map(|x0| joint[x0 * ny + y] * problem.delta(x0, x2)).sum()));
        table.push(x2);
        total += cost;
    }
    (total, table)
}

fn map_distortion(problem: &StateCommProblem, map: &[usize]) -> (f64, Vec<usize>) {
    let (_, n1, _, _) = problem.dims();
    encoder_distortion(problem, &Rows::deterministic(n1, map))
}

/// Best encoder map for a fixed decoder table.
fn best_map(problem: &StateCommProblem, table: &[usize]) -> Vec<usize> {
    let (n0, n1, _, ny) = problem.dims();
    (0..n0)
        .map(|x0| {
            argmin_first(
                (0..n1).map(|x1| (0..ny).map(|y| problem.gamma(x0, x1, y) * problem.delta(x0, table[y])).sum()),
            )
            .0
        })
        .collect()
}

fn search_size(problem: &StateCommProblem) -> f64 {
    let (n0, n1, n2, ny) = problem.dims();
    (n1 as f64).powi(n0 as i32) * (n2 as f64).powi(ny as i32)
}

/// Causal encoding and decoding: minimum over encoders `x0 -> x1` and
/// decoders `y -> x2`, exhaustive when small enough.
pub fn min_dist_c_enc_c_dec(problem: &StateCommProblem) -> DistortionReport {
    min_dist_c_enc_c_dec_with(problem, CausalMode::Auto, 0).expect("auto mode always has a fallback")
}

pub fn min_dist_c_enc_c_dec_with(problem: &StateCommProblem, mode: CausalMode, seed: u64) -> Result<DistortionReport> {
    let exact = match mode {
        CausalMode::Exact if search_size(problem) > EXACT_LIMIT => {
            return Err(Error::TooLarge(format!(
                "instance too large for exact mode ({:.3e} encoder/decoder pairs)",
                search_size(problem)
            )))
        }
        CausalMode::Exact => true,
        CausalMode::Auto => search_size(problem) <= EXACT_LIMIT,
        CausalMode::Alternating => false,
    };
    let (map, value, table) = if exact { exhaustive(problem) } else { alternating(problem, seed) };
    Ok(DistortionReport {
        min_distortion: value.clamp(0.0, problem.d_max()),
        decoder: Decoder::OfY { table },
        encoder_map: Some(map),
        law: None,
        slack: None,
        exact,
        aux_sizes: None,
    })
}

/// For a fixed encoder the best decoder is the pointwise argmin, so scanning
/// encoders and taking that decoder covers every pair.
fn exhaustive(problem: &StateCommProblem) -> (Vec<usize>, f64, Vec<usize>) {
    let (n0, n1, _, _) = problem.dims();
    let mut map = vec![0usize; n0];
    let mut best: Option<(Vec<usize>, f64, Vec<usize>)> = None;
    loop {
        let (d, table) = map_distortion(problem, &map);
        if best.as_ref().is_none_or(|b| d < b.1) {
            best = Some((map.clone(), d, table));
        }
        // Odometer over maps, last state fastest.
        let mut k = n0;
        loop {
            if k == 0 {
                return best.expect("at least one encoder");
            }
            k -= 1;
            map[k] += 1;
            if map[k] < n1 {
                break;
            }
            map[k] = 0;
        }
    }
}

fn alternating(problem: &StateCommProblem, seed: u64) -> (Vec<usize>, f64, Vec<usize>) {
    let (n0, n1, _, _) = problem.dims();
    let mut best: Option<(Vec<usize>, f64, Vec<usize>)> = None;
    for restart in 0..ALTERNATING_RESTARTS {
        let mut map: Vec<usize> = if restart == 0 {
            vec![0; n0]
        } else {
            let mut r = rng::stream(seed, tag::ALTERNATING, restart as u64);
            (0..n0).map(|_| rng::sample_index(&mut r, &vec![1.0 / n1 as f64; n1])).collect()
        };
        let (mut d, mut table) = map_distortion(problem, &map);
        loop {
            let next = best_map(problem, &table);
            let (nd, nt) = map_distortion(problem, &next);
            if nd < d - 1e-15 {
                (map, d, table) = (next, nd, nt);
            } else {
                break;
            }
        }
        if best.as_ref().is_none_or(|b| d < b.1) {
            best = Some((map, d, table));
        }
    }
    best.expect("at least one restart")
}
