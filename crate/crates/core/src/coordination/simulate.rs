//! Empirical check of the causal scheme: Agent 2 plays a fixed typical
//! sequence, Agent 1 draws its action from `P(x1 | x0, x2)` each step.

use serde::{Deserialize, Serialize};

use super::implementable::{check_marginal, factorization_gap};
use super::problem::CoordinationProblem;
use crate::error::{Error, Result};
use crate::prob::{total_variation, JointPmf};
use crate::rng::{self, tag};

/// Relative deviation allowed between Agent 2's sequence type and `P(x2)`.
pub const X2_TYPE_EPS: f64 = 0.01;
pub const X2_MAX_ATTEMPTS: usize = 100;
/// Largest factorization gap accepted as a causal target.
pub const FACTORIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalSimulation {
    /// Time-averaged empirical law of `(x0, x1, x2)`.
    pub empirical: JointPmf,
    /// Largest entrywise deviation from the target.
    pub max_dev: f64,
    pub tv: f64,
    /// Draws of Agent 2's sequence used; the last one was kept.
    pub x2_attempts: usize,
    /// Whether the kept sequence met the type tolerance.
    pub x2_typical: bool,
}

fn relative_type_dev(counts: &[usize], law: &[f64], t: usize) -> f64 {
    counts
        .iter()
        .zip(law)
        .map(|(&c, &p)| {
            let f = c as f64 / t as f64;
            if p > 0.0 {
                (f - p).abs() / p
            } else if c > 0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

/// Runs the scheme for `t` steps. Fails with an argument error when `qbar`
/// does not factorize as `ρ0(x0) P(x2) P(x1 | x0, x2)`.
pub fn simulate_causal_scheme(
    problem: &CoordinationProblem,
    qbar: &JointPmf,
    t: usize,
    seed: u64,
) -> Result<CausalSimulation> {
    problem.check_target(qbar)?;
    check_marginal(qbar, problem.state_prior())?;
    if t == 0 {
        return Err(Error::Argument("horizon must be positive".into()));
    }
    let gap = factorization_gap(qbar)?;
    if gap > FACTORIZATION_TOL {
        return Err(Error::Argument(format!("target is not causally implementable (factorization gap {gap:.3e})")));
    }
    let (n0, n1, n2) = problem.dims();
    let p2 = qbar.marginalize(&[2])?;
    let p2 = p2.probs();
    let kernel = qbar.condition(&[0, 2])?;
    let rho = problem.state_prior().probs();

    // Agent 2's sequence: i.i.d. draws until the type is close enough.
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut attempts = 0;
    for attempt in 0..X2_MAX_ATTEMPTS {
        attempts = attempt + 1;
        let mut r = rng::stream(seed, tag::CAUSAL_SIM, 1 + attempt as u64);
        let seq: Vec<usize> = (0..t).map(|_| rng::sample_index(&mut r, p2)).collect();
        let mut counts = vec![0; n2];
        seq.iter().for_each(|&x| counts[x] += 1);
        let dev = relative_type_dev(&counts, p2, t);
        if best.as_ref().is_none_or(|b| dev < b.0) {
            best = Some((dev, seq));
        }
        if dev <= X2_TYPE_EPS {
            break;
        }
    }
    let (dev2, x2_seq) = best.expect("at least one attempt");

    let mut r = rng::stream(seed, tag::CAUSAL_SIM, 0);
    let mut counts = vec![0usize; n0 * n1 * n2];
    for &x2 in &x2_seq {
        let x0 = rng::sample_index(&mut r, rho);
        let x1 = rng::sample_index(&mut r, kernel.row(x0 * n2 + x2));
        counts[(x0 * n1 + x1) * n2 + x2] += 1;
    }
    let empirical = JointPmf::new(qbar.axes().to_vec(), counts.iter().map(|&c| c as f64 / t as f64).collect())?;
    let d = total_variation(&empirical, qbar)?;
    Ok(CausalSimulation {
        empirical,
        max_dev: d.max_abs,
        tv: d.tv,
        x2_attempts: attempts,
        x2_typical: dev2 <= X2_TYPE_EPS,
    })
}
