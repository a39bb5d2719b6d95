//! Expected-payoff optimization over implementable target laws.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::problem::CoordinationProblem;
use super::slack::{max_constraint_slack_warm, FeasibilityReport, KernelObjective, SlackModel};
use super::OptConfig;
use crate::error::Result;
use crate::optim::{eg_ascent, AscentConfig, Rows, SmoothObjective};
use crate::prob::JointPmf;
use crate::rng::{self, tag};

/// Slack a returned non-causal optimum must reach on its own witness kernel.
/// Tighter than the implementability tolerance so that a certified point
/// cannot buy payoff with a sliver of constraint violation.
pub const CERTIFY_SLACK: f64 = -1e-12;

fn argmax_first(values: impl Iterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

/// Semi-coordinated policy: Agent 2 plays a constant, Agent 1 best-responds to
/// the current state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalOptimum {
    pub x2: usize,
    /// `policy[x0]` is Agent 1's action in state `x0`.
    pub policy: Vec<usize>,
    pub value: f64,
    pub qbar: JointPmf,
}

/// `max_{x2} Σ_{x0} ρ0(x0) max_{x1} w(x0, x1, x2)`; ties go to the smallest symbol.
pub fn optimize_payoff_causal(problem: &CoordinationProblem) -> CausalOptimum {
    let (n0, n1, n2) = problem.dims();
    let rho = problem.state_prior().probs();
    let per_x2: Vec<(f64, Vec<usize>)> = (0..n2)
        .map(|x2| {
            let policy: Vec<usize> =
                (0..n0).map(|x0| argmax_first((0..n1).map(|x1| problem.w(x0, x1, x2))).0).collect();
            let value = (0..n0).map(|x0| rho[x0] * problem.w(x0, policy[x0], x2)).sum();
            (value, policy)
        })
        .collect();
    let (x2, value) = argmax_first(per_x2.iter().map(|p| p.0));
    let policy = per_x2[x2].1.clone();
    let qbar = JointPmf::new(
        problem.target_axes(),
        (0..n0)
            .flat_map(|x0| {
                let p = policy[x0];
                (0..n1).flat_map(move |x1| (0..n2).map(move |b| if x1 == p && b == x2 { rho[x0] } else { 0.0 }))
            })
            .collect(),
    )
    .expect("semi-coordinated target is a pmf");
    CausalOptimum { x2, policy, value, qbar }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    /// Both actions chosen with full knowledge: `Σ ρ0 max_{x1,x2} w`.
    pub costless: f64,
    /// `constant_pair[x1][x2] = Σ ρ0 w(x0, x1, x2)`.
    pub constant_pair: Vec<Vec<f64>>,
}

pub fn baselines(problem: &CoordinationProblem) -> Baselines {
    let (n0, n1, n2) = problem.dims();
    let rho = problem.state_prior().probs();
    let costless = (0..n0)
        .map(|x0| {
            let best = (0..n1)
                .flat_map(|x1| (0..n2).map(move |x2| (x1, x2)))
                .map(|(x1, x2)| problem.w(x0, x1, x2))
                .fold(f64::NEG_INFINITY, f64::max);
            rho[x0] * best
        })
        .sum();
    let constant_pair =
        (0..n1).map(|x1| (0..n2).map(|x2| (0..n0).map(|x0| rho[x0] * problem.w(x0, x1, x2)).sum()).collect()).collect();
    Baselines { costless, constant_pair }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoncausalOptimum {
    pub qbar: JointPmf,
    pub value: f64,
    pub report: FeasibilityReport,
    /// Restart that produced the returned point.
    pub restart: usize,
    /// Weight on the semi-coordinated point needed to restore feasibility.
    pub repair_weight: f64,
    /// Whether the winning restart settled before its round cap.
    pub converged: bool,
    /// Restarts that hit the round cap.
    pub unconverged_restarts: usize,
}

/// `payoff / scale - λ min(0, slack)²` over the rows `P(x1, x2 | x0)`.
struct PenalizedPayoff<'a> {
    model: &'a SlackModel,
    kernel: &'a [f64],
    rho: &'a [f64],
    payoff: &'a [f64],
    scale: f64,
    lambda: f64,
    cols: usize,
}

impl PenalizedPayoff<'_> {
    fn target(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(a, &p)| self.rho[a / self.cols] * p).collect()
    }
}

impl SmoothObjective for PenalizedPayoff<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        let q = self.target(x);
        let pay: f64 = q.iter().zip(self.payoff).map(|(q, w)| q * w).sum::<f64>() / self.scale;
        let s = self.model.slack(&q, self.kernel).min(0.0);
        pay - self.lambda * s * s
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let q = self.target(x);
        let s = self.model.grad_target(&q, self.kernel, grad).min(0.0);
        for (a, g) in grad.iter_mut().enumerate() {
            // Rows are scaled by 1/ρ0(x0), which the EG update ignores anyway.
            *g = self.payoff[a] / self.scale - 2.0 * self.lambda * s * *g;
        }
        let pay: f64 = q.iter().zip(self.payoff).map(|(q, w)| q * w).sum::<f64>() / self.scale;
        pay - self.lambda * s * s
    }
}

struct RestartOutcome {
    value: f64,
    qbar: Vec<f64>,
    kernel: Rows,
    repair_weight: f64,
    converged: bool,
}

fn expected(qbar: &[f64], payoff: &[f64]) -> f64 {
    qbar.iter().zip(payoff).map(|(q, w)| q * w).sum()
}

fn ascend_kernel(model: &SlackModel, qbar: &[f64], kernel: &mut Rows, cfg: &AscentConfig) -> f64 {
    eg_ascent(kernel, &KernelObjective { model, qbar }, cfg).value
}

/// Pulls `qbar` toward the always-feasible `fallback` until a witness kernel
/// certifies it. Returns the certified point, its kernel and the weight used.
///
/// The weight is searched on a doubling grid starting at `2^-repair_steps`,
/// then refined by a few bisection steps.
fn repair(model: &SlackModel, qbar: &[f64], kernel: &Rows, fallback: &[f64], cfg: &OptConfig) -> (Vec<f64>, Rows, f64) {
    let mix = |t: f64| -> Vec<f64> { qbar.iter().zip(fallback).map(|(a, b)| (1.0 - t) * a + t * b).collect() };
    let inner = cfg.inner_ascent();
    let mut warm = kernel.clone();
    // Certifies mix(t) if possible, keeping the ascended kernel as the next warm start.
    let mut attempt = |t: f64| -> Option<Rows> {
        let q = mix(t);
        let mut k = warm.smoothed(1e-9);
        ascend_kernel(model, &q, &mut k, &inner);
        let found = [&k, &warm].into_iter().find(|c| model.slack(&q, &c.data) >= CERTIFY_SLACK).cloned();
        warm = k;
        found
    };

    let mut lo = 0.0;
    let mut hit = None;
    let mut t = 0.5f64.powi(cfg.repair_steps as i32);
    while t < 1.0 {
        if let Some(k) = attempt(t) {
            hit = Some((t, k));
            break;
        }
        lo = t;
        t *= 2.0;
    }
    let Some((mut hi, mut best)) = hit else {
        let constant = Rows::deterministic(kernel.cols, &vec![0; kernel.rows]);
        return (fallback.to_vec(), constant, 1.0);
    };
    for _ in 0..4 {
        let mid = 0.5 * (lo + hi);
        match attempt(mid) {
            Some(k) => {
                hi = mid;
                best = k;
            }
            None => lo = mid,
        }
    }
    (mix(hi), best, hi)
}

fn one_restart(
    problem: &CoordinationProblem,
    model: &SlackModel,
    index: usize,
    causal: &CausalOptimum,
    cfg: &OptConfig,
) -> RestartOutcome {
    let (n0, n1, n2) = problem.dims();
    let cols = n1 * n2;
    let atoms = n0 * cols;
    let nv = model.nv();
    let rho = problem.state_prior().probs();
    let payoff = problem.payoff();
    let scale = payoff.iter().fold(0.0f64, |m, w| m.max(w.abs())).max(1e-12);
    let mut r = rng::stream(cfg.seed, tag::PAYOFF_RESTART, index as u64);

    let causal_rows = {
        let labels: Vec<usize> = (0..n0).map(|x0| causal.policy[x0] * n2 + causal.x2).collect();
        Rows::deterministic(cols, &labels)
    };
    let mut rows = match index {
        0 => causal_rows.smoothed(0.05),
        1 => {
            let labels: Vec<usize> =
                (0..n0).map(|x0| argmax_first((0..cols).map(|c| payoff[x0 * cols + c])).0).collect();
            Rows::deterministic(cols, &labels).smoothed(0.05)
        }
        _ => Rows::from_data(n0, cols, (0..n0).flat_map(|_| rng::uniform_simplex(&mut r, cols)).collect()),
    };
    let mut kernel = Rows::from_data(atoms, nv, (0..atoms).flat_map(|_| rng::uniform_simplex(&mut r, nv)).collect());

    let inner = cfg.inner_ascent();
    let target = |rows: &Rows| -> Vec<f64> { (0..atoms).map(|a| rho[a / cols] * rows.data[a]).collect() };
    let mut lambda = cfg.penalty_init;
    let mut prev = f64::NEG_INFINITY;
    let mut settled = 0;
    let mut converged = false;
    for _ in 0..cfg.outer_rounds {
        let q = target(&rows);
        ascend_kernel(model, &q, &mut kernel, &inner);
        let obj = PenalizedPayoff { model, kernel: &kernel.data, rho, payoff, scale, lambda, cols };
        eg_ascent(&mut rows, &obj, &inner);
        let q = target(&rows);
        let s = model.slack(&q, &kernel.data);
        if s < -cfg.tol {
            lambda = (lambda * 2.0).min(1e15);
        }
        let v = expected(&q, payoff);
        if (v - prev).abs() <= cfg.ascent_settle * (1.0 + v.abs()) && s >= -cfg.tol {
            settled += 1;
            if settled >= 3 {
                converged = true;
                break;
            }
        } else {
            settled = 0;
        }
        prev = v;
    }
    let q = target(&rows);
    ascend_kernel(model, &q, &mut kernel, &cfg.ascent);

    let causal_q = causal.qbar.probs();
    let (q, kernel, weight) = if model.slack(&q, &kernel.data) >= CERTIFY_SLACK {
        (q, kernel, 0.0)
    } else {
        repair(model, &q, &kernel, causal_q, cfg)
    };
    let value = expected(&q, payoff);
    if value < causal.value {
        // The semi-coordinated point is always available.
        return RestartOutcome {
            value: causal.value,
            qbar: causal_q.to_vec(),
            kernel: Rows::deterministic(nv, &vec![0; atoms]),
            repair_weight: 1.0,
            converged,
        };
    }
    RestartOutcome { value, qbar: q, kernel, repair_weight: weight, converged }
}

/// Maximizes `Σ Q̄ w` over targets with first marginal `ρ0` whose slack is
/// non-negative for some `P(V | X0, X1, X2)` with `|V| = v_size`.
///
/// Alternates between ascending the slack over the auxiliary kernel and
/// ascending a penalized payoff over `P(x1, x2 | x0)`, from
/// `cfg.payoff_restarts` starts. The returned point is certified by an explicit
/// kernel, so the value is a lower bound on the true optimum.
pub fn optimize_payoff_noncausal(
    problem: &CoordinationProblem,
    v_size: usize,
    cfg: &OptConfig,
) -> Result<NoncausalOptimum> {
    let model = SlackModel::new(problem.channel(), v_size);
    let causal = optimize_payoff_causal(problem);
    let outcomes: Vec<RestartOutcome> = (0..cfg.payoff_restarts.max(1))
        .into_par_iter()
        .map(|i| one_restart(problem, &model, i, &causal, cfg))
        .collect();
    let (best, _) = argmax_first(outcomes.iter().map(|o| o.value));
    let o = &outcomes[best];
    let qbar = JointPmf::new(problem.target_axes(), o.qbar.clone())?;
    let report = max_constraint_slack_warm(&qbar, problem.channel(), v_size, cfg, std::slice::from_ref(&o.kernel))?;
    Ok(NoncausalOptimum {
        value: problem.expected_payoff(&qbar)?,
        qbar,
        report,
        restart: best,
        repair_weight: o.repair_weight,
        converged: o.converged,
        unconverged_restarts: outcomes.iter().filter(|o| !o.converged).count(),
    })
}
