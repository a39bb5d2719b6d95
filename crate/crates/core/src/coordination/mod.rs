//! Implementability of target laws `Q̄(x0, x1, x2)` and payoff optimization.
//!
//! A law is implementable with a non-causally informed Agent 1 iff its first
//! marginal is the state prior and, for some auxiliary `V`,
//! `I(X0;X2) <= I(V;Y|X2) - I(V;X0|X2)`. With a causally informed Agent 1 the
//! implementable laws are exactly those with `X0 ⊥ X2`.

mod cardinality;
mod implementable;
mod payoff;
mod problem;
mod simulate;
mod slack;

use serde::{Deserialize, Serialize};

use crate::optim::AscentConfig;

pub use cardinality::{cardinality_stress, CardinalityRow};
pub use implementable::{
    check_marginal, factorization_gap, is_implementable_causal, is_implementable_noncausal, MARGINAL_TOL,
};
pub use payoff::{
    baselines, optimize_payoff_causal, optimize_payoff_noncausal, Baselines, CausalOptimum, NoncausalOptimum,
    CERTIFY_SLACK,
};
pub use problem::{AuxChannel, CoordinationProblem, ProblemWire};
pub use simulate::{simulate_causal_scheme, CausalSimulation, X2_MAX_ATTEMPTS, X2_TYPE_EPS};
pub use slack::{
    constraint_slack, max_constraint_slack, max_constraint_slack_warm, FeasibilityReport, StartKind, TraceEntry,
};

/// Optimizer settings shared by the slack and payoff searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptConfig {
    pub seed: u64,
    /// Slack at or above `-tol` counts as implementable.
    pub tol: f64,
    pub slack_restarts: usize,
    pub payoff_restarts: usize,
    /// Cap on alternating rounds per payoff restart.
    pub outer_rounds: usize,
    /// Iteration cap of each ascent inside an alternating round.
    pub inner_iter: usize,
    /// Relative payoff change below which an alternating round counts as
    /// settled; three settled feasible rounds in a row end a restart.
    pub ascent_settle: f64,
    pub ascent: AscentConfig,
    /// Deterministic auxiliary kernels (up to relabeling) are enumerated when
    /// there are at most this many.
    pub deterministic_limit: usize,
    /// Best deterministic kernels used as ascent starts.
    pub polish_top: usize,
    pub penalty_init: f64,
    /// Bisection steps when pulling an infeasible point back to feasibility.
    pub repair_steps: usize,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            tol: 1e-7,
            slack_restarts: 64,
            payoff_restarts: 32,
            outer_rounds: 60,
            inner_iter: 200,
            ascent_settle: 1e-6,
            ascent: AscentConfig::default(),
            deterministic_limit: 1_000_000,
            polish_top: 4,
            penalty_init: 10.0,
            repair_steps: 30,
        }
    }
}

impl OptConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub(crate) fn inner_ascent(&self) -> AscentConfig {
        AscentConfig { max_iter: self.inner_iter, ..self.ascent }
    }
}
