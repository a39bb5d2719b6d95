//! Communicating the state itself: Agent 2 reconstructs `x0` as `x2` and is
//! judged by an expected single-letter distortion `δ(x0, x2)`.
//!
//! Four observation structures are covered:
//!
//! | encoder    | decoder           | optimizer                         |
//! |------------|-------------------|-----------------------------------|
//! | non-causal | causal            | [`min_dist_nc_enc_c_dec`]         |
//! | non-causal | strictly causal   | [`min_dist_nc_enc_sc_dec`]        |
//! | causal     | causal            | [`min_dist_c_enc_c_dec`] (exact)  |
//! | causal     | strictly causal   | [`min_dist_c_enc_sc_dec`] (exact) |

mod causal;
mod noncausal;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{CondPmf, JointPmf};

pub use causal::{
    encoder_distortion, min_dist_c_enc_c_dec, min_dist_c_enc_c_dec_with, min_dist_c_enc_sc_dec, CausalMode, EXACT_LIMIT,
};
pub use noncausal::{law_slack, min_dist_nc_enc_c_dec, min_dist_nc_enc_sc_dec, StateCommConfig, AUX_AXES};

/// State prior, channel `Γ(y | x0, x1)` and distortion `δ(x0, x2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateCommWire", into = "StateCommWire")]
pub struct StateCommProblem {
    state_prior: JointPmf,
    channel: CondPmf,
    distortion: Vec<f64>,
    x2_size: usize,
    d_max: f64,
    u_size: usize,
    v_size: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateCommWire {
    pub state_prior: JointPmf,
    pub channel: CondPmf,
    /// `δ(x0, x2)` flattened row-major.
    pub distortion: Vec<f64>,
    pub d_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_size: Option<usize>,
}

impl TryFrom<StateCommWire> for StateCommProblem {
    type Error = Error;
    fn try_from(w: StateCommWire) -> Result<Self> {
        let p = StateCommProblem::new(w.state_prior, w.channel, w.distortion, w.d_max)?;
        let (u, v) = (w.u_size.unwrap_or(p.u_size), w.v_size.unwrap_or(p.v_size));
        p.with_aux_sizes(u, v)
    }
}

impl From<StateCommProblem> for StateCommWire {
    fn from(p: StateCommProblem) -> Self {
        StateCommWire {
            state_prior: p.state_prior,
            channel: p.channel,
            distortion: p.distortion,
            d_max: p.d_max,
            u_size: Some(p.u_size),
            v_size: Some(p.v_size),
        }
    }
}

impl StateCommProblem {
    /// Auxiliary sizes default to `|U| = |X0| + 1` and `|V| = |X0||X1| + 1`.
    pub fn new(state_prior: JointPmf, channel: CondPmf, distortion: Vec<f64>, d_max: f64) -> Result<Self> {
        if state_prior.rank() != 1 {
            return Err(Error::Dimension("the state prior must have exactly one axis".into()));
        }
        let n0 = state_prior.shape()[0];
        let given = channel.given_shape();
        if given.len() != 2 || given[0] != n0 {
            return Err(Error::Dimension(format!(
                "channel must be conditioned on (x0, x1) with |X0| = {n0}, got {given:?}"
            )));
        }
        if distortion.is_empty() || !distortion.len().is_multiple_of(n0) {
            return Err(Error::Dimension(format!(
                "distortion has {} entries, not a multiple of |X0| = {n0}",
                distortion.len()
            )));
        }
        if !(d_max.is_finite() && d_max >= 0.0) {
            return Err(Error::Argument("d_max must be finite and non-negative".into()));
        }
        if distortion.iter().any(|d| !(0.0..=d_max).contains(d)) {
            return Err(Error::Argument(format!("distortion entries must lie in [0, {d_max}]")));
        }
        let x2_size = distortion.len() / n0;
        let n1 = given[1];
        Ok(Self { state_prior, channel, distortion, x2_size, d_max, u_size: n0 + 1, v_size: n0 * n1 + 1 })
    }

    pub fn with_aux_sizes(mut self, u_size: usize, v_size: usize) -> Result<Self> {
        if u_size == 0 || v_size == 0 {
            return Err(Error::Argument("auxiliary alphabets need at least one symbol".into()));
        }
        self.u_size = u_size;
        self.v_size = v_size;
        Ok(self)
    }

    /// Hamming distortion on a shared alphabet, `d_max = 1`.
    pub fn hamming(state_prior: JointPmf, channel: CondPmf) -> Result<Self> {
        let n = state_prior.shape()[0];
        let d = (0..n * n).map(|i| if i / n == i % n { 0.0 } else { 1.0 }).collect();
        Self::new(state_prior, channel, d, 1.0)
    }

    pub fn state_prior(&self) -> &JointPmf {
        &self.state_prior
    }

    pub fn channel(&self) -> &CondPmf {
        &self.channel
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn u_size(&self) -> usize {
        self.u_size
    }

    pub fn v_size(&self) -> usize {
        self.v_size
    }

    /// `(|X0|, |X1|, |X2|, |Y|)`
    pub fn dims(&self) -> (usize, usize, usize, usize) {
        let g = self.channel.given_shape();
        (g[0], g[1], self.x2_size, self.channel.out_axis().size())
    }

    pub fn delta(&self, x0: usize, x2: usize) -> f64 {
        self.distortion[x0 * self.x2_size + x2]
    }

    pub fn distortion(&self) -> &[f64] {
        &self.distortion
    }

    /// `Γ(y | x0, x1)`
    pub fn gamma(&self, x0: usize, x1: usize, y: usize) -> f64 {
        let (_, n1, _, ny) = self.dims();
        self.channel.probs()[(x0 * n1 + x1) * ny + y]
    }
}

/// Agent 2's reconstruction rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decoder {
    Constant {
        x2: usize,
    },
    /// `table[y]`
    OfY {
        table: Vec<usize>,
    },
    /// `table[u * |Y| + y]`
    OfUY {
        u_size: usize,
        y_size: usize,
        table: Vec<usize>,
    },
}

impl Decoder {
    pub fn apply(&self, u: usize, y: usize) -> usize {
        match self {
            Decoder::Constant { x2 } => *x2,
            Decoder::OfY { table } => table[y],
            Decoder::OfUY { y_size, table, .. } => table[u * y_size + y],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub min_distortion: f64,
    pub decoder: Decoder,
    /// Deterministic encoder `x0 -> x1`, when the optimum uses one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoder_map: Option<Vec<usize>>,
    /// Joint law over `(X0, U, V, X1, Y)` of the non-causal schemes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub law: Option<JointPmf>,
    /// `I(V;Y|U) - I(V;X0|U) - I(U;X0)` of `law`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
    /// False when the exact search was replaced by alternating optimization.
    pub exact: bool,
    /// Auxiliary sizes used, when applicable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aux_sizes: Option<(usize, usize)>,
}
