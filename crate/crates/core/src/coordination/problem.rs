use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::Rows;
use crate::prob::{Alphabet, CondPmf, JointPmf};

/// State prior `ρ0`, channel `Γ(y|x0,x1,x2)` and common payoff `w(x0,x1,x2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProblemWire", into = "ProblemWire")]
pub struct CoordinationProblem {
    state_prior: JointPmf,
    channel: CondPmf,
    payoff: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemWire {
    pub state_prior: JointPmf,
    pub channel: CondPmf,
    /// `w(x0, x1, x2)` flattened row-major.
    pub payoff: Vec<f64>,
}

impl TryFrom<ProblemWire> for CoordinationProblem {
    type Error = Error;
    fn try_from(w: ProblemWire) -> Result<Self> {
        CoordinationProblem::new(w.state_prior, w.channel, w.payoff)
    }
}

impl From<CoordinationProblem> for ProblemWire {
    fn from(p: CoordinationProblem) -> Self {
        ProblemWire { state_prior: p.state_prior, channel: p.channel, payoff: p.payoff }
    }
}

impl CoordinationProblem {
    pub fn new(state_prior: JointPmf, channel: CondPmf, payoff: Vec<f64>) -> Result<Self> {
        if state_prior.rank() != 1 {
            return Err(Error::Dimension("the state prior must have exactly one axis".into()));
        }
        let given = channel.given_shape();
        if given.len() != 3 || given[0] != state_prior.axes()[0].size() {
            return Err(Error::Dimension(format!(
                "channel must be conditioned on (x0, x1, x2) with |X0| = {}, got {:?}",
                state_prior.axes()[0].size(),
                given
            )));
        }
        let len: usize = given.iter().product();
        if payoff.len() != len {
            return Err(Error::Dimension(format!("payoff has {} entries, expected {}", payoff.len(), len)));
        }
        if payoff.iter().any(|w| !w.is_finite()) {
            return Err(Error::Argument("payoff entries must be finite".into()));
        }
        Ok(Self { state_prior, channel, payoff })
    }

    pub fn state_prior(&self) -> &JointPmf {
        &self.state_prior
    }

    pub fn channel(&self) -> &CondPmf {
        &self.channel
    }

    pub fn payoff(&self) -> &[f64] {
        &self.payoff
    }

    pub fn x0(&self) -> &Alphabet {
        &self.channel.given_axes()[0]
    }

    pub fn x1(&self) -> &Alphabet {
        &self.channel.given_axes()[1]
    }

    pub fn x2(&self) -> &Alphabet {
        &self.channel.given_axes()[2]
    }

    /// `(|X0|, |X1|, |X2|)`
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.x0().size(), self.x1().size(), self.x2().size())
    }

    pub fn w(&self, x0: usize, x1: usize, x2: usize) -> f64 {
        let (_, n1, n2) = self.dims();
        self.payoff[(x0 * n1 + x1) * n2 + x2]
    }

    /// Expected payoff `Σ Q̄ w` of a target law over `(x0, x1, x2)`.
    pub fn expected_payoff(&self, qbar: &JointPmf) -> Result<f64> {
        self.check_target(qbar)?;
        Ok(qbar.probs().iter().zip(&self.payoff).map(|(q, w)| q * w).sum())
    }

    pub fn check_target(&self, qbar: &JointPmf) -> Result<()> {
        let (n0, n1, n2) = self.dims();
        if qbar.shape() != [n0, n1, n2] {
            return Err(Error::Dimension(format!(
                "target has shape {:?}, problem expects [{n0}, {n1}, {n2}]",
                qbar.shape()
            )));
        }
        Ok(())
    }

    /// Target axes `(X0, X1, X2)` with the problem's labels.
    pub fn target_axes(&self) -> Vec<Alphabet> {
        self.channel.given_axes().to_vec()
    }

    /// `Q̄ = ρ0(x0) P(x1, x2 | x0)` from rows indexed by `x0` over `(x1, x2)`.
    pub fn target_from_rows(&self, rows: &Rows) -> Result<JointPmf> {
        let prior = self.state_prior.probs();
        let probs = (0..rows.rows).flat_map(|x0| rows.row(x0).iter().map(move |&p| prior[x0] * p)).collect();
        JointPmf::new(self.target_axes(), probs)
    }
}

/// Auxiliary kernel `P(V | X0, X1, X2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxChannel {
    pub kernel: CondPmf,
    pub v_size: usize,
}

impl AuxChannel {
    pub fn new(kernel: CondPmf) -> Result<Self> {
        if kernel.given_axes().len() != 3 {
            return Err(Error::Dimension("auxiliary kernel must be conditioned on (x0, x1, x2)".into()));
        }
        let v_size = kernel.out_axis().size();
        Ok(Self { kernel, v_size })
    }

    pub fn from_rows(axes: &[Alphabet], rows: &Rows) -> Result<Self> {
        Self::new(CondPmf::new(axes.to_vec(), Alphabet::new(rows.cols)?, rows.data.clone())?)
    }

    /// `V` constant.
    pub fn constant(axes: &[Alphabet]) -> Result<Self> {
        Self::new(CondPmf::deterministic(axes.to_vec(), Alphabet::new(1)?, |_| 0)?)
    }

    pub fn rows(&self) -> Rows {
        Rows::from_data(self.kernel.rows(), self.v_size, self.kernel.probs().to_vec())
    }

    /// Applies a relabeling `v -> perm[v]` of the auxiliary symbols.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.v_size {
            return Err(Error::Dimension("permutation length differs from |V|".into()));
        }
        let rows = self.rows();
        let mut data = vec![0.0; rows.data.len()];
        for r in 0..rows.rows {
            for v in 0..self.v_size {
                data[r * self.v_size + perm[v]] = rows.row(r)[v];
            }
        }
        Self::new(CondPmf::new(self.kernel.given_axes().to_vec(), self.kernel.out_axis().clone(), data)?)
    }
}
