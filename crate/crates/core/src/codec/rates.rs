//! The three rate constraints of the block-Markov scheme.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{conditional_mutual_information, mutual_information, JointPmf};

/// Margins `δ(ε1), δ(ε2), δ(ε3)` in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deltas {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl Default for Deltas {
    fn default() -> Self {
        Self { d1: 0.05, d2: 0.05, d3: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRegion {
    pub i_x0_u: f64,
    pub i_v_x0u: f64,
    pub i_v_yu: f64,
    pub deltas: Deltas,
    /// `I(V;Y,U) - δ3 - I(X0;U) - δ1 - I(V;X0,U) - δ2`
    pub gap: f64,
}

impl RateRegion {
    pub fn feasible(&self) -> bool {
        self.gap > 0.0
    }

    /// Rates splitting the gap evenly between the three constraints.
    pub fn midpoint(&self) -> Option<(f64, f64)> {
        self.feasible()
            .then(|| (self.i_x0_u + self.deltas.d1 + self.gap / 3.0, self.i_v_x0u + self.deltas.d2 + self.gap / 3.0))
    }

    pub fn admits(&self, r: f64, r_tilde: f64) -> bool {
        r > self.i_x0_u + self.deltas.d1
            && r_tilde > self.i_v_x0u + self.deltas.d2
            && r + r_tilde < self.i_v_yu - self.deltas.d3
    }
}

/// Axes of a scheme law.
pub const X0: usize = 0;
pub const U: usize = 1;
pub const V: usize = 2;
pub const X1: usize = 3;
pub const Y: usize = 4;

/// Mutual informations behind the constraints for a law over
/// `(X0, U, V, X1, Y)` in which `Y` depends on `(U, V)` only through
/// `(X0, X1)`.
pub fn rate_region_check(law: &JointPmf, deltas: Deltas) -> Result<RateRegion> {
    if law.rank() != 5 {
        return Err(Error::Dimension(format!("scheme law needs 5 axes (x0, u, v, x1, y), got {}", law.rank())));
    }
    let leak = conditional_mutual_information(law, &[Y], &[U, V], &[X0, X1])?;
    if leak > 1e-9 {
        return Err(Error::Argument(format!("the channel output depends on (U, V) beyond (X0, X1): {leak:e} bits")));
    }
    let i_x0_u = mutual_information(law, &[X0], &[U])?;
    let i_v_x0u = mutual_information(law, &[V], &[X0, U])?;
    let i_v_yu = mutual_information(law, &[V], &[Y, U])?;
    let gap = i_v_yu - deltas.d3 - i_x0_u - deltas.d1 - i_v_x0u - deltas.d2;
    Ok(RateRegion { i_x0_u, i_v_x0u, i_v_yu, deltas, gap })
}
