//! Empirical check that enlarging `V` past `|X0||X1||X2|` buys nothing.

use serde::{Deserialize, Serialize};

use super::slack::max_constraint_slack_warm;
use super::OptConfig;
use crate::error::Result;
use crate::prob::{CondPmf, JointPmf};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CardinalityRow {
    pub v_size: usize,
    pub slack: f64,
    pub unconverged: usize,
}

/// Maximal slack for every `|V|` in `1..=|X0||X1||X2| + 2`.
///
/// Each size is also started from the best kernel of the previous size, which
/// is feasible for the larger alphabet, so the column is non-decreasing.
pub fn cardinality_stress(qbar: &JointPmf, channel: &CondPmf, cfg: &OptConfig) -> Result<Vec<CardinalityRow>> {
    let top: usize = qbar.shape().iter().product::<usize>() + 2;
    let mut rows = Vec::with_capacity(top);
    let mut warm = Vec::new();
    for v_size in 1..=top {
        let report = max_constraint_slack_warm(qbar, channel, v_size, cfg, &warm)?;
        rows.push(CardinalityRow { v_size, slack: report.slack, unconverged: report.unconverged() });
        warm = vec![report.best_aux.rows()];
    }
    Ok(rows)
}
