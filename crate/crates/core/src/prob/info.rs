//! Entropy and mutual information in bits.

use serde::{Deserialize, Serialize};

use super::pmf::JointPmf;
use crate::error::{Error, Result};

/// Negative information values above this are treated as round-off.
pub const NEG_CLAMP: f64 = 1e-12;

pub fn entropy_of(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.log2()).sum::<f64>()
}

/// `H(p)` over all axes, in bits.
pub fn entropy(p: &JointPmf) -> f64 {
    entropy_of(p.probs()).max(0.0)
}

fn marginal_entropy(joint: &JointPmf, axes: &[usize]) -> Result<f64> {
    if axes.is_empty() {
        return Ok(0.0);
    }
    Ok(entropy(&joint.marginalize(axes)?))
}

fn disjoint(sets: &[&[usize]]) -> Result<()> {
    let mut all: Vec<usize> = sets.iter().flat_map(|s| s.iter().copied()).collect();
    let n = all.len();
    all.sort_unstable();
    all.dedup();
    if all.len() != n {
        return Err(Error::Argument("axis sets must be disjoint".into()));
    }
    Ok(())
}

fn clamp(value: f64, what: &str) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -NEG_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::Consistency(format!("{what} = {value:e} < 0")))
    }
}

/// `I(A;B)` with every other axis marginalized out.
pub fn mutual_information(joint: &JointPmf, a: &[usize], b: &[usize]) -> Result<f64> {
    conditional_mutual_information(joint, a, b, &[])
}

/// `I(A;B|C) = H(A,C) + H(B,C) - H(A,B,C) - H(C)`.
pub fn conditional_mutual_information(joint: &JointPmf, a: &[usize], b: &[usize], c: &[usize]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Argument("mutual information needs two nonempty axis sets".into()));
    }
    disjoint(&[a, b, c])?;
    let cat = |parts: &[&[usize]]| parts.concat();
    let h_ac = marginal_entropy(joint, &cat(&[a, c]))?;
    let h_bc = marginal_entropy(joint, &cat(&[b, c]))?;
    let h_abc = marginal_entropy(joint, &cat(&[a, b, c]))?;
    let h_c = marginal_entropy(joint, c)?;
    clamp(h_ac + h_bc - h_abc - h_c, "mutual information")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distance {
    /// `(1/2) Σ |p - q|`
    pub tv: f64,
    /// `max |p - q|` over entries
    pub max_abs: f64,
}

pub fn total_variation(p: &JointPmf, q: &JointPmf) -> Result<Distance> {
    if p.shape() != q.shape() {
        return Err(Error::Dimension(format!("shapes {:?} and {:?} differ", p.shape(), q.shape())));
    }
    let (mut sum, mut max) = (0.0f64, 0.0f64);
    for (x, y) in p.probs().iter().zip(q.probs()) {
        let d = (x - y).abs();
        sum += d;
        max = max.max(d);
    }
    Ok(Distance { tv: 0.5 * sum, max_abs: max })
}

/// Binary entropy function in bits.
pub fn h2(p: f64) -> f64 {
    entropy_of(&[p, 1.0 - p])
}
