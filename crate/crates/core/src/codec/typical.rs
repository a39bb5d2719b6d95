//! Robust typicality: every cell of the empirical type lies within a
//! relative `eps` of the law, and cells of zero probability stay empty.

use crate::error::{Error, Result};
use crate::prob::JointPmf;

/// Count bounds of the robustly typical set for one law, block length and
/// `eps`.
#[derive(Debug, Clone)]
pub struct TypicalSet {
    shape: Vec<usize>,
    lo: Vec<u32>,
    hi: Vec<u32>,
}

impl TypicalSet {
    pub fn new(law: &JointPmf, n: usize, eps: f64) -> Self {
        let nf = n as f64;
        let (lo, hi) = law
            .probs()
            .iter()
            .map(|&q| {
                if q <= 0.0 {
                    return (0, 0);
                }
                // The slack absorbs round-off when a bound is an exact integer.
                let lo = (nf * (1.0 - eps) * q - 1e-9).ceil().max(0.0);
                let hi = (nf * (1.0 + eps) * q + 1e-9).floor().min(nf);
                (lo as u32, hi as u32)
            })
            .unzip();
        Self { shape: law.shape(), lo, hi }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// `[lo, hi]` for a flat cell index; empty when `lo > hi`.
    pub fn bounds(&self, cell: usize) -> (u32, u32) {
        (self.lo[cell], self.hi[cell])
    }

    pub fn accepts_counts(&self, counts: &[u32]) -> bool {
        counts.iter().zip(self.lo.iter().zip(&self.hi)).all(|(&c, (&lo, &hi))| lo <= c && c <= hi)
    }

    /// `seqs[k]` is the sequence on axis `k`; all must share one length.
    pub fn contains(&self, seqs: &[&[u8]]) -> bool {
        debug_assert_eq!(seqs.len(), self.shape.len());
        let n = seqs[0].len();
        let mut counts = vec![0u32; self.lo.len()];
        for t in 0..n {
            let flat = seqs.iter().zip(&self.shape).fold(0, |acc, (s, &d)| acc * d + s[t] as usize);
            counts[flat] += 1;
        }
        self.accepts_counts(&counts)
    }
}

/// Whether the tuple of sequences is robustly `eps`-typical for `law`.
pub fn is_typical(seqs: &[&[usize]], law: &JointPmf, eps: f64) -> Result<bool> {
    if seqs.len() != law.rank() {
        return Err(Error::Dimension(format!("{} sequences for a law with {} axes", seqs.len(), law.rank())));
    }
    let n = seqs.first().map_or(0, |s| s.len());
    if seqs.iter().any(|s| s.len() != n) {
        return Err(Error::Dimension("sequences differ in length".into()));
    }
    let shape = law.shape();
    for (s, &d) in seqs.iter().zip(&shape) {
        if let Some(&bad) = s.iter().find(|&&x| x >= d) {
            return Err(Error::Argument(format!("symbol {bad} outside an alphabet of size {d}")));
        }
    }
    let mut counts = vec![0u32; law.probs().len()];
    for t in 0..n {
        let flat = seqs.iter().zip(&shape).fold(0, |acc, (s, &d)| acc * d + s[t]);
        counts[flat] += 1;
    }
    Ok(TypicalSet::new(law, n, eps).accepts_counts(&counts))
}
