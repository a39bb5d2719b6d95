//! Exact typicality probabilities for one random codeword, used when the
//! codebooks are far too large to store.
//!
//! A codeword drawn i.i.d. from `q` next to fixed sequences splits, within
//! each cell `a` of the fixed sequences' joint type, into a multinomial count
//! vector. Typicality is a box constraint on those counts, so the probability
//! that the codeword is typical is a product over cells of multinomial box
//! probabilities, each computed by a small dynamic program over symbols.
//! Given the counts, every arrangement inside a cell is equally likely, which
//! makes exact conditional sampling a matter of one backward pass and a
//! shuffle.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};

use super::typical::TypicalSet;
use crate::rng;

/// `ln k!` for `k = 0..=n`.
pub(crate) fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

fn ln_binom_pmf(ln_fact: &[f64], r: usize, j: usize, p: f64) -> f64 {
    if p <= 0.0 {
        return if j == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if p >= 1.0 {
        return if j == r { 0.0 } else { f64::NEG_INFINITY };
    }
    ln_fact[r] - ln_fact[j] - ln_fact[r - j] + j as f64 * p.ln() + (r - j) as f64 * (-p).ln_1p()
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let top = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + values.map(|v| (v - top).exp()).sum::<f64>().ln()
}

/// Multinomial box probability for one cell with `m` trials.
#[derive(Debug, Clone)]
struct CellDp {
    m: usize,
    lo: Vec<usize>,
    hi: Vec<usize>,
    /// Conditional success probability of symbol `c` given it is not `< c`.
    cond_q: Vec<f64>,
    /// `levels[c]` covers remaining counts `base[c]..base[c] + len`.
    base: Vec<usize>,
    levels: Vec<Vec<f64>>,
}

impl CellDp {
    fn new(m: usize, lo: Vec<usize>, hi: Vec<usize>, q: &[f64], ln_fact: &[f64]) -> Self {
        let k = q.len();
        let mut tail = 0.0;
        let mut cond_q = vec![0.0; k];
        for c in (0..k).rev() {
            tail += q[c];
            cond_q[c] = if tail > 0.0 { (q[c] / tail).min(1.0) } else { 0.0 };
        }
        // Window of remaining counts at each level: reachable from the top and
        // able to finish within the bounds of the later symbols.
        let mut base = vec![0usize; k + 1];
        let mut levels = Vec::with_capacity(k + 1);
        let (mut used_lo, mut used_hi) = (0usize, 0usize);
        for c in 0..=k {
            let from = m.saturating_sub(used_hi).max(lo[c..].iter().sum::<usize>());
            let to = m.checked_sub(used_lo).map(|t| t.min(hi[c..].iter().sum::<usize>()));
            let len = match to {
                Some(to) if to >= from => to - from + 1,
                _ => 0,
            };
            base[c] = from;
            levels.push(vec![f64::NEG_INFINITY; len]);
            if c < k {
                used_lo += lo[c];
                used_hi += hi[c];
            }
        }
        if let Some(x) = levels[k].first_mut() {
            *x = 0.0;
        }
        for c in (0..k).rev() {
            for idx in 0..levels[c].len() {
                let r = base[c] + idx;
                let next = &levels[c + 1];
                let terms = (lo[c]..=hi[c].min(r)).filter_map(|j| {
                    let rest = r - j;
                    let pos = rest.checked_sub(base[c + 1])?;
                    let tail = *next.get(pos)?;
                    Some(ln_binom_pmf(ln_fact, r, j, cond_q[c]) + tail)
                });
                levels[c][idx] = log_sum_exp(terms);
            }
        }
        Self { m, lo, hi, cond_q, base, levels }
    }

    fn ln_prob(&self) -> f64 {
        let c0 = &self.levels[0];
        match self.m.checked_sub(self.base[0]) {
            Some(pos) if pos < c0.len() => c0[pos],
            _ => f64::NEG_INFINITY,
        }
    }

    /// Draws the count vector conditioned on the box.
    fn sample_counts<R: Rng + ?Sized>(&self, rng: &mut R, ln_fact: &[f64]) -> Vec<usize> {
        let k = self.cond_q.len();
        let mut r = self.m;
        let mut counts = vec![0usize; k];
        for c in 0..k {
            let here = self.levels[c][r - self.base[c]];
            let next = &self.levels[c + 1];
            let choices: Vec<(usize, f64)> = (self.lo[c]..=self.hi[c].min(r))
                .filter_map(|j| {
                    let pos = (r - j).checked_sub(self.base[c + 1])?;
                    let tail = *next.get(pos)?;
                    let w = (ln_binom_pmf(ln_fact, r, j, self.cond_q[c]) + tail - here).exp();
                    (w > 0.0).then_some((j, w))
                })
                .collect();
            let weights: Vec<f64> = choices.iter().map(|x| x.1).collect();
            let j = choices[rng::sample_index(rng, &weights)].0;
            counts[c] = j;
            r -= j;
        }
        counts
    }
}

/// Typicality of one fresh codeword next to fixed sequences.
///
/// The typical set's last axis is the codeword; the other axes are the
/// fixed sequences, in order.
#[derive(Debug, Clone)]
pub struct FreshCodeword<'a> {
    set: &'a TypicalSet,
    q: &'a [f64],
    /// Positions of each cell of the fixed sequences' joint type.
    positions: Vec<Vec<usize>>,
    cells: Vec<CellDp>,
    ln_prob: f64,
}

impl<'a> FreshCodeword<'a> {
    pub fn new(set: &'a TypicalSet, fixed: &[&[u8]], q: &'a [f64], ln_fact: &[f64]) -> Self {
        let shape = set.shape();
        let k = *shape.last().expect("typical set has axes");
        debug_assert_eq!(k, q.len());
        debug_assert_eq!(fixed.len() + 1, shape.len());
        let groups: usize = shape[..shape.len() - 1].iter().product();
        let n = fixed.first().map_or(0, |s| s.len());
        let mut positions = vec![Vec::new(); groups];
        for t in 0..n {
            let a = fixed.iter().zip(shape).fold(0, |acc, (s, &d)| acc * d + s[t] as usize);
            positions[a].push(t);
        }
        let mut ln_prob = 0.0;
        let mut cells = Vec::with_capacity(groups);
        for (a, pos) in positions.iter().enumerate() {
            let (lo, hi): (Vec<usize>, Vec<usize>) = (0..k)
                .map(|c| {
                    let (lo, hi) = set.bounds(a * k + c);
                    (lo as usize, hi as usize)
                })
                .unzip();
            // A symbol the codebook never emits contributes a zero count.
            let hi = hi.iter().zip(q).map(|(&h, &p)| if p > 0.0 { h } else { 0 }).collect();
            let cell = CellDp::new(pos.len(), lo, hi, q, ln_fact);
            ln_prob += cell.ln_prob();
            cells.push(cell);
        }
        Self { set, q, positions, cells, ln_prob }
    }

    /// Natural log of the probability that the codeword is typical.
    pub fn ln_prob(&self) -> f64 {
        self.ln_prob
    }

    /// A codeword conditioned on typicality, if that event is possible.
    pub fn sample_typical<R: Rng + ?Sized>(&self, rng: &mut R, ln_fact: &[f64]) -> Option<Vec<u8>> {
        if self.ln_prob == f64::NEG_INFINITY {
            return None;
        }
        let n: usize = self.positions.iter().map(Vec::len).sum();
        let mut word = vec![0u8; n];
        for (pos, cell) in self.positions.iter().zip(&self.cells) {
            let counts = cell.sample_counts(rng, ln_fact);
            let mut slots = pos.clone();
            slots.shuffle(rng);
            let mut it = slots.into_iter();
            for (c, &cnt) in counts.iter().enumerate() {
                for t in it.by_ref().take(cnt) {
                    word[t] = c as u8;
                }
            }
        }
        Some(word)
    }

    /// A codeword conditioned on not being typical, by rejection. When
    /// typicality is nearly certain the last draw is kept.
    pub fn sample_atypical<R: Rng + ?Sized>(&self, rng: &mut R, fixed: &[&[u8]]) -> Vec<u8> {
        let n = fixed.first().map_or(0, |s| s.len());
        let mut word = vec![0u8; n];
        for _ in 0..1000 {
            fill_iid(rng, self.q, &mut word);
            let mut seqs: Vec<&[u8]> = fixed.to_vec();
            seqs.push(&word);
            if !self.set.contains(&seqs) {
                break;
            }
        }
        word
    }
}

pub(crate) fn fill_iid<R: Rng + ?Sized>(rng: &mut R, q: &[f64], out: &mut [u8]) {
    for s in out.iter_mut() {
        *s = rng::sample_index(rng, q) as u8;
    }
}

/// `ln P(none of M independent codewords hits)`, each hitting with
/// probability `exp(ln_p)`.
pub(crate) fn ln_no_hit(ln_m: f64, ln_p: f64) -> f64 {
    let p = ln_p.exp();
    if p < 1e-6 {
        -(ln_m + ln_p).exp()
    } else {
        ln_m.exp() * (-p).ln_1p()
    }
}

/// Number of successes among `trials` (possibly astronomically many) draws
/// of probability `p`. Beyond the reach of exact samplers the count is the
/// Poisson limit, and beyond that its mean.
pub(crate) fn success_count<R: Rng + ?Sized>(rng: &mut R, trials: f64, p: f64) -> f64 {
    if trials < 1.0 || p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return trials;
    }
    if trials < 9.0e15 {
        if let Ok(d) = Binomial::new(trials as u64, p) {
            return d.sample(rng) as f64;
        }
    }
    let lambda = trials * p;
    if lambda < 1e12 {
        Poisson::new(lambda).map_or(0.0, |d| d.sample(rng))
    } else {
        lambda
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::JointPmf;
    use crate::rng::tag;

    /// Enumerates every codeword of a short block.
    fn brute_force(set: &TypicalSet, fixed: &[&[u8]], q: &[f64]) -> f64 {
        let n = fixed[0].len();
        let k = q.len();
        let mut total = 0.0;
        let mut word = vec![0u8; n];
        for code in 0..k.pow(n as u32) {
            let mut c = code;
            let mut p = 1.0;
            for s in word.iter_mut() {
                *s = (c % k) as u8;
                c /= k;
                p *= q[*s as usize];
            }
            let mut seqs: Vec<&[u8]> = fixed.to_vec();
            seqs.push(&word);
            if set.contains(&seqs) {
                total += p;
            }
        }
        total
    }

    #[test]
    fn box_probability_matches_enumeration() {
        let law = JointPmf::from_shape(&[2, 3], vec![0.2, 0.15, 0.15, 0.05, 0.25, 0.2]).unwrap();
        let q = [0.25, 0.4, 0.35];
        let ln_fact = ln_factorials(16);
        let mut r = rng::stream(3, tag::TRIAL, 0);
        for (n, eps) in [(7usize, 0.6), (9, 0.9), (8, 0.4), (9, 2.0)] {
            for _ in 0..4 {
                let x: Vec<u8> = (0..n).map(|_| r.random_range(0..2)).collect();
                let set = TypicalSet::new(&law, n, eps);
                let dp = FreshCodeword::new(&set, &[&x], &q, &ln_fact);
                let want = brute_force(&set, &[&x], &q);
                let got = dp.ln_prob().exp();
                assert!((got - want).abs() < 1e-12 * want.max(1.0), "n={n} eps={eps}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn conditioned_samples_are_typical_and_follow_the_iid_law() {
        let law = JointPmf::from_shape(&[2, 2], vec![0.3, 0.2, 0.1, 0.4]).unwrap();
        let q = [0.4, 0.6];
        let n = 6;
        let ln_fact = ln_factorials(n);
        let x: Vec<u8> = vec![0, 0, 0, 1, 1, 0];
        let set = TypicalSet::new(&law, n, 0.8);
        let dp = FreshCodeword::new(&set, &[&x], &q, &ln_fact);
        let total = dp.ln_prob().exp();
        let mut hist = std::collections::HashMap::new();
        let mut r = rng::stream(5, tag::TRIAL, 0);
        let draws = 40_000;
        for _ in 0..draws {
            let w = dp.sample_typical(&mut r, &ln_fact).unwrap();
            assert!(set.contains(&[&x, &w]));
            *hist.entry(w).or_insert(0usize) += 1;
        }
        for (w, count) in hist {
            let p: f64 = w.iter().map(|&s| q[s as usize]).product::<f64>() / total;
            let freq = count as f64 / draws as f64;
            assert!((freq - p).abs() < 5.0 * (p / draws as f64).sqrt() + 1e-3, "{w:?}: {freq} vs {p}");
        }
    }

    #[test]
    fn impossible_boxes_have_zero_probability() {
        // The fixed sequence is far from its marginal, so no codeword fits.
        let law = JointPmf::from_shape(&[2, 2], vec![0.25; 4]).unwrap();
        let set = TypicalSet::new(&law, 8, 0.1);
        let ln_fact = ln_factorials(8);
        let x = [0u8; 8];
        let dp = FreshCodeword::new(&set, &[&x], &[0.5, 0.5], &ln_fact);
        assert_eq!(dp.ln_prob(), f64::NEG_INFINITY);
        assert!(dp.sample_typical(&mut rng::stream(0, tag::TRIAL, 0), &ln_fact).is_none());
    }

    #[test]
    fn no_hit_probability() {
        let p: f64 = 0.3;
        let m: f64 = 5.0;
        assert!((ln_no_hit(m.ln(), p.ln()) - m * (1.0 - p).ln()).abs() < 1e-14);
        // Tiny p: first-order exponent.
        let v = ln_no_hit(1e6f64.ln(), 1e-9f64.ln());
        assert!((v + 1e-3).abs() < 1e-12);
    }
}
