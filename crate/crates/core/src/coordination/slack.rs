//! The information constraint `I(X0;X2) <= I(V;Y|X2) - I(V;X0|X2)` and its
//! maximization over the auxiliary kernel `P(V | X0, X1, X2)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::problem::AuxChannel;
use super::OptConfig;
use crate::error::{Error, Result};
use crate::optim::{eg_ascent, Rows, SmoothObjective};
use crate::prob::{conditional_mutual_information, mutual_information, CondPmf, JointPmf};
use crate::rng::{self, tag};

/// `I_Q(V;Y|X2) - I_Q(V;X0|X2) - I_Q(X0;X2)` under `Q = Q̄ · Γ · P(V|X0X1X2)`.
pub fn constraint_slack(qbar: &JointPmf, aux: &AuxChannel, channel: &CondPmf) -> Result<f64> {
    if qbar.rank() != 3 {
        return Err(Error::Dimension("target must be a law over (x0, x1, x2)".into()));
    }
    let q = qbar.compose(channel, &[0, 1, 2])?.compose(&aux.kernel, &[0, 1, 2])?;
    // axes: 0 = X0, 1 = X1, 2 = X2, 3 = Y, 4 = V
    let rhs =
        conditional_mutual_information(&q, &[4], &[3], &[2])? - conditional_mutual_information(&q, &[4], &[0], &[2])?;
    let lhs = mutual_information(&q, &[0], &[2])?;
    Ok(rhs - lhs)
}

/// Dense evaluator of the slack and its gradients, for the optimizers.
///
/// Uses `slack = H(Y X2) - H(V Y X2) + H(V X0 X2) - H(X0) - H(X2)` with the
/// marginals accumulated directly from `Q̄`, `Γ` and the kernel.
#[derive(Debug, Clone)]
pub(crate) struct SlackModel {
    n0: usize,
    n1: usize,
    n2: usize,
    ny: usize,
    nv: usize,
    gamma: Vec<f64>,
}

struct Marginals {
    yx2: Vec<f64>,
    vyx2: Vec<f64>,
    vx0x2: Vec<f64>,
    x0: Vec<f64>,
    x2: Vec<f64>,
}

fn h(m: &[f64]) -> f64 {
    crate::prob::entropy_of(m)
}

/// `log2 m + log2 e`, the derivative of `-m log2 m` up to sign.
fn dlog(m: &[f64]) -> Vec<f64> {
    m.iter().map(|&p| p.max(1e-300).log2() + std::f64::consts::LOG2_E).collect()
}

impl SlackModel {
    pub fn new(channel: &CondPmf, nv: usize) -> Self {
        let g = channel.given_shape();
        Self { n0: g[0], n1: g[1], n2: g[2], ny: channel.out_axis().size(), nv, gamma: channel.probs().to_vec() }
    }

    pub fn nv(&self) -> usize {
        self.nv
    }

    fn atoms(&self) -> usize {
        self.n0 * self.n1 * self.n2
    }

    fn marginals(&self, qbar: &[f64], kernel: &[f64]) -> Marginals {
        let (n1, n2, ny, nv) = (self.n1, self.n2, self.ny, self.nv);
        let mut m = Marginals {
            yx2: vec![0.0; ny * n2],
            vyx2: vec![0.0; nv * ny * n2],
            vx0x2: vec![0.0; nv * self.n0 * n2],
            x0: vec![0.0; self.n0],
            x2: vec![0.0; n2],
        };
        for a in 0..self.atoms() {
            let q = qbar[a];
            if q == 0.0 {
                continue;
            }
            let (x0, x2) = (a / (n1 * n2), a % n2);
            m.x0[x0] += q;
            m.x2[x2] += q;
            let k = &kernel[a * nv..(a + 1) * nv];
            for v in 0..nv {
                m.vx0x2[(v * self.n0 + x0) * n2 + x2] += q * k[v];
            }
            for y in 0..ny {
                let qy = q * self.gamma[a * ny + y];
                m.yx2[y * n2 + x2] += qy;
                for v in 0..nv {
                    m.vyx2[(v * ny + y) * n2 + x2] += qy * k[v];
                }
            }
        }
        m
    }

    fn value_of(m: &Marginals) -> f64 {
        h(&m.yx2) - h(&m.vyx2) + h(&m.vx0x2) - h(&m.x0) - h(&m.x2)
    }

    pub fn slack(&self, qbar: &[f64], kernel: &[f64]) -> f64 {
        Self::value_of(&self.marginals(qbar, kernel))
    }

    /// Calls `f(a, y, v, d)` with `d = ∂ slack / ∂ Q(a, y, v)` for every cell.
    fn for_each_partial(&self, m: &Marginals, mut f: impl FnMut(usize, usize, usize, f64)) {
        let (n1, n2, ny, nv) = (self.n1, self.n2, self.ny, self.nv);
        let (l1, l2, l3, l0, lx2) = (dlog(&m.yx2), dlog(&m.vyx2), dlog(&m.vx0x2), dlog(&m.x0), dlog(&m.x2));
        for a in 0..self.atoms() {
            let (x0, x2) = (a / (n1 * n2), a % n2);
            let base = l0[x0] + lx2[x2];
            for y in 0..ny {
                let by = base - l1[y * n2 + x2];
                for v in 0..nv {
                    f(a, y, v, by + l2[(v * ny + y) * n2 + x2] - l3[(v * self.n0 + x0) * n2 + x2]);
                }
            }
        }
    }

    /// Gradient with respect to the kernel, each row divided by `Q̄(a)`.
    pub fn grad_kernel(&self, qbar: &[f64], kernel: &[f64], out: &mut [f64]) -> f64 {
        let m = self.marginals(qbar, kernel);
        out.iter_mut().for_each(|g| *g = 0.0);
        let (ny, nv) = (self.ny, self.nv);
        self.for_each_partial(&m, |a, y, v, d| out[a * nv + v] += self.gamma[a * ny + y] * d);
        Self::value_of(&m)
    }

    /// Gradient with respect to the target law entries `Q̄(a)`.
    pub fn grad_target(&self, qbar: &[f64], kernel: &[f64], out: &mut [f64]) -> f64 {
        let m = self.marginals(qbar, kernel);
        out.iter_mut().for_each(|g| *g = 0.0);
        let (ny, nv) = (self.ny, self.nv);
        self.for_each_partial(&m, |a, y, v, d| out[a] += self.gamma[a * ny + y] * kernel[a * nv + v] * d);
        Self::value_of(&m)
    }
}

pub(crate) struct KernelObjective<'a> {
    pub model: &'a SlackModel,
    pub qbar: &'a [f64],
}

impl SmoothObjective for KernelObjective<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        self.model.slack(self.qbar, x)
    }
    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.model.grad_kernel(self.qbar, x, grad)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartKind {
    /// Best deterministic kernel found by enumeration (no ascent).
    Vertex,
    /// Ascent from a smoothed deterministic kernel.
    Polish,
    /// Ascent from a caller-supplied kernel.
    Warm,
    /// Ascent from a Dirichlet(1) draw.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub restart: usize,
    pub kind: StartKind,
    pub slack: f64,
    pub converged: bool,
}

/// Outcome of the auxiliary-kernel search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub slack: f64,
    pub implementable: bool,
    pub tol: f64,
    pub v_size: usize,
    pub restarts: usize,
    pub trace: Vec<TraceEntry>,
    pub best_aux: AuxChannel,
}

impl FeasibilityReport {
    /// Number of ascents that hit the iteration cap.
    pub fn unconverged(&self) -> usize {
        self.trace.iter().filter(|t| !t.converged).count()
    }
}

/// Number of set partitions of `m` atoms into at most `k` blocks, saturating.
fn partition_count(m: usize, k: usize) -> u128 {
    // Stirling numbers of the second kind, row by row.
    let mut row = vec![0u128; k + 1];
    row[0] = 1;
    for n in 1..=m {
        let mut next = vec![0u128; k + 1];
        for j in 1..=k.min(n) {
            next[j] = (j as u128).saturating_mul(row[j]).saturating_add(row[j - 1]);
        }
        row = next;
    }
    row.iter().skip(1).fold(0u128, |a, &b| a.saturating_add(b))
}

/// Visits every restricted growth string of length `m` with at most `k` blocks,
/// i.e. every deterministic kernel up to relabeling of `V`.
fn for_each_partition(m: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(pos: usize, used: usize, labels: &mut Vec<usize>, m: usize, k: usize, f: &mut impl FnMut(&[usize])) {
        if pos == m {
            f(labels);
            return;
        }
        for l in 0..(used + 1).min(k) {
            labels[pos] = l;
            rec(pos + 1, used.max(l + 1), labels, m, k, f);
        }
    }
    let mut labels = vec![0; m];
    if m == 0 {
        f(&labels);
    } else {
        rec(0, 0, &mut labels, m, k, f);
    }
}

/// Best deterministic kernels over the support of `qbar` (modulo relabeling),
/// or `None` when there are more than `limit` of them.
fn best_vertices(model: &SlackModel, qbar: &[f64], limit: usize, keep: usize) -> Option<Vec<(f64, Rows)>> {
    let support: Vec<usize> = (0..qbar.len()).filter(|&a| qbar[a] > 0.0).collect();
    let nv = model.nv();
    if partition_count(support.len(), nv) > limit as u128 {
        return None;
    }
    let mut best: Vec<(f64, Vec<usize>)> = Vec::new();
    let mut labels_full = vec![0usize; qbar.len()];
    for_each_partition(support.len(), nv, &mut |labels| {
        for (i, &a) in support.iter().enumerate() {
            labels_full[a] = labels[i];
        }
        let k = Rows::deterministic(nv, &labels_full);
        let s = model.slack(qbar, &k.data);
        if best.len() < keep || s > best[best.len() - 1].0 {
            let pos = best.iter().position(|(b, _)| s > *b).unwrap_or(best.len());
            best.insert(pos, (s, labels_full.clone()));
            best.truncate(keep);
        }
    });
    Some(best.into_iter().map(|(s, l)| (s, Rows::deterministic(nv, &l))).collect())
}

/// Maximizes the slack over `P(V | X0, X1, X2)` with `|V| = v_size`.
pub fn max_constraint_slack(
    qbar: &JointPmf,
    channel: &CondPmf,
    v_size: usize,
    cfg: &OptConfig,
) -> Result<FeasibilityReport> {
    max_constraint_slack_warm(qbar, channel, v_size, cfg, &[])
}

/// As [`max_constraint_slack`], additionally ascending from each kernel in
/// `warm` (kernels with fewer symbols are padded with unused symbols).
pub fn max_constraint_slack_warm(
    qbar: &JointPmf,
    channel: &CondPmf,
    v_size: usize,
    cfg: &OptConfig,
    warm: &[Rows],
) -> Result<FeasibilityReport> {
    if v_size == 0 {
        return Err(Error::Argument("v_size must be at least 1".into()));
    }
    if qbar.rank() != 3 || qbar.shape() != channel.given_shape() {
        return Err(Error::Dimension(format!(
            "target shape {:?} does not match channel inputs {:?}",
            qbar.shape(),
            channel.given_shape()
        )));
    }
    let model = SlackModel::new(channel, v_size);
    let q = qbar.probs();
    let atoms = q.len();

    let constant = Rows::deterministic(v_size, &vec![0; atoms]);
    let mut candidates: Vec<(f64, Rows, TraceEntry)> = Vec::new();
    let const_slack = model.slack(q, &constant.data);
    candidates.push((
        const_slack,
        constant,
        TraceEntry { restart: 0, kind: StartKind::Vertex, slack: const_slack, converged: true },
    ));

    let mut starts: Vec<(StartKind, Rows)> = Vec::new();
    if let Some(vertices) = best_vertices(&model, q, cfg.deterministic_limit, cfg.polish_top) {
        for (s, k) in vertices {
            candidates.push((
                s,
                k.clone(),
                TraceEntry { restart: candidates.len(), kind: StartKind::Vertex, slack: s, converged: true },
            ));
            starts.push((StartKind::Polish, k.smoothed(0.02)));
        }
    }
    for w in warm {
        if w.rows != atoms || w.cols > v_size {
            return Err(Error::Dimension("warm-start kernel has the wrong shape".into()));
        }
        let mut padded = Rows::uniform(atoms, v_size);
        for r in 0..atoms {
            let dst = padded.row_mut(r);
            dst.iter_mut().for_each(|x| *x = 0.0);
            dst[..w.cols].copy_from_slice(w.row(r));
        }
        // Exact value of the warm kernel itself, then ascent from a smoothed copy.
        let s = model.slack(q, &padded.data);
        candidates.push((
            s,
            padded.clone(),
            TraceEntry { restart: candidates.len(), kind: StartKind::Warm, slack: s, converged: true },
        ));
        starts.push((StartKind::Warm, padded.smoothed(1e-3)));
    }
    let seeded = starts.len();
    let random: Vec<(StartKind, Rows)> = (0..cfg.slack_restarts)
        .map(|i| {
            let mut r = rng::stream(cfg.seed, tag::SLACK_RESTART, i as u64);
            let data = (0..atoms).flat_map(|_| rng::uniform_simplex(&mut r, v_size)).collect();
            (StartKind::Random, Rows::from_data(atoms, v_size, data))
        })
        .collect();
    starts.extend(random);

    let base = candidates.len();
    let ascended: Vec<(f64, Rows, TraceEntry)> = starts
        .into_par_iter()
        .enumerate()
        .map(|(i, (kind, mut k))| {
            let obj = KernelObjective { model: &model, qbar: q };
            let rep = eg_ascent(&mut k, &obj, &cfg.ascent);
            let entry = TraceEntry { restart: base + i, kind, slack: rep.value, converged: rep.converged };
            (rep.value, k, entry)
        })
        .collect();
    debug_assert!(seeded <= ascended.len());
    candidates.extend(ascended);

    let mut best = 0;
    for (i, c) in candidates.iter().enumerate() {
        if c.0 > candidates[best].0 {
            best = i;
        }
    }
    let (slack, kernel, _) = candidates[best].clone();
    let trace = candidates.into_iter().map(|c| c.2).collect();
    let best_aux = AuxChannel::from_rows(qbar.axes(), &kernel)?;
    Ok(FeasibilityReport {
        slack,
        implementable: slack >= -cfg.tol,
        tol: cfg.tol,
        v_size,
        restarts: cfg.slack_restarts,
        trace,
        best_aux,
    })
}
