//! Non-causally informed encoder: the auxiliary-variable program.
//!
//! The optimization variable is `P(u, v, x1 | x0)`; the joint law is
//! `ρ0(x0) P(u, v, x1 | x0) Γ(y | x0, x1)` and the constraint reads
//! `I(U;X0) <= I(V;Y|U) - I(V;X0|U)`. For a fixed law the best decoder is the
//! pointwise argmin of the posterior expected distortion, so the search
//! alternates between that decoder and a penalized ascent over the law.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::causal::{min_dist_c_enc_c_dec, min_dist_c_enc_sc_dec};
use super::{Decoder, DistortionReport, StateCommProblem};
use crate::coordination::CERTIFY_SLACK;
use crate::error::{Error, Result};
use crate::optim::{eg_ascent, AscentConfig, Rows, SmoothObjective};
use crate::prob::{Alphabet, EntropyCombination, JointPmf};
use crate::rng::{self, tag};

/// Axis order of the joint law in reports.
pub const AUX_AXES: [&str; 5] = ["x0", "u", "v", "x1", "y"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateCommConfig {
    pub seed: u64,
    pub restarts: usize,
    pub outer_rounds: usize,
    pub inner_iter: usize,
    pub penalty_init: f64,
    /// Slack below `-tol` doubles the penalty weight.
    pub tol: f64,
    pub repair_steps: usize,
    pub settle: f64,
}

impl Default for StateCommConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: 32,
            outer_rounds: 40,
            inner_iter: 100,
            penalty_init: 10.0,
            tol: 1e-7,
            repair_steps: 30,
            settle: 1e-7,
        }
    }
}

impl StateCommConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum DecoderKind {
    UY,
    Y,
}

struct Engine<'a> {
    problem: &'a StateCommProblem,
    n0: usize,
    nu: usize,
    nv: usize,
    n1: usize,
    ny: usize,
    n2: usize,
    cols: usize,
    func: EntropyCombination,
    kind: DecoderKind,
}

impl<'a> Engine<'a> {
    fn new(problem: &'a StateCommProblem, kind: DecoderKind) -> Self {
        let (n0, n1, n2, ny) = problem.dims();
        let (nu, nv) = (problem.u_size(), problem.v_size());
        // axes: 0 = X0, 1 = U, 2 = V, 3 = X1, 4 = Y
        // slack = H(Y U) - H(V Y U) + H(V X0 U) - H(U) - H(X0)
        let func = EntropyCombination::new(
            &[n0, nu, nv, n1, ny],
            &[(1.0, &[4, 1]), (-1.0, &[2, 4, 1]), (1.0, &[2, 0, 1]), (-1.0, &[1]), (-1.0, &[0])],
        );
        Self { problem, n0, nu, nv, n1, ny, n2, cols: nu * nv * n1, func, kind }
    }

    fn rho(&self) -> &[f64] {
        self.problem.state_prior().probs()
    }

    /// Splits a column index into `(u, x1)`; `v` does not enter the channel.
    fn col_parts(&self, c: usize) -> (usize, usize) {
        (c / (self.nv * self.n1), c % self.n1)
    }

    fn joint(&self, p: &[f64]) -> Vec<f64> {
        let rho = self.rho();
        let mut q = vec![0.0; self.n0 * self.cols * self.ny];
        for x0 in 0..self.n0 {
            for c in 0..self.cols {
                let w = rho[x0] * p[x0 * self.cols + c];
                let (_, x1) = self.col_parts(c);
                for y in 0..self.ny {
                    q[(x0 * self.cols + c) * self.ny + y] = w * self.problem.gamma(x0, x1, y);
                }
            }
        }
        q
    }

    fn slack(&self, p: &[f64]) -> f64 {
        self.func.value(&self.joint(p))
    }

    /// Decoder table indexed `u * |Y| + y`; constant in `u` for the `g(Y)` kind.
    fn best_decoder(&self, p: &[f64]) -> Vec<usize> {
        let rho = self.rho();
        let (nu, ny, n2) = (self.nu, self.ny, self.n2);
        // cost[(u, y), x2]
        let mut cost = vec![0.0; nu * ny * n2];
        for x0 in 0..self.n0 {
            for c in 0..self.cols {
                let w = rho[x0] * p[x0 * self.cols + c];
                if w == 0.0 {
                    continue;
                }
                let (u, x1) = self.col_parts(c);
                let u = if self.kind == DecoderKind::Y { 0 } else { u };
                for y in 0..ny {
                    let wy = w * self.problem.gamma(x0, x1, y);
                    for x2 in 0..n2 {
                        cost[(u * ny + y) * n2 + x2] += wy * self.problem.delta(x0, x2);
                    }
                }
            }
        }
        let mut table = vec![0; nu * ny];
        for uy in 0..nu * ny {
            let row = &cost[uy * n2..(uy + 1) * n2];
            let mut best = 0;
            for x2 in 1..n2 {
                if row[x2] < row[best] {
                    best = x2;
                }
            }
            table[uy] = best;
        }
        if self.kind == DecoderKind::Y {
            for u in 1..nu {
                for y in 0..ny {
                    table[u * ny + y] = table[y];
                }
            }
        }
        table
    }

    /// Per-entry expected distortion `Σ_y Γ(y|x0,x1) δ(x0, g(u,y))`, not yet
    /// weighted by `ρ0(x0)`.
    fn cell_costs(&self, table: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; self.n0 * self.cols];
        for x0 in 0..self.n0 {
            for c in 0..self.cols {
                let (u, x1) = self.col_parts(c);
                out[x0 * self.cols + c] = (0..self.ny)
                    .map(|y| self.problem.gamma(x0, x1, y) * self.problem.delta(x0, table[u * self.ny + y]))
                    .sum();
            }
        }
        out
    }

    fn distortion(&self, p: &[f64], costs: &[f64]) -> f64 {
        let rho = self.rho();
        p.iter().zip(costs).enumerate().map(|(i, (p, c))| rho[i / self.cols] * p * c).sum()
    }

    fn decoder(&self, table: &[usize]) -> Decoder {
        match self.kind {
            DecoderKind::Y => Decoder::OfY { table: table[..self.ny].to_vec() },
            DecoderKind::UY => Decoder::OfUY { u_size: self.nu, y_size: self.ny, table: table.to_vec() },
        }
    }

    /// `U`, `V` constant and `x1 = map[x0]`: slack exactly zero.
    fn baseline(&self, map: &[usize]) -> Rows {
        Rows::deterministic(self.cols, map)
    }
}

/// `-D / scale - λ min(0, slack)²` over the rows `P(u, v, x1 | x0)`.
struct Penalized<'e, 'a> {
    engine: &'e Engine<'a>,
    costs: &'e [f64],
    scale: f64,
    lambda: f64,
}

impl SmoothObjective for Penalized<'_, '_> {
    fn value(&self, x: &[f64]) -> f64 {
        let s = self.engine.slack(x).min(0.0);
        -self.engine.distortion(x, self.costs) / self.scale - self.lambda * s * s
    }

    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let e = self.engine;
        let q = e.joint(x);
        let mut gq = vec![0.0; q.len()];
        let s = e.func.value_and_grad(&q, &mut gq).min(0.0);
        for x0 in 0..e.n0 {
            for c in 0..e.cols {
                let (_, x1) = e.col_parts(c);
                let i = x0 * e.cols + c;
                // Both parts divided by ρ0(x0).
                let gs: f64 = (0..e.ny).map(|y| e.problem.gamma(x0, x1, y) * gq[i * e.ny + y]).sum();
                grad[i] = -self.costs[i] / self.scale - 2.0 * self.lambda * s * gs;
            }
        }
        -e.distortion(x, self.costs) / self.scale - self.lambda * s * s
    }
}

struct Outcome {
    value: f64,
    law: Vec<f64>,
    table: Vec<usize>,
}

fn finish(engine: &Engine, p: Vec<f64>) -> Outcome {
    let table = engine.best_decoder(&p);
    let value = engine.distortion(&p, &engine.cell_costs(&table));
    Outcome { value, law: p, table }
}

fn repair(engine: &Engine, p: &[f64], fallback: &[f64], cfg: &StateCommConfig) -> Option<Vec<f64>> {
    let mix = |t: f64| -> Vec<f64> { p.iter().zip(fallback).map(|(a, b)| (1.0 - t) * a + t * b).collect() };
    let ok = |t: f64| engine.slack(&mix(t)) >= CERTIFY_SLACK;
    let mut lo = 0.0;
    let mut t = 0.5f64.powi(cfg.repair_steps as i32);
    while t < 1.0 && !ok(t) {
        lo = t;
        t *= 2.0;
    }
    if t >= 1.0 {
        return None;
    }
    let mut hi = t;
    for _ in 0..6 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(mix(hi))
}

fn one_restart(engine: &Engine, index: usize, base: &Rows, cfg: &StateCommConfig) -> Outcome {
    let mut r = rng::stream(cfg.seed, tag::DISTORTION_RESTART, index as u64);
    let mut p = if index == 0 {
        base.smoothed(0.05)
    } else {
        Rows::from_data(
            engine.n0,
            engine.cols,
            (0..engine.n0).flat_map(|_| rng::uniform_simplex(&mut r, engine.cols)).collect(),
        )
    };
    let scale = engine.problem.d_max().max(1e-12);
    let inner = AscentConfig { max_iter: cfg.inner_iter, ..AscentConfig::default() };
    let mut lambda = cfg.penalty_init;
    let mut prev = f64::INFINITY;
    let mut settled = 0;
    for _ in 0..cfg.outer_rounds {
        let table = engine.best_decoder(&p.data);
        let costs = engine.cell_costs(&table);
        eg_ascent(&mut p, &Penalized { engine, costs: &costs, scale, lambda }, &inner);
        let s = engine.slack(&p.data);
        if s < -cfg.tol {
            lambda = (lambda * 2.0).min(1e15);
        }
        let d = engine.distortion(&p.data, &costs);
        if (d - prev).abs() <= cfg.settle * scale && s >= -cfg.tol {
            settled += 1;
            if settled >= 3 {
                break;
            }
        } else {
            settled = 0;
        }
        prev = d;
    }
    let law = if engine.slack(&p.data) >= CERTIFY_SLACK {
        p.data
    } else {
        match repair(engine, &p.data, &base.data, cfg) {
            Some(law) => law,
            None => base.data.clone(),
        }
    };
    finish(engine, law)
}

fn run(
    problem: &StateCommProblem,
    kind: DecoderKind,
    cfg: &StateCommConfig,
    seeds: &[Vec<f64>],
) -> Result<DistortionReport> {
    let engine = Engine::new(problem, kind);
    let causal = min_dist_c_enc_c_dec(problem);
    let map = causal.encoder_map.clone().expect("causal optimum carries its encoder");
    // Column of (u = 0, v = 0, x1) is x1.
    let base = engine.baseline(&map);

    let mut outcomes: Vec<Outcome> =
        (0..cfg.restarts.max(1)).into_par_iter().map(|i| one_restart(&engine, i, &base, cfg)).collect();
    outcomes.push(finish(&engine, base.data.clone()));
    for s in seeds {
        if engine.slack(s) >= CERTIFY_SLACK {
            outcomes.push(finish(&engine, s.clone()));
        }
    }
    let best = outcomes.iter().enumerate().fold(0, |b, (i, o)| if o.value < outcomes[b].value { i } else { b });
    let o = &outcomes[best];

    let axes = [engine.n0, engine.nu, engine.nv, engine.n1, engine.ny]
        .iter()
        .zip(AUX_AXES)
        .map(|(&n, name)| Alphabet::new(n).map(|a| (a, name)))
        .collect::<Result<Vec<_>>>()?;
    let law = JointPmf::new(axes.into_iter().map(|(a, _)| a).collect(), engine.joint(&o.law))?;
    let slack = engine.slack(&o.law);
    if slack < CERTIFY_SLACK {
        return Err(Error::Consistency(format!("returned law has slack {slack:e}")));
    }
    Ok(DistortionReport {
        min_distortion: o.value.clamp(0.0, problem.d_max()),
        decoder: engine.decoder(&o.table),
        encoder_map: None,
        law: Some(law),
        slack: Some(slack),
        exact: false,
        aux_sizes: Some((engine.nu, engine.nv)),
    })
}

/// Law rows `P(u, v, x1 | x0)` of a report's joint law.
fn rows_of(problem: &StateCommProblem, report: &DistortionReport) -> Option<Vec<f64>> {
    let law = report.law.as_ref()?;
    let cols = problem.u_size() * problem.v_size() * problem.dims().1;
    if law.shape()[1] != problem.u_size() || law.shape()[2] != problem.v_size() {
        return None;
    }
    let kernel = law.condition(&[0]).ok()?;
    let ny = problem.dims().3;
    // P(u, v, x1, y | x0) summed over y.
    Some(
        (0..problem.dims().0)
            .flat_map(|x0| {
                let row = kernel.row(x0).to_vec();
                (0..cols).map(move |c| row[c * ny..(c + 1) * ny].iter().sum())
            })
            .collect(),
    )
}

/// `I(V;Y|U) - I(V;X0|U) - I(U;X0)` of a law over `(X0, U, V, X1, Y)`.
pub fn law_slack(law: &JointPmf) -> Result<f64> {
    use crate::prob::{conditional_mutual_information, mutual_information};
    if law.rank() != 5 {
        return Err(Error::Dimension("law must be over (x0, u, v, x1, y)".into()));
    }
    Ok(conditional_mutual_information(law, &[2], &[4], &[1])?
        - conditional_mutual_information(law, &[2], &[0], &[1])?
        - mutual_information(law, &[1], &[0])?)
}

/// Non-causal encoder, causal decoder `x2 = g(u, y)`.
///
/// The strictly causal optimum is included as a candidate since its decoder
/// is a special case.
pub fn min_dist_nc_enc_c_dec(problem: &StateCommProblem, cfg: &StateCommConfig) -> Result<DistortionReport> {
    let sc = min_dist_nc_enc_sc_dec(problem, cfg)?;
    let seeds: Vec<Vec<f64>> = rows_of(problem, &sc).into_iter().collect();
    let report = run(problem, DecoderKind::UY, cfg, &seeds)?;
    Ok(if sc.min_distortion < report.min_distortion {
        DistortionReport { decoder: widen(&sc.decoder, problem), ..sc }
    } else {
        report
    })
}

fn widen(decoder: &Decoder, problem: &StateCommProblem) -> Decoder {
    let (nu, ny) = (problem.u_size(), problem.dims().3);
    Decoder::OfUY { u_size: nu, y_size: ny, table: (0..nu * ny).map(|i| decoder.apply(i / ny, i % ny)).collect() }
}

/// Non-causal encoder, strictly causal decoder `x2 = g(y)`.
pub fn min_dist_nc_enc_sc_dec(problem: &StateCommProblem, cfg: &StateCommConfig) -> Result<DistortionReport> {
    let report = run(problem, DecoderKind::Y, cfg, &[])?;
    // The constant decoder is never better than the causal optimum, which is a candidate already.
    debug_assert!(report.min_distortion <= min_dist_c_enc_sc_dec(problem).min_distortion + 1e-12);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::CondPmf;

    fn noiseless(rho: Vec<f64>) -> StateCommProblem {
        let bit = Alphabet::new(2).unwrap();
        let channel =
            CondPmf::from_weights(vec![bit.clone(), bit.clone()], bit, |i, y| (y == i[1]) as u8 as f64).unwrap();
        StateCommProblem::hamming(JointPmf::from_shape(&[2], rho).unwrap(), channel).unwrap()
    }

    #[test]
    fn engine_slack_matches_pmf_route() {
        let p = noiseless(vec![0.3, 0.7]);
        let e = Engine::new(&p, DecoderKind::UY);
        let mut r = rng::stream(1, 0, 0);
        let rows: Vec<f64> = (0..e.n0).flat_map(|_| rng::uniform_simplex(&mut r, e.cols)).collect();
        let law = JointPmf::from_shape(&[e.n0, e.nu, e.nv, e.n1, e.ny], e.joint(&rows)).unwrap();
        assert!((e.slack(&rows) - law_slack(&law).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn noiseless_state_is_sent_losslessly() {
        let p = noiseless(vec![0.5, 0.5]);
        let cfg = StateCommConfig { restarts: 4, ..StateCommConfig::default() };
        let r = min_dist_nc_enc_c_dec(&p, &cfg).unwrap();
        assert!(r.min_distortion.abs() < 1e-6);
        assert!(r.slack.unwrap() >= CERTIFY_SLACK);
        let r = min_dist_nc_enc_sc_dec(&p, &cfg).unwrap();
        assert!(r.min_distortion.abs() < 1e-6);
    }
}
