//! Coded power control on a two-pair interference channel.
//!
//! The state is the four link gains `(g11, g12, g21, g22)`, each `g_min` or
//! `g_max`. Each transmitter is either off or at full power `Pmax`, and the
//! common payoff is the sum rate `Σ_k log2(1 + SINR_k)`. Transmitter 2 learns
//! about the state only through a binary symmetric channel fed with
//! transmitter 1's on/off action.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coordination::{
    baselines, optimize_payoff_causal, optimize_payoff_noncausal, CoordinationProblem, NoncausalOptimum, OptConfig,
};
use crate::error::{Error, Result};
use crate::prob::{Alphabet, CondPmf, JointPmf};

pub const CSV_HEADER: &str = "snr_db,method,payoff,status";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerControlConfig {
    pub g_min: f64,
    pub g_max: f64,
    pub sigma2: f64,
    /// `(p11, p12, p21, p22)`, `p_kj = Pr[g_kj = g_min]`.
    pub p: [f64; 4],
    pub bsc_e: f64,
    pub snr_db_list: Vec<f64>,
    pub v_size: usize,
}

impl Default for PowerControlConfig {
    fn default() -> Self {
        Self {
            g_min: 0.1,
            g_max: 2.0,
            sigma2: 1.0,
            p: [0.5, 0.1, 0.1, 0.5],
            bsc_e: 0.05,
            snr_db_list: (0..=10).map(f64::from).collect(),
            v_size: 10,
        }
    }
}

impl PowerControlConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Argument(m.into()));
        if !(self.g_min > 0.0 && self.g_max > 0.0) || !self.g_min.is_finite() || !self.g_max.is_finite() {
            return bad("gains must be positive");
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return bad("sigma2 must be positive");
        }
        if self.p.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("gain probabilities must lie in [0, 1]");
        }
        if !(0.0..=0.5).contains(&self.bsc_e) {
            return bad("bsc_e must lie in [0, 0.5]");
        }
        if self.snr_db_list.is_empty() {
            return bad("snr_db_list is empty");
        }
        if self.snr_db_list.iter().any(|s| !s.is_finite()) {
            return bad("SNR values must be finite");
        }
        if self.v_size == 0 {
            return bad("v_size must be at least 1");
        }
        Ok(())
    }

    /// `Pmax = σ² 10^(snr/10)`.
    pub fn p_max(&self, snr_db: f64) -> f64 {
        self.sigma2 * 10f64.powf(snr_db / 10.0)
    }

    /// Gains `(g11, g12, g21, g22)` of state `x0`; bit 3 of `x0` is `g11`,
    /// and a zero bit means `g_min`.
    pub fn gains(&self, x0: usize) -> [f64; 4] {
        std::array::from_fn(|k| if (x0 >> (3 - k)) & 1 == 0 { self.g_min } else { self.g_max })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Costless,
    Noncausal,
    Causal,
    FullPower,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Costless => "costless",
            Method::Noncausal => "noncausal",
            Method::Causal => "causal",
            Method::FullPower => "full_power",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub snr_db: f64,
    pub method: Method,
    pub payoff: f64,
    /// `ok`, or `unconverged` when an optimizer run hit its iteration cap.
    pub status: String,
}

/// `g_kk x_k / (σ² + g_jk x_j)`.
pub fn sinr(g_kk: f64, g_jk: f64, x_k: f64, x_j: f64, sigma2: f64) -> f64 {
    g_kk * x_k / (sigma2 + g_jk * x_j)
}

/// Sum rate at state `x0` with powers `(x1, x2)`.
pub fn sum_rate(cfg: &PowerControlConfig, x0: usize, x1: f64, x2: f64) -> f64 {
    let [g11, g12, g21, g22] = cfg.gains(x0);
    (1.0 + sinr(g11, g21, x1, x2, cfg.sigma2)).log2() + (1.0 + sinr(g22, g12, x2, x1, cfg.sigma2)).log2()
}

pub fn state_prior(cfg: &PowerControlConfig) -> Result<JointPmf> {
    let probs = (0..16)
        .map(|x0| (0..4).map(|k| if (x0 >> (3 - k)) & 1 == 0 { cfg.p[k] } else { 1.0 - cfg.p[k] }).product())
        .collect();
    JointPmf::new(vec![Alphabet::new(16)?], probs)
}

pub fn build_problem(cfg: &PowerControlConfig, snr_db: f64) -> Result<CoordinationProblem> {
    cfg.validate()?;
    let p_max = cfg.p_max(snr_db);
    let power = [0.0, p_max];
    let action = Alphabet::with_labels(vec!["off".to_string(), "full".to_string()])?;
    let state = Alphabet::new(16)?;
    let given = vec![state, action.clone(), action];
    let e = cfg.bsc_e;
    let channel = CondPmf::from_weights(given, Alphabet::new(2)?, |i, y| if y == i[1] { 1.0 - e } else { e })?;
    let payoff = (0..16)
        .flat_map(|x0| (0..2).flat_map(move |a| (0..2).map(move |b| (x0, a, b))))
        .map(|(x0, a, b)| sum_rate(cfg, x0, power[a], power[b]))
        .collect();
    CoordinationProblem::new(state_prior(cfg)?, channel, payoff)
}

/// Four rows per SNR point, in the order costless, noncausal, causal,
/// full_power.
///
/// The prior and channel do not depend on the SNR, so every certified
/// non-causal point found at one SNR is feasible at all of them; each SNR
/// reports the best of these shared candidates.
pub fn snr_sweep(cfg: &PowerControlConfig, opt: &OptConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let problems: Vec<CoordinationProblem> =
        cfg.snr_db_list.iter().map(|&s| build_problem(cfg, s)).collect::<Result<_>>()?;
    let optima: Vec<NoncausalOptimum> =
        problems.par_iter().map(|p| optimize_payoff_noncausal(p, cfg.v_size, opt)).collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(4 * problems.len());
    for (k, (problem, &snr_db)) in problems.iter().zip(&cfg.snr_db_list).enumerate() {
        let base = baselines(problem);
        let causal = optimize_payoff_causal(problem);
        let own = &optima[k];
        let mut noncausal = own.value.max(causal.value);
        for other in &optima {
            noncausal = noncausal.max(problem.expected_payoff(&other.qbar)?);
        }
        let status = if own.converged && own.report.unconverged() == 0 { "ok" } else { "unconverged" };
        let row = |method, payoff, status: &str| SweepRow { snr_db, method, payoff, status: status.to_string() };
        rows.push(row(Method::Costless, base.costless, "ok"));
        rows.push(row(Method::Noncausal, noncausal, status));
        rows.push(row(Method::Causal, causal.value, "ok"));
        rows.push(row(Method::FullPower, base.constant_pair[1][1], "ok"));
    }
    Ok(rows)
}

pub fn write_csv(rows: &[SweepRow], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.snr_db, r.method.as_str(), r.payoff, r.status)?;
    }
    Ok(())
}
