//! `actcoord` command-line front end.
//!
//! Exit codes: 0 success / implementable, 1 runtime failure, 2 malformed
//! input, 3 not implementable, 4 wrong state marginal, 5 rates outside the
//! rate region (without `--force`).

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use actcoord::codec::{self, BlockCodeParams, Deltas, SimResult};
use actcoord::coordination::{
    self, baselines, cardinality_stress, optimize_payoff_causal, optimize_payoff_noncausal, CoordinationProblem,
    OptConfig,
};
use actcoord::power_control::{self, PowerControlConfig};
use actcoord::prob::{CondPmf, JointPmf};
use actcoord::state_comm::{self, Decoder, StateCommConfig, StateCommProblem};
use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "actcoord", version, about = "Implicit coordination through actions")]
struct Cli {
    /// Master seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Causal,
    Noncausal,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide whether a target law over (x0, x1, x2) is implementable.
    Check {
        qbar: PathBuf,
        channel: PathBuf,
        /// State prior to check the target's first marginal against.
        #[arg(long)]
        prior: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "noncausal")]
        mode: Mode,
        #[arg(long)]
        v_size: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Maximize the expected payoff of a coordination problem.
    Optimize {
        problem: PathBuf,
        #[arg(long, value_enum, default_value = "noncausal")]
        mode: Mode,
        #[arg(long)]
        v_size: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Power-control SNR sweep, written as CSV.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        v_size: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Minimum distortions of a state-communication problem.
    StateDistortion {
        problem: PathBuf,
        /// Restrict to causal or non-causal encoders.
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// Simulate the block-Markov code from a run spec.
    Simulate {
        runspec: PathBuf,
        /// Run even when the rates violate the rate region.
        #[arg(long)]
        force: bool,
        /// Also write the per-block event table as CSV.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Maximal slack against the auxiliary alphabet size.
    StressCardinality {
        qbar: PathBuf,
        channel: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
    },
}

/// Input that could not be read or parsed (exit code 2).
#[derive(Debug)]
struct Malformed(String);

impl std::fmt::Display for Malformed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "malformed input: {}", self.0)
    }
}

impl std::error::Error for Malformed {}

/// Rates outside the region (exit code 5).
#[derive(Debug)]
struct RatesOutsideRegion(String);

impl std::fmt::Display for RatesOutsideRegion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (pass --force to run anyway)", self.0)
    }
}

impl std::error::Error for RatesOutsideRegion {}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Malformed(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Malformed(format!("{}: {e}", path.display())).into())
}

fn emit(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, body).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            Ok(())
        }
    }
}

fn emit_json(out: Option<&Path>, value: &impl Serialize) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    emit(out, &s)
}

fn opt_config(seed: u64, tol: Option<f64>) -> OptConfig {
    let mut cfg = OptConfig::with_seed(seed);
    if let Some(t) = tol {
        cfg.tol = t;
    }
    cfg
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.is::<Malformed>() {
        return 2;
    }
    if err.is::<RatesOutsideRegion>() {
        return 5;
    }
    match err.downcast_ref::<actcoord::Error>() {
        Some(actcoord::Error::WrongMarginal { .. }) => 4,
        Some(
            actcoord::Error::Dimension(_)
            | actcoord::Error::Argument(_)
            | actcoord::Error::InvalidPmf(_)
            | actcoord::Error::Json(_),
        ) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("actcoord: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("actcoord: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: &Cli) -> Result<u8> {
    let seed = cli.seed.unwrap_or(0);
    let out = cli.out.as_deref();
    match &cli.cmd {
        Command::Check { qbar, channel, prior, mode, v_size, tol } => {
            let qbar: JointPmf = read_json(qbar)?;
            let channel: CondPmf = read_json(channel)?;
            if qbar.rank() != 3 {
                return Err(Malformed("the target must be a law over (x0, x1, x2)".into()).into());
            }
            let prior: JointPmf = match prior {
                Some(p) => read_json(p)?,
                None => qbar.marginalize(&[0])?,
            };
            coordination::check_marginal(&qbar, &prior)?;
            let (report, ok) = match mode {
                Mode::Causal => {
                    let tol = tol.unwrap_or(1e-9);
                    let gap = coordination::factorization_gap(&qbar)?;
                    let ok = coordination::is_implementable_causal(&qbar, tol)?;
                    (json!({"mode": "causal", "implementable": ok, "factorization_gap": gap, "tol": tol}), ok)
                }
                Mode::Noncausal => {
                    let v = v_size.unwrap_or_else(|| qbar.shape().iter().product());
                    let r =
                        coordination::is_implementable_noncausal(&qbar, &prior, &channel, v, &opt_config(seed, *tol))?;
                    let ok = r.implementable;
                    (json!({"mode": "noncausal", "implementable": ok, "slack": r.slack, "report": r}), ok)
                }
            };
            emit_json(out, &report)?;
            Ok(if ok { 0 } else { 3 })
        }
        Command::Optimize { problem, mode, v_size, tol } => {
            let problem: CoordinationProblem = read_json(problem)?;
            let base = baselines(&problem);
            let report = match mode {
                Mode::Causal => {
                    json!({"mode": "causal", "optimum": optimize_payoff_causal(&problem), "baselines": base})
                }
                Mode::Noncausal => {
                    let (n0, n1, n2) = problem.dims();
                    let v = v_size.unwrap_or(n0 * n1 * n2);
                    let opt = optimize_payoff_noncausal(&problem, v, &opt_config(seed, *tol))?;
                    json!({"mode": "noncausal", "optimum": opt, "baselines": base})
                }
            };
            emit_json(out, &report)?;
            Ok(0)
        }
        Command::Sweep { config, v_size, tol } => {
            let mut cfg: PowerControlConfig = read_json(config)?;
            if let Some(v) = v_size {
                cfg.v_size = *v;
            }
            cfg.validate().map_err(|e| Malformed(e.to_string()))?;
            let rows = power_control::snr_sweep(&cfg, &opt_config(seed, *tol))?;
            let mut buf = Vec::new();
            power_control::write_csv(&rows, &mut buf)?;
            emit(out, std::str::from_utf8(&buf)?)?;
            Ok(0)
        }
        Command::StateDistortion { problem, mode } => {
            let problem: StateCommProblem = read_json(problem)?;
            let cfg = StateCommConfig::with_seed(seed);
            let mut report = serde_json::Map::new();
            if *mode != Some(Mode::Noncausal) {
                report.insert("c_enc_sc_dec".into(), json!(state_comm::min_dist_c_enc_sc_dec(&problem)));
                let cc = state_comm::min_dist_c_enc_c_dec_with(&problem, state_comm::CausalMode::Auto, seed)?;
                report.insert("c_enc_c_dec".into(), json!(cc));
            }
            if *mode != Some(Mode::Causal) {
                report.insert("nc_enc_sc_dec".into(), json!(state_comm::min_dist_nc_enc_sc_dec(&problem, &cfg)?));
                report.insert("nc_enc_c_dec".into(), json!(state_comm::min_dist_nc_enc_c_dec(&problem, &cfg)?));
            }
            emit_json(out, &report)?;
            Ok(0)
        }
        Command::Simulate { runspec, force, events } => {
            let result = simulate(runspec, cli.seed, *force)?;
            if let Some(path) = events {
                let mut buf = Vec::new();
                codec::write_events_csv(&result, &mut buf)?;
                fs::write(path, buf).with_context(|| format!("writing {}", path.display()))?;
            }
            emit_json(out, &result)?;
            Ok(0)
        }
        Command::StressCardinality { qbar, channel, tol } => {
            let qbar: JointPmf = read_json(qbar)?;
            let channel: CondPmf = read_json(channel)?;
            let rows = cardinality_stress(&qbar, &channel, &opt_config(seed, *tol))?;
            emit_json(out, &rows)?;
            Ok(0)
        }
    }
}

/// Run spec for `simulate`. Paths are relative to the spec's directory.
/// Missing rates default to the middle of the rate region.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSpec {
    problem: PathBuf,
    law: PathBuf,
    #[serde(default)]
    decoder: Option<Decoder>,
    #[serde(default)]
    params: serde_json::Map<String, serde_json::Value>,
    #[serde(default)]
    deltas: Deltas,
}

/// A bare law, or a distortion report carrying one.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum LawFile {
    Bare(JointPmf),
    Report { law: JointPmf, decoder: Option<Decoder> },
}

fn simulate(spec_path: &Path, seed: Option<u64>, force: bool) -> Result<SimResult> {
    let spec: RunSpec = read_json(spec_path)?;
    let dir = spec_path.parent().unwrap_or(Path::new("."));
    let problem: StateCommProblem = read_json(&dir.join(&spec.problem))?;
    let (law, report_decoder) = match read_json::<LawFile>(&dir.join(&spec.law))? {
        LawFile::Bare(law) => (law, None),
        LawFile::Report { law, decoder } => (law, decoder),
    };
    let g = match spec.decoder.or(report_decoder) {
        Some(g) => g,
        None => codec::argmin_decoder(&problem, &law)?,
    };
    let region = codec::rate_region_check(&law, spec.deltas)?;
    let given_rates = spec.params.contains_key("r") || spec.params.contains_key("r_tilde");
    let mut params: BlockCodeParams =
        serde_json::from_value(serde_json::Value::Object(spec.params.clone())).map_err(|e| Malformed(e.to_string()))?;
    if let Some(s) = seed {
        params.seed = s;
    }
    if !given_rates {
        // Outside the region, fall back to the two covering thresholds.
        let (r, rt) =
            region.midpoint().unwrap_or((region.i_x0_u + region.deltas.d1, region.i_v_x0u + region.deltas.d2));
        params.r = r;
        params.r_tilde = rt;
    }
    if !force && !region.admits(params.r, params.r_tilde) {
        return Err(RatesOutsideRegion(format!(
            "rates (R, R~) = ({:.4}, {:.4}) violate the rate region (gap {:.4} bits)",
            params.r, params.r_tilde, region.gap
        ))
        .into());
    }
    params.validate().map_err(|e| Malformed(e.to_string()))?;
    Ok(codec::run_simulation(&problem, &law, &g, &params)?)
}
