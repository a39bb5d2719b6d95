mod common;

use actcoord::coordination::{baselines, optimize_payoff_causal, OptConfig};
use actcoord::power_control::*;
use rand::Rng;

fn quick() -> OptConfig {
    OptConfig { payoff_restarts: 2, slack_restarts: 4, outer_rounds: 20, ..OptConfig::default() }
}

/// Sum rate written out from the state bits, independently of `gains`.
fn direct_sum_rate(x0: usize, a1: usize, a2: usize, snr_db: f64) -> f64 {
    let p_max = 10f64.powf(snr_db / 10.0);
    let g = |bit: usize| if (x0 >> bit) & 1 == 1 { 2.0 } else { 0.1 };
    let (g11, g12, g21, g22) = (g(3), g(2), g(1), g(0));
    let (p1, p2) = (a1 as f64 * p_max, a2 as f64 * p_max);
    (1.0 + g11 * p1 / (1.0 + g21 * p2)).log2() + (1.0 + g22 * p2 / (1.0 + g12 * p1)).log2()
}

#[test]
fn payoff_matches_direct_evaluation() {
    let cfg = PowerControlConfig::default();
    let mut r = common::rng(1);
    for snr in [0.0, 3.5, 10.0] {
        let p = build_problem(&cfg, snr).unwrap();
        for _ in 0..10 {
            let (x0, a1, a2) = (r.random_range(0..16), r.random_range(0..2), r.random_range(0..2));
            assert!((p.w(x0, a1, a2) - direct_sum_rate(x0, a1, a2, snr)).abs() < 1e-12);
        }
    }
}

#[test]
fn prior_is_a_product() {
    let cfg = PowerControlConfig::default();
    let rho = state_prior(&cfg).unwrap();
    let s: f64 = rho.probs().iter().sum();
    assert!((s - 1.0).abs() < 1e-15);
    // All gains at g_max.
    assert!((rho.probs()[15] - 0.5 * 0.9 * 0.9 * 0.5).abs() < 1e-15);
}

#[test]
fn full_power_baseline_by_direct_summation() {
    let cfg = PowerControlConfig::default();
    let p = build_problem(&cfg, 10.0).unwrap();
    let rho = state_prior(&cfg).unwrap();
    let direct: f64 = (0..16).map(|x0| rho.probs()[x0] * direct_sum_rate(x0, 1, 1, 10.0)).sum();
    assert!((baselines(&p).constant_pair[1][1] - direct).abs() < 1e-12);
}

#[test]
fn causal_value_by_brute_force() {
    let cfg = PowerControlConfig::default();
    for snr in [0.0, 5.0, 10.0] {
        let p = build_problem(&cfg, snr).unwrap();
        let rho = p.state_prior().probs();
        let brute = (0..2)
            .map(|x2| (0..16).map(|x0| rho[x0] * p.w(x0, 0, x2).max(p.w(x0, 1, x2))).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(optimize_payoff_causal(&p).value, brute);
    }
}

#[test]
fn single_snr_gives_four_ordered_rows() {
    let cfg = PowerControlConfig { snr_db_list: vec![5.0], ..PowerControlConfig::default() };
    let rows = snr_sweep(&cfg, &quick()).unwrap();
    let methods: Vec<&str> = rows.iter().map(|r| r.method.as_str()).collect();
    assert_eq!(methods, ["costless", "noncausal", "causal", "full_power"]);
    let v: Vec<f64> = rows.iter().map(|r| r.payoff).collect();
    assert!(v[3] <= v[2] + 1e-6 && v[2] <= v[1] + 1e-6 && v[1] <= v[0] + 1e-6, "{v:?}");
    assert!(v.iter().all(|&x| x >= 0.0));
}

#[test]
fn useless_channel_gives_no_gain() {
    let cfg = PowerControlConfig { bsc_e: 0.5, snr_db_list: vec![0.0, 10.0], ..PowerControlConfig::default() };
    let rows = snr_sweep(&cfg, &quick()).unwrap();
    for chunk in rows.chunks(4) {
        assert!((chunk[1].payoff - chunk[2].payoff).abs() < 1e-4, "{chunk:?}");
    }
}

#[test]
fn payoffs_grow_with_snr() {
    let cfg = PowerControlConfig { snr_db_list: (0..=10).map(f64::from).collect(), ..PowerControlConfig::default() };
    let rows = snr_sweep(&cfg, &OptConfig { payoff_restarts: 1, ..quick() }).unwrap();
    for m in 0..4 {
        let series: Vec<f64> = rows.iter().skip(m).step_by(4).map(|r| r.payoff).collect();
        assert!(series.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{series:?}");
    }
}

#[test]
fn csv_layout() {
    let cfg = PowerControlConfig { snr_db_list: vec![0.0], ..PowerControlConfig::default() };
    let rows = snr_sweep(&cfg, &quick()).unwrap();
    let mut out = Vec::new();
    write_csv(&rows, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "snr_db,method,payoff,status");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("0,costless,"));
}

#[test]
fn invalid_configs_are_rejected() {
    let bad = [
        PowerControlConfig { snr_db_list: vec![], ..PowerControlConfig::default() },
        PowerControlConfig { bsc_e: 0.7, ..PowerControlConfig::default() },
        PowerControlConfig { g_min: 0.0, ..PowerControlConfig::default() },
        PowerControlConfig { p: [0.5, 1.2, 0.1, 0.5], ..PowerControlConfig::default() },
    ];
    for cfg in bad {
        assert!(snr_sweep(&cfg, &quick()).is_err());
    }
}
