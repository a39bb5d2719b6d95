mod common;

use actcoord::codec::law_distortion;
use actcoord::optim::Rows;
use actcoord::prob::{CondPmf, JointPmf};
use actcoord::state_comm::*;
use common::*;

fn noiseless_hamming(rho: Vec<f64>) -> StateCommProblem {
    let ch = CondPmf::deterministic(vec![bit(), bit()], bit(), |i| i[1]).unwrap();
    StateCommProblem::hamming(JointPmf::from_shape(&[2], rho).unwrap(), ch).unwrap()
}

fn useless(rho: Vec<f64>) -> StateCommProblem {
    let ch = CondPmf::from_weights(vec![bit(), bit()], bit(), |_, y| [0.3, 0.7][y]).unwrap();
    StateCommProblem::hamming(JointPmf::from_shape(&[2], rho).unwrap(), ch).unwrap()
}

fn all_four(p: &StateCommProblem, cfg: &StateCommConfig) -> [f64; 4] {
    [
        min_dist_nc_enc_c_dec(p, cfg).unwrap().min_distortion,
        min_dist_nc_enc_sc_dec(p, cfg).unwrap().min_distortion,
        min_dist_c_enc_c_dec(p).min_distortion,
        min_dist_c_enc_sc_dec(p).min_distortion,
    ]
}

#[test]
fn zero_distortion_everywhere() {
    let mut r = rng(1);
    let base = random_state_problem(&mut r);
    let p = StateCommProblem::new(base.state_prior().clone(), base.channel().clone(), vec![0.0; 4], 1.0).unwrap();
    assert_eq!(all_four(&p, &StateCommConfig::default()), [0.0; 4]);
}

#[test]
fn noiseless_channel_sends_the_state() {
    let p = noiseless_hamming(vec![0.35, 0.65]);
    let cfg = StateCommConfig::default();
    let nc_c = min_dist_nc_enc_c_dec(&p, &cfg).unwrap();
    assert!(nc_c.min_distortion.abs() < 1e-6);
    assert!(law_slack(nc_c.law.as_ref().unwrap()).unwrap() >= -1e-6);
    let nc_sc = min_dist_nc_enc_sc_dec(&p, &cfg).unwrap();
    assert!(nc_sc.min_distortion.abs() < 1e-6, "{}", nc_sc.min_distortion);
    assert_eq!(min_dist_c_enc_c_dec(&p).min_distortion, 0.0);
}

#[test]
fn useless_channel_collapses_to_guessing() {
    let p = useless(vec![0.7, 0.3]);
    let cfg = StateCommConfig::default();
    let guess = min_dist_c_enc_sc_dec(&p).min_distortion;
    assert!((guess - 0.3).abs() < 1e-15);
    let nc = min_dist_nc_enc_c_dec(&p, &cfg).unwrap().min_distortion;
    assert!((nc - guess).abs() < 1e-4, "{nc} vs {guess}");
}

#[test]
fn reports_are_self_consistent() {
    let mut r = rng(2);
    let cfg = StateCommConfig { restarts: 8, ..StateCommConfig::default() };
    for _ in 0..5 {
        let p = random_state_problem(&mut r);
        for rep in [min_dist_nc_enc_c_dec(&p, &cfg).unwrap(), min_dist_nc_enc_sc_dec(&p, &cfg).unwrap()] {
            assert!((0.0..=p.d_max()).contains(&rep.min_distortion));
            let law = rep.law.as_ref().expect("non-causal reports carry their law");
            assert!(law_slack(law).unwrap() >= -1e-6);
            let d = law_distortion(&p, law, &rep.decoder).unwrap();
            assert!((d - rep.min_distortion).abs() < 1e-9, "{d} vs {}", rep.min_distortion);
        }
    }
}

#[test]
fn monotonicity_chain() {
    let mut r = rng(3);
    let cfg = StateCommConfig { restarts: 8, ..StateCommConfig::default() };
    for _ in 0..10 {
        let p = random_state_problem(&mut r);
        let [nc_c, nc_sc, c_c, c_sc] = all_four(&p, &cfg);
        assert!(c_sc >= c_c - 1e-6);
        assert!(c_c >= nc_c - 1e-6);
        assert!(nc_sc >= nc_c - 1e-6);
        assert!(c_sc >= nc_sc - 1e-6);
    }
}

#[test]
fn exact_and_alternating_agree() {
    let mut r = rng(4);
    for seed in 0..20 {
        let prior = random_joint(&mut r, &[3]);
        let ch = random_kernel(&mut r, &[3, 2], 3);
        let d = (0..9).map(|_| rand::Rng::random_range(&mut r, 0.0..1.0)).collect();
        let p = StateCommProblem::new(prior, ch, d, 1.0).unwrap();
        let exact = min_dist_c_enc_c_dec_with(&p, CausalMode::Exact, seed).unwrap();
        let alt = min_dist_c_enc_c_dec_with(&p, CausalMode::Alternating, seed).unwrap();
        assert!(exact.exact && !alt.exact);
        assert!((exact.min_distortion - alt.min_distortion).abs() < 1e-4);
    }
}

#[test]
fn randomized_encoders_never_help() {
    let mut r = rng(5);
    for _ in 0..20 {
        let prior = random_joint(&mut r, &[3]);
        let ch = random_kernel(&mut r, &[3, 3], 2);
        let d = (0..6).map(|_| rand::Rng::random_range(&mut r, 0.0..1.0)).collect();
        let p = StateCommProblem::new(prior, ch, d, 1.0).unwrap();
        let rep = min_dist_c_enc_c_dec(&p);
        let best = Rows::deterministic(3, rep.encoder_map.as_ref().unwrap());
        for other in 0..27 {
            let map = [other % 3, other / 3 % 3, other / 9];
            let mixed = best.mix(&Rows::deterministic(3, &map), 0.1);
            assert!(encoder_distortion(&p, &mixed).0 >= rep.min_distortion - 1e-9);
        }
    }
}

#[test]
fn problem_json_round_trip() {
    let mut r = rng(6);
    let p = random_state_problem(&mut r);
    let back: StateCommProblem = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
    assert_eq!(p, back);
    let bad = serde_json::json!({
        "state_prior": {"axes": [2], "probs": [0.5, 0.5]},
        "channel": {"axes": [2, 2, 2], "probs": [1, 0, 0, 1, 1, 0, 0, 1]},
        "distortion": [0, 2, 1, 0],
        "d_max": 1.0
    });
    assert!(serde_json::from_value::<StateCommProblem>(bad).is_err());
}
