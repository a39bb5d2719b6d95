mod common;

use actcoord::coordination::*;
use actcoord::optim::Rows;
use actcoord::prob::{mutual_information, CondPmf, JointPmf};
use actcoord::Error;
use common::*;

/// Slack from scratch: build `Q(x0, x1, x2, y, v)` and combine entropies.
fn slack_oracle(qbar: &[f64], channel: &CondPmf, labels: &[usize], nv: usize) -> f64 {
    let h = |m: &[f64]| -> f64 { m.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum() };
    let (mut yx2, mut vyx2, mut vx0x2, mut x0, mut x2) =
        (vec![0.0; 4], vec![0.0; 4 * nv], vec![0.0; 4 * nv], vec![0.0; 2], vec![0.0; 2]);
    for a in 0..8 {
        let (a0, a1, a2) = (a >> 2, (a >> 1) & 1, a & 1);
        let v = labels[a];
        x0[a0] += qbar[a];
        x2[a2] += qbar[a];
        vx0x2[(v * 2 + a0) * 2 + a2] += qbar[a];
        for y in 0..2 {
            let p = qbar[a] * channel.prob(&[a0, a1, a2], y);
            yx2[y * 2 + a2] += p;
            vyx2[(v * 2 + y) * 2 + a2] += p;
        }
    }
    // I(V;Y|X2) - I(V;X0|X2) - I(X0;X2)
    h(&yx2) - h(&vyx2) + h(&vx0x2) - h(&x0) - h(&x2)
}

/// Restricted growth strings: every deterministic kernel up to relabeling.
fn for_each_labeling(m: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(pos: usize, used: usize, l: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
        if pos == l.len() {
            f(l);
            return;
        }
        for s in 0..(used + 1).min(k) {
            l[pos] = s;
            rec(pos + 1, used.max(s + 1), l, k, f);
        }
    }
    rec(0, 0, &mut vec![0; m], k, f);
}

#[test]
fn slack_examples() {
    let axes = vec![bit(), bit(), bit()];
    let constant_v = AuxChannel::constant(&axes).unwrap();

    let point = JointPmf::point_mass(axes.clone(), &[1, 0, 0]).unwrap();
    let mut r = rng(1);
    let ch = random_kernel(&mut r, &[2, 2, 2], 2);
    assert!(constraint_slack(&point, &constant_v, &ch).unwrap().abs() < 1e-12);

    let s = constraint_slack(&copy_state_target(), &constant_v, &degenerate_channel()).unwrap();
    assert!((s + 1.0).abs() < 1e-12);

    let v_is_x1 = AuxChannel::new(CondPmf::deterministic(axes, bit(), |i| i[1]).unwrap()).unwrap();
    let s = constraint_slack(&copy_state_target(), &v_is_x1, &noiseless_x1()).unwrap();
    assert!(s.abs() < 1e-12);
}

#[test]
fn slack_matches_oracle_on_deterministic_kernels() {
    let mut r = rng(2);
    let axes = vec![bit(), bit(), bit()];
    for _ in 0..20 {
        let qbar = random_joint(&mut r, &[2, 2, 2]);
        let ch = random_kernel(&mut r, &[2, 2, 2], 2);
        let labels: Vec<usize> = (0..8).map(|a| (a * 5 + 3) % 3).collect();
        let aux = AuxChannel::from_rows(&axes, &Rows::deterministic(3, &labels)).unwrap();
        let got = constraint_slack(&qbar, &aux, &ch).unwrap();
        assert!((got - slack_oracle(qbar.probs(), &ch, &labels, 3)).abs() < 1e-12);
    }
}

#[test]
fn max_slack_examples() {
    let cfg = OptConfig::default();
    let rep = max_constraint_slack(&copy_state_target(), &degenerate_channel(), 8, &cfg).unwrap();
    assert!((rep.slack + 1.0).abs() < 1e-6, "{}", rep.slack);
    assert!(!rep.implementable);

    let mut r = rng(3);
    let factorized = {
        let p = random_weights(&mut r, 2);
        let p1 = random_weights(&mut r, 2);
        let p2 = random_weights(&mut r, 2);
        JointPmf::from_weights(vec![bit(), bit(), bit()], |i| p[i[0]] * p1[i[1]] * p2[i[2]]).unwrap()
    };
    let ch = random_kernel(&mut r, &[2, 2, 2], 2);
    let rep = max_constraint_slack(&factorized, &ch, 8, &cfg).unwrap();
    assert!(rep.slack >= -1e-12);
    assert!(rep.implementable);
    assert!(rep.trace.len() >= rep.restarts);
}

#[test]
fn max_slack_beats_deterministic_oracle() {
    let mut r = rng(4);
    let cfg = OptConfig::default();
    for _ in 0..3 {
        let qbar = random_joint(&mut r, &[2, 2, 2]);
        let ch = random_kernel(&mut r, &[2, 2, 2], 2);
        let mut oracle = f64::NEG_INFINITY;
        for_each_labeling(8, 8, &mut |l| oracle = oracle.max(slack_oracle(qbar.probs(), &ch, l, 8)));
        let rep = max_constraint_slack(&qbar, &ch, 8, &cfg).unwrap();
        assert!(rep.slack >= oracle - 1e-4, "{} < {}", rep.slack, oracle);
        // The reported kernel really attains the reported slack.
        let s = constraint_slack(&qbar, &rep.best_aux, &ch).unwrap();
        assert!((s - rep.slack).abs() < 1e-9);
    }
}

#[test]
fn max_slack_is_deterministic() {
    let mut r = rng(5);
    let qbar = random_joint(&mut r, &[2, 2, 2]);
    let ch = random_kernel(&mut r, &[2, 2, 2], 2);
    let cfg = OptConfig::with_seed(9);
    let a = max_constraint_slack(&qbar, &ch, 4, &cfg).unwrap();
    let b = max_constraint_slack(&qbar, &ch, 4, &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn noncausal_implementability_examples() {
    let cfg = OptConfig::default();
    let prior = JointPmf::from_shape(&[2], vec![0.5, 0.5]).unwrap();

    let constant_actions =
        JointPmf::from_weights(vec![bit(), bit(), bit()], |i| if i[1] == 1 && i[2] == 0 { 0.5 } else { 0.0 }).unwrap();
    let rep = is_implementable_noncausal(&constant_actions, &prior, &degenerate_channel(), 8, &cfg).unwrap();
    assert!(rep.implementable && rep.slack >= -1e-12);

    let rep = is_implementable_noncausal(&copy_state_target(), &prior, &degenerate_channel(), 8, &cfg).unwrap();
    assert!(!rep.implementable);

    let rep = is_implementable_noncausal(&copy_state_target(), &prior, &noiseless_x1(), 8, &cfg).unwrap();
    assert!(rep.slack.abs() < 1e-6, "{}", rep.slack);
    assert!(rep.implementable);

    let skewed = JointPmf::from_shape(&[2], vec![0.7, 0.3]).unwrap();
    let err = is_implementable_noncausal(&copy_state_target(), &skewed, &noiseless_x1(), 8, &cfg).unwrap_err();
    assert!(matches!(err, Error::WrongMarginal { .. }));
}

#[test]
fn causal_implementability_examples() {
    let mut r = rng(6);
    for _ in 0..10 {
        let q = random_factorized(&mut r, 2, 2, 2);
        assert!(is_implementable_causal(&q, 1e-9).unwrap());
        let mut p = q.probs().to_vec();
        p[3] += 0.02;
        let s: f64 = p.iter().sum();
        let perturbed = JointPmf::from_shape(&[2, 2, 2], p.into_iter().map(|x| x / s).collect()).unwrap();
        assert!(!is_implementable_causal(&perturbed, 1e-6).unwrap());
    }
    assert!(!is_implementable_causal(&copy_state_target(), 1e-6).unwrap());
}

#[test]
fn causal_targets_are_noncausally_implementable() {
    let mut r = rng(7);
    let cfg = OptConfig { slack_restarts: 8, ..OptConfig::default() };
    for _ in 0..10 {
        let q = random_factorized(&mut r, 2, 2, 2);
        let ch = random_kernel(&mut r, &[2, 2, 2], 2);
        let rep = max_constraint_slack(&q, &ch, 8, &cfg).unwrap();
        assert!(rep.slack >= -1e-6);
    }
}

#[test]
fn noncausal_payoff_trivial_cases() {
    let cfg = OptConfig { payoff_restarts: 4, ..OptConfig::default() };
    let prior = JointPmf::from_shape(&[2], vec![0.4, 0.6]).unwrap();
    let p = CoordinationProblem::new(prior.clone(), degenerate_channel(), vec![1.5; 8]).unwrap();
    let opt = optimize_payoff_noncausal(&p, 8, &cfg).unwrap();
    assert!((opt.value - 1.5).abs() < 1e-12);

    // Payoff ignores x2: Agent 1 best-responds to the state.
    let w: Vec<f64> = (0..8).map(|a| [0.2, 0.9, 0.7, 0.1][a >> 1]).collect();
    let p = CoordinationProblem::new(prior, degenerate_channel(), w).unwrap();
    let opt = optimize_payoff_noncausal(&p, 8, &cfg).unwrap();
    assert!((opt.value - (0.4 * 0.9 + 0.6 * 0.7)).abs() < 1e-6, "{}", opt.value);
}

/// With `Y = X1` the best auxiliary is `V = X1`, so feasibility reads
/// `I(X0;X2) <= H(X1 | X0, X2)`.
fn closed_form_feasible(q: &[f64]) -> bool {
    let h = |m: &[f64]| -> f64 { m.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum() };
    let (mut x0, mut x2, mut x0x2) = ([0.0; 2], [0.0; 2], [0.0; 4]);
    for a in 0..8 {
        x0[a >> 2] += q[a];
        x2[a & 1] += q[a];
        x0x2[(a >> 2) * 2 + (a & 1)] += q[a];
    }
    let i02 = h(&x0) + h(&x2) - h(&x0x2);
    let h1_given = h(q) - h(&x0x2);
    i02 <= h1_given + 1e-12
}

#[test]
fn noncausal_payoff_against_grid_search() {
    let prior = JointPmf::from_shape(&[2], vec![0.5, 0.5]).unwrap();
    let w: Vec<f64> = (0..8).map(|a| ((a >> 2) == ((a >> 1) & 1) && ((a >> 1) & 1) == (a & 1)) as u8 as f64).collect();
    let p = CoordinationProblem::new(prior, noiseless_x1(), w.clone()).unwrap();

    // Grid over P(x1, x2 | x0) for each state, step 0.05.
    let steps = 20;
    let mut simplex = Vec::new();
    for a in 0..=steps {
        for b in 0..=steps - a {
            for c in 0..=steps - a - b {
                let d = steps - a - b - c;
                simplex.push([a, b, c, d].map(|k| k as f64 / steps as f64));
            }
        }
    }
    let mut grid_best = f64::NEG_INFINITY;
    let mut q = [0.0; 8];
    for s0 in &simplex {
        for s1 in &simplex {
            for k in 0..4 {
                q[k] = 0.5 * s0[k];
                q[4 + k] = 0.5 * s1[k];
            }
            let value: f64 = q.iter().zip(&w).map(|(a, b)| a * b).sum();
            if value > grid_best && closed_form_feasible(&q) {
                grid_best = value;
            }
        }
    }

    let cfg = OptConfig::default();
    let opt = optimize_payoff_noncausal(&p, 8, &cfg).unwrap();
    assert!(opt.value >= grid_best - 1e-3, "{} vs grid {}", opt.value, grid_best);
    // Certified: the returned point satisfies the closed-form constraint.
    assert!(closed_form_feasible(opt.qbar.probs()) || opt.report.slack >= -1e-9);
    assert!(opt.value > 0.5 + 1e-3, "non-causal knowledge should beat the causal 0.5");
}

#[test]
fn noncausal_payoff_ordering_and_certificate() {
    let mut r = rng(8);
    let cfg = OptConfig { payoff_restarts: 8, ..OptConfig::default() };
    for _ in 0..4 {
        let p = random_binary_problem(&mut r);
        let opt = optimize_payoff_noncausal(&p, 8, &cfg).unwrap();
        let causal = optimize_payoff_causal(&p);
        let base = baselines(&p);
        assert!(causal.value <= opt.value + 1e-6);
        assert!(opt.value <= base.costless + 1e-9);
        check_marginal(&opt.qbar, p.state_prior()).unwrap();
        let rep =
            is_implementable_noncausal(&opt.qbar, p.state_prior(), p.channel(), 8, &OptConfig { tol: 1e-6, ..cfg })
                .unwrap();
        assert!(rep.implementable, "slack {}", rep.slack);
    }
}

#[test]
fn causal_scheme_simulation() {
    let prior = JointPmf::from_shape(&[2], vec![1.0, 0.0]).unwrap();
    let p = CoordinationProblem::new(prior, degenerate_channel(), vec![0.0; 8]).unwrap();
    let point = JointPmf::point_mass(vec![bit(), bit(), bit()], &[0, 1, 1]).unwrap();
    let sim = simulate_causal_scheme(&p, &point, 500, 3).unwrap();
    assert_eq!(sim.max_dev, 0.0);

    let uniform = JointPmf::from_shape(&[2], vec![0.5, 0.5]).unwrap();
    let p = CoordinationProblem::new(uniform, degenerate_channel(), vec![0.0; 8]).unwrap();
    let err = simulate_causal_scheme(&p, &copy_state_target(), 100, 0).unwrap_err();
    assert!(matches!(err, Error::Argument(_)));
}

#[test]
fn causal_scheme_deviation_shrinks_with_horizon() {
    let mut r = rng(10);
    let q = random_factorized(&mut r, 2, 2, 2);
    let prior = q.marginalize(&[0]).unwrap();
    let p = CoordinationProblem::new(prior, degenerate_channel(), vec![0.0; 8]).unwrap();
    let median = |t: usize| {
        let mut devs: Vec<f64> = (0..50).map(|s| simulate_causal_scheme(&p, &q, t, s).unwrap().max_dev).collect();
        devs.sort_by(f64::total_cmp);
        devs[25]
    };
    let m: Vec<f64> = [1000, 2000, 4000, 8000].into_iter().map(median).collect();
    assert!(m.windows(2).all(|w| w[1] <= w[0]), "{m:?}");
}

#[test]
fn cardinality_stress_examples() {
    let cfg = OptConfig { slack_restarts: 8, ..OptConfig::default() };
    let rows = cardinality_stress(&copy_state_target(), &degenerate_channel(), &cfg).unwrap();
    assert_eq!(rows.len(), 10);
    let i02 = mutual_information(&copy_state_target(), &[0], &[2]).unwrap();
    assert!(rows.iter().all(|r| (r.slack + i02).abs() < 1e-6));

    let mut r = rng(11);
    let const_x2 = {
        let rho = random_weights(&mut r, 2);
        let k: Vec<Vec<f64>> = (0..2).map(|_| random_weights(&mut r, 2)).collect();
        JointPmf::from_weights(vec![bit(), bit(), bit()], |i| if i[2] == 0 { rho[i[0]] * k[i[0]][i[1]] } else { 0.0 })
            .unwrap()
    };
    let ch = random_kernel(&mut r, &[2, 2, 2], 2);
    let rows = cardinality_stress(&const_x2, &ch, &cfg).unwrap();
    assert!(rows[0].slack >= -1e-12);
    assert!(rows.windows(2).all(|w| w[1].slack >= w[0].slack - 1e-9));
}
