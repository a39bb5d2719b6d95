//! Instance generators shared by the integration tests.
#![allow(dead_code)]

use actcoord::coordination::CoordinationProblem;
use actcoord::prob::{Alphabet, CondPmf, JointPmf};
use actcoord::state_comm::StateCommProblem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn alph(n: usize) -> Alphabet {
    Alphabet::new(n).unwrap()
}

pub fn bit() -> Alphabet {
    alph(2)
}

/// Weights bounded away from zero so every cell has mass.
pub fn random_weights<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..len).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

pub fn random_joint<R: Rng>(rng: &mut R, shape: &[usize]) -> JointPmf {
    let len = shape.iter().product();
    JointPmf::from_shape(shape, random_weights(rng, len)).unwrap()
}

pub fn random_kernel<R: Rng>(rng: &mut R, given: &[usize], out: usize) -> CondPmf {
    let rows: usize = given.iter().product();
    let probs = (0..rows).flat_map(|_| random_weights(rng, out)).collect();
    CondPmf::new(given.iter().map(|&n| alph(n)).collect(), alph(out), probs).unwrap()
}

/// `ρ0(x0) P(x2) P(x1 | x0, x2)` with random factors.
pub fn random_factorized<R: Rng>(rng: &mut R, n0: usize, n1: usize, n2: usize) -> JointPmf {
    let rho = random_weights(rng, n0);
    let p2 = random_weights(rng, n2);
    let k: Vec<Vec<f64>> = (0..n0 * n2).map(|_| random_weights(rng, n1)).collect();
    let axes = vec![alph(n0), alph(n1), alph(n2)];
    JointPmf::from_weights(axes, |i| rho[i[0]] * p2[i[2]] * k[i[0] * n2 + i[2]][i[1]]).unwrap()
}

/// All-binary coordination problem with random prior, channel and payoff.
pub fn random_binary_problem<R: Rng>(rng: &mut R) -> CoordinationProblem {
    let prior = random_joint(rng, &[2]);
    let channel = random_kernel(rng, &[2, 2, 2], 2);
    let payoff = (0..8).map(|_| rng.random_range(0.0..1.0)).collect();
    CoordinationProblem::new(prior, channel, payoff).unwrap()
}

/// Binary state communication problem with random prior, channel and
/// distortion; auxiliary sizes kept small for speed.
pub fn random_state_problem<R: Rng>(rng: &mut R) -> StateCommProblem {
    let prior = random_joint(rng, &[2]);
    let channel = random_kernel(rng, &[2, 2], 2);
    let distortion = (0..4).map(|_| rng.random_range(0.0..1.0)).collect();
    StateCommProblem::new(prior, channel, distortion, 1.0).unwrap().with_aux_sizes(2, 3).unwrap()
}

/// `Y = X1` over binary inputs `(x0, x1, x2)`.
pub fn noiseless_x1() -> CondPmf {
    CondPmf::deterministic(vec![bit(), bit(), bit()], bit(), |i| i[1]).unwrap()
}

/// `Y` independent of all inputs.
pub fn degenerate_channel() -> CondPmf {
    CondPmf::from_weights(vec![bit(), bit(), bit()], bit(), |_, _| 1.0).unwrap()
}

/// `X2 = X0` uniform, `X1` uniform and independent.
pub fn copy_state_target() -> JointPmf {
    JointPmf::from_weights(vec![bit(), bit(), bit()], |i| if i[2] == i[0] { 0.25 } else { 0.0 }).unwrap()
}

/// Binary Hamming problem whose channel is a BSC(`flip`) on `x1`.
pub fn bsc_state_problem(flip: f64) -> StateCommProblem {
    let ch =
        CondPmf::from_weights(vec![bit(), bit()], bit(), |i, y| if y == i[1] { 1.0 - flip } else { flip }).unwrap();
    StateCommProblem::hamming(JointPmf::from_shape(&[2], vec![0.5, 0.5]).unwrap(), ch).unwrap()
}

/// Scheme law over `(X0, U, V, X1, Y)` for a noiseless channel:
/// `U = BSC(0.2)(X0)`, `V` uniform and independent, `X1 = V = Y`, decoded as
/// `x2 = u`. Expected distortion 0.2.
pub fn success_setup() -> (StateCommProblem, JointPmf, actcoord::state_comm::Decoder) {
    let law = JointPmf::from_weights(vec![bit(); 5], |i| {
        let pu = if i[1] == i[0] { 0.8 } else { 0.2 };
        0.25 * pu * (i[3] == i[2] && i[4] == i[3]) as u8 as f64
    })
    .unwrap();
    let g = actcoord::state_comm::Decoder::OfUY { u_size: 2, y_size: 2, table: vec![0, 0, 1, 1] };
    (bsc_state_problem(0.0), law, g)
}

/// `U` constant, `V` uniform, `X1 = V`, `Y = BSC(0.1)(X1)`, decoded as
/// `x2 = y`. Here `I(V;Y,U) = 1 - h2(0.1)`.
pub fn packing_setup() -> (StateCommProblem, JointPmf, actcoord::state_comm::Decoder) {
    let law = JointPmf::from_weights(vec![bit(), alph(1), bit(), bit(), bit()], |i| {
        let py = if i[4] == i[3] { 0.9 } else { 0.1 };
        0.25 * (i[3] == i[2]) as u8 as f64 * py
    })
    .unwrap();
    let g = actcoord::state_comm::Decoder::OfUY { u_size: 1, y_size: 2, table: vec![0, 1] };
    (bsc_state_problem(0.1), law, g)
}

/// Ladder loose enough for the packing law's smallest cells at `n = 800`.
pub fn loose_params() -> actcoord::codec::BlockCodeParams {
    actcoord::codec::BlockCodeParams { eps1: 0.3, eps2: 0.4, eps3: 0.5, eps_tilde: 0.6, eps: 0.7, ..Default::default() }
}
