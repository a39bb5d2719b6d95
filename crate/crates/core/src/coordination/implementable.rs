use super::slack::{max_constraint_slack, FeasibilityReport};
use super::OptConfig;
use crate::error::{Error, Result};
use crate::prob::{CondPmf, JointPmf};

/// Largest tolerated deviation of `Σ_{x1,x2} Q̄` from the state prior.
pub const MARGINAL_TOL: f64 = 1e-9;

/// Checks `Σ_{x1,x2} Q̄(x0, x1, x2) = ρ0(x0)`.
pub fn check_marginal(qbar: &JointPmf, state_prior: &JointPmf) -> Result<()> {
    if qbar.rank() != 3 || state_prior.rank() != 1 || qbar.shape()[0] != state_prior.shape()[0] {
        return Err(Error::Dimension("target and state prior disagree on |X0|".into()));
    }
    let m = qbar.marginalize(&[0])?;
    let max_dev = m.probs().iter().zip(state_prior.probs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if max_dev > MARGINAL_TOL {
        return Err(Error::WrongMarginal { max_dev });
    }
    Ok(())
}

/// Non-causal implementability: the maximal slack over auxiliary kernels with
/// `|V| = v_size` must be at least `-cfg.tol`.
pub fn is_implementable_noncausal(
    qbar: &JointPmf,
    state_prior: &JointPmf,
    channel: &CondPmf,
    v_size: usize,
    cfg: &OptConfig,
) -> Result<FeasibilityReport> {
    check_marginal(qbar, state_prior)?;
    max_constraint_slack(qbar, channel, v_size, cfg)
}

/// Causal implementability: `Q̄ = ρ0(x0) P(x2) P(x1 | x0, x2)` entrywise within
/// `tol`, with `ρ0` and `P(x2)` the marginals of `Q̄`. Equivalent to
/// `X0 ⊥ X2` under `Q̄`.
pub fn is_implementable_causal(qbar: &JointPmf, tol: f64) -> Result<bool> {
    if qbar.rank() != 3 {
        return Err(Error::Dimension("target must be a law over (x0, x1, x2)".into()));
    }
    Ok(factorization_gap(qbar)? <= tol)
}

/// `max |Q̄ - ρ0 · Q̄_{X2} · Q̄_{X1|X0X2}|`.
pub fn factorization_gap(qbar: &JointPmf) -> Result<f64> {
    let shape = qbar.shape();
    let (n0, n1, n2) = (shape[0], shape[1], shape[2]);
    let rho = qbar.marginalize(&[0])?;
    let p2 = qbar.marginalize(&[2])?;
    // Kernel rows indexed by (x0, x2), output x1.
    let k = qbar.condition(&[0, 2])?;
    let mut gap = 0.0f64;
    for x0 in 0..n0 {
        for x1 in 0..n1 {
            for x2 in 0..n2 {
                let f = rho.probs()[x0] * p2.probs()[x2] * k.row(x0 * n2 + x2)[x1];
                gap = gap.max((qbar.get(&[x0, x1, x2]) - f).abs());
            }
        }
    }
    Ok(gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::Alphabet;

    fn bits3() -> Vec<Alphabet> {
        vec![Alphabet::new(2).unwrap(); 3]
    }

    #[test]
    fn causal_factorization_cases() {
        // rho0 = (0.3, 0.7), P(x2) = (0.6, 0.4), P(x1 | x0, x2) arbitrary.
        let p1 = [[0.9, 0.2], [0.5, 0.1]];
        let q = JointPmf::from_weights(bits3(), |i| {
            let r = [0.3, 0.7][i[0]] * [0.6, 0.4][i[2]];
            let p = p1[i[0]][i[2]];
            r * if i[1] == 0 { p } else { 1.0 - p }
        })
        .unwrap();
        assert!(is_implementable_causal(&q, 1e-12).unwrap());

        let copy = JointPmf::from_weights(bits3(), |i| if i[0] == i[2] && i[1] == 0 { 1.0 } else { 0.0 }).unwrap();
        assert!(!is_implementable_causal(&copy, 1e-6).unwrap());
    }

    #[test]
    fn wrong_marginal_is_reported_as_such() {
        let q = JointPmf::uniform(bits3());
        let prior = JointPmf::from_shape(&[2], vec![0.6, 0.4]).unwrap();
        assert!(matches!(check_marginal(&q, &prior), Err(Error::WrongMarginal { .. })));
        let ok = JointPmf::uniform(vec![Alphabet::new(2).unwrap()]);
        assert!(check_marginal(&q, &ok).is_ok());
    }
}
