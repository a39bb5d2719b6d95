//! Linear combinations of marginal entropies of a dense joint tensor, with
//! gradients. Every mutual-information expression used by the optimizers is
//! one of these.

use super::tensor;

const LOG_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone)]
struct Term {
    coef: f64,
    map: Vec<usize>,
    size: usize,
}

/// `F(q) = Σ_k c_k H(q_{S_k})` over a fixed tensor shape.
#[derive(Debug, Clone)]
pub struct EntropyCombination {
    len: usize,
    terms: Vec<Term>,
}

impl EntropyCombination {
    pub fn new(shape: &[usize], terms: &[(f64, &[usize])]) -> Self {
        let len = shape.iter().product();
        let terms = terms
            .iter()
            .map(|&(coef, axes)| {
                let (map, size) = tensor::projection_map(shape, axes);
                Term { coef, map, size }
            })
            .collect();
        Self { len, terms }
    }

    /// `I(A;B|C)` expressed as `H(AC) + H(BC) - H(ABC) - H(C)`.
    pub fn cmi(shape: &[usize], a: &[usize], b: &[usize], c: &[usize]) -> Self {
        let ac = [a, c].concat();
        let bc = [b, c].concat();
        let abc = [a, b, c].concat();
        Self::new(shape, &[(1.0, &ac), (1.0, &bc), (-1.0, &abc), (-1.0, c)])
    }

    /// Adds `scale * other` term by term.
    pub fn plus(mut self, scale: f64, other: &EntropyCombination) -> Self {
        assert_eq!(self.len, other.len);
        self.terms.extend(other.terms.iter().map(|t| Term { coef: scale * t.coef, ..t.clone() }));
        self
    }

    fn marginal(term: &Term, q: &[f64]) -> Vec<f64> {
        let mut m = vec![0.0; term.size];
        for (x, &p) in q.iter().enumerate() {
            m[term.map[x]] += p;
        }
        m
    }

    pub fn value(&self, q: &[f64]) -> f64 {
        debug_assert_eq!(q.len(), self.len);
        self.terms
            .iter()
            .map(|t| {
                // Empty axis set: a single cell holding the total mass, H = 0.
                if t.size == 1 {
                    return 0.0;
                }
                t.coef * super::info::entropy_of(&Self::marginal(t, q))
            })
            .sum()
    }

    /// Returns the value and overwrites `grad` with `∂F/∂q`.
    pub fn value_and_grad(&self, q: &[f64], grad: &mut [f64]) -> f64 {
        debug_assert_eq!(q.len(), self.len);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut value = 0.0;
        for t in &self.terms {
            if t.size == 1 {
                continue;
            }
            let m = Self::marginal(t, q);
            value += t.coef * super::info::entropy_of(&m);
            let logs: Vec<f64> = m.iter().map(|&p| p.max(LOG_FLOOR).log2() + std::f64::consts::LOG2_E).collect();
            for (x, g) in grad.iter_mut().enumerate() {
                *g -= t.coef * logs[t.map[x]];
            }
        }
        value
    }
}
