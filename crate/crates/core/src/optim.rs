//! Exponentiated-gradient ascent over products of probability simplices.
//!
//! Variables are row-stochastic matrices (one simplex per row). A step
//! multiplies each entry by `exp(step * grad)` and renormalizes its row, which
//! keeps every iterate feasible without projections. The step size is adapted
//! by backtracking: grown after an improving step, shrunk until the objective
//! improves otherwise.

use serde::{Deserialize, Serialize};

/// Row-stochastic matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rows {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Rows {
    pub fn uniform(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![1.0 / cols as f64; rows * cols] }
    }

    pub fn from_data(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Deterministic rows: row `r` puts all its mass on `labels[r]`.
    pub fn deterministic(cols: usize, labels: &[usize]) -> Self {
        let mut data = vec![0.0; labels.len() * cols];
        for (r, &l) in labels.iter().enumerate() {
            data[r * cols + l] = 1.0;
        }
        Self { rows: labels.len(), cols, data }
    }

    /// `(1 - w) * self + w * uniform`; moves iterates off the boundary so that
    /// multiplicative updates can reach every entry.
    pub fn smoothed(&self, w: f64) -> Self {
        let u = w / self.cols as f64;
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| (1.0 - w) * x + u).collect() }
    }

    /// `(1 - w) * self + w * other`.
    pub fn mix(&self, other: &Rows, w: f64) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| (1.0 - w) * a + w * b).collect(),
        }
    }
}

pub trait SmoothObjective {
    fn value(&self, x: &[f64]) -> f64;
    /// Value and gradient. The gradient may be rescaled per row by any
    /// positive factor (e.g. divided by the row's weight); only directions
    /// within a row matter to the update.
    fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AscentConfig {
    pub max_iter: usize,
    /// Relative improvement below which a step counts as stalled.
    pub tol: f64,
    /// Consecutive stalled steps before declaring convergence.
    pub patience: usize,
    pub initial_step: f64,
    pub max_step: f64,
}

impl Default for AscentConfig {
    fn default() -> Self {
        Self { max_iter: 1500, tol: 1e-12, patience: 8, initial_step: 1.0, max_step: 1e4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AscentReport {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn eg_step(x: &Rows, grad: &[f64], step: f64, out: &mut Rows) {
    let cols = x.cols;
    for r in 0..x.rows {
        let xs = x.row(r);
        let gs = &grad[r * cols..(r + 1) * cols];
        let top = gs.iter().zip(xs).filter(|(_, &v)| v > 0.0).map(|(&g, _)| g).fold(f64::NEG_INFINITY, f64::max);
        let dst = out.row_mut(r);
        let mut total = 0.0;
        for c in 0..cols {
            let v = if xs[c] > 0.0 { xs[c] * (step * (gs[c] - top)).exp() } else { 0.0 };
            dst[c] = v;
            total += v;
        }
        if total > 0.0 && total.is_finite() {
            dst.iter_mut().for_each(|v| *v /= total);
        } else {
            dst.copy_from_slice(xs);
        }
    }
}

/// Maximizes `obj` starting from `x`, which is updated in place.
pub fn eg_ascent(x: &mut Rows, obj: &impl SmoothObjective, cfg: &AscentConfig) -> AscentReport {
    let mut grad = vec![0.0; x.data.len()];
    let mut trial = x.clone();
    let mut value = obj.value_grad(&x.data, &mut grad);
    let mut step = cfg.initial_step;
    let mut stalled = 0;
    for it in 0..cfg.max_iter {
        let mut accepted = None;
        for _ in 0..60 {
            eg_step(x, &grad, step, &mut trial);
            let v = obj.value(&trial.data);
            if v > value {
                accepted = Some(v);
                break;
            }
            step *= 0.25;
            if step < 1e-300 {
                break;
            }
        }
        let Some(v) = accepted else {
            return AscentReport { value, iterations: it, converged: true };
        };
        let gain = v - value;
        std::mem::swap(x, &mut trial);
        value = obj.value_grad(&x.data, &mut grad);
        step = (step * 2.0).min(cfg.max_step);
        if gain <= cfg.tol * (1.0 + value.abs()) {
            stalled += 1;
            if stalled >= cfg.patience {
                return AscentReport { value, iterations: it + 1, converged: true };
            }
        } else {
            stalled = 0;
        }
    }
    AscentReport { value, iterations: cfg.max_iter, converged: false }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Concave test objective: Σ_r Σ_c t_rc log x_rc, maximized at x = t.
    struct CrossEntropy {
        target: Vec<f64>,
    }

    impl SmoothObjective for CrossEntropy {
        fn value(&self, x: &[f64]) -> f64 {
            x.iter().zip(&self.target).map(|(&x, &t)| t * x.max(1e-300).ln()).sum()
        }
        fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
            for ((g, &x), &t) in grad.iter_mut().zip(x).zip(&self.target) {
                *g = t / x.max(1e-300);
            }
            self.value(x)
        }
    }

    #[test]
    fn reaches_interior_maximizer() {
        let target = vec![0.2, 0.3, 0.5, 0.6, 0.4, 0.0];
        let obj = CrossEntropy { target: target.clone() };
        let mut x = Rows::uniform(2, 3);
        let rep = eg_ascent(&mut x, &obj, &AscentConfig::default());
        assert!(rep.converged);
        for (a, b) in x.data.iter().zip(&target) {
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn linear_objective_goes_to_the_best_vertex() {
        struct Linear(Vec<f64>);
        impl SmoothObjective for Linear {
            fn value(&self, x: &[f64]) -> f64 {
                x.iter().zip(&self.0).map(|(a, b)| a * b).sum()
            }
            fn value_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
                grad.copy_from_slice(&self.0);
                self.value(x)
            }
        }
        let obj = Linear(vec![1.0, 3.0, 2.0]);
        let mut x = Rows::uniform(1, 3);
        let rep = eg_ascent(&mut x, &obj, &AscentConfig::default());
        assert!((rep.value - 3.0).abs() < 1e-9);
    }

    #[test]
    fn rows_never_leave_the_simplex() {
        let obj = CrossEntropy { target: vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0] };
        let mut x = Rows::uniform(2, 3);
        eg_ascent(&mut x, &obj, &AscentConfig { max_iter: 50, ..Default::default() });
        for r in 0..2 {
            let s: f64 = x.row(r).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(x.row(r).iter().all(|&v| v >= 0.0));
        }
    }
}
