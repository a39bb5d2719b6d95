use serde::{Deserialize, Serialize};

use super::alphabet::Alphabet;
use super::tensor;
use crate::error::{Error, Result};

/// Tolerance on `|sum - 1|` for every pmf and every kernel row.
pub const PMF_TOL: f64 = 1e-12;

/// Wire format shared by [`JointPmf`] and [`CondPmf`].
///
/// For a kernel the last axis is the output axis and `probs` is laid out
/// row-major with the output symbol fastest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PmfWire {
    pub axes: Vec<usize>,
    #[serde(default)]
    pub labels: Vec<Vec<String>>,
    pub probs: Vec<f64>,
}

impl PmfWire {
    fn alphabets(&self) -> Result<Vec<Alphabet>> {
        if !self.labels.is_empty() && self.labels.len() != self.axes.len() {
            return Err(Error::Dimension(format!("{} label lists for {} axes", self.labels.len(), self.axes.len())));
        }
        self.axes
            .iter()
            .enumerate()
            .map(|(k, &size)| {
                let mut a = Alphabet::new(size)?;
                if let Some(l) = self.labels.get(k).filter(|l| !l.is_empty()) {
                    a.set_labels(l.clone())?;
                }
                Ok(a)
            })
            .collect()
    }

    fn from_parts(axes: &[Alphabet], probs: &[f64]) -> Self {
        let labels = if axes.iter().any(|a| a.labels().is_some()) {
            axes.iter().map(|a| a.labels().map(<[String]>::to_vec).unwrap_or_default()).collect()
        } else {
            Vec::new()
        };
        PmfWire { axes: axes.iter().map(Alphabet::size).collect(), labels, probs: probs.to_vec() }
    }
}

fn check_entries(probs: &[f64], what: &str) -> Result<()> {
    if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidPmf(format!("{what}: entry {i} is {p}")));
    }
    Ok(())
}

/// Probability mass function over a product of finite alphabets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PmfWire", into = "PmfWire")]
pub struct JointPmf {
    axes: Vec<Alphabet>,
    probs: Vec<f64>,
}

impl TryFrom<PmfWire> for JointPmf {
    type Error = Error;
    fn try_from(w: PmfWire) -> Result<Self> {
        JointPmf::new(w.alphabets()?, w.probs)
    }
}

impl From<JointPmf> for PmfWire {
    fn from(p: JointPmf) -> Self {
        PmfWire::from_parts(&p.axes, &p.probs)
    }
}

impl JointPmf {
    pub fn new(axes: Vec<Alphabet>, probs: Vec<f64>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::Dimension("a pmf needs at least one axis".into()));
        }
        let len: usize = axes.iter().map(Alphabet::size).product();
        if probs.len() != len {
            return Err(Error::Dimension(format!("{} probabilities for a tensor of {} entries", probs.len(), len)));
        }
        check_entries(&probs, "joint pmf")?;
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PMF_TOL {
            return Err(Error::InvalidPmf(format!("entries sum to {sum}")));
        }
        Ok(Self { axes, probs })
    }

    /// Builds a pmf from unlabelled axis sizes.
    pub fn from_shape(shape: &[usize], probs: Vec<f64>) -> Result<Self> {
        let axes = shape.iter().map(|&s| Alphabet::new(s)).collect::<Result<_>>()?;
        Self::new(axes, probs)
    }

    /// Builds a pmf from a non-negative weight function, normalizing the total.
    pub fn from_weights(axes: Vec<Alphabet>, f: impl Fn(&[usize]) -> f64) -> Result<Self> {
        let shape: Vec<usize> = axes.iter().map(Alphabet::size).collect();
        let weights: Vec<f64> = tensor::indices(&shape).map(|i| f(&i)).collect();
        check_entries(&weights, "weights")?;
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidPmf("weights sum to zero".into()));
        }
        Self::new(axes, weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(axes: Vec<Alphabet>) -> Self {
        let len: usize = axes.iter().map(Alphabet::size).product();
        Self { axes, probs: vec![1.0 / len as f64; len] }
    }

    pub fn point_mass(axes: Vec<Alphabet>, at: &[usize]) -> Result<Self> {
        let shape: Vec<usize> = axes.iter().map(Alphabet::size).collect();
        if at.len() != shape.len() || at.iter().zip(&shape).any(|(&i, &d)| i >= d) {
            return Err(Error::Dimension(format!("point {at:?} outside shape {shape:?}")));
        }
        let mut probs = vec![0.0; shape.iter().product()];
        probs[tensor::flat_index(&shape, at)] = 1.0;
        Ok(Self { axes, probs })
    }

    pub fn axes(&self) -> &[Alphabet] {
        &self.axes
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Alphabet::size).collect()
    }

    pub fn rank(&self) -> usize {
        self.axes.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.probs[tensor::flat_index(&self.shape(), idx)]
    }

    /// Joint law of independent variables: `self ⊗ other`.
    pub fn product(&self, other: &JointPmf) -> JointPmf {
        let mut axes = self.axes.clone();
        axes.extend(other.axes.iter().cloned());
        let mut probs = Vec::with_capacity(self.probs.len() * other.probs.len());
        for &p in &self.probs {
            probs.extend(other.probs.iter().map(|&q| p * q));
        }
        JointPmf { axes, probs }
    }

    /// Sums out every axis not listed in `keep`; the result has the kept axes
    /// in the order given.
    pub fn marginalize(&self, keep: &[usize]) -> Result<JointPmf> {
        self.check_axis_set(keep, "keep")?;
        if keep.is_empty() {
            return Err(Error::Argument("marginalize needs at least one kept axis".into()));
        }
        let (map, size) = tensor::projection_map(&self.shape(), keep);
        let mut probs = vec![0.0; size];
        for (flat, &p) in self.probs.iter().enumerate() {
            probs[map[flat]] += p;
        }
        let axes = keep.iter().map(|&a| self.axes[a].clone()).collect();
        Ok(JointPmf { axes, probs })
    }

    /// Conditional law of the remaining axes given `given`. When more than one
    /// axis remains they are flattened into a single product output alphabet.
    /// Rows with zero conditioning mass are uniform.
    pub fn condition(&self, given: &[usize]) -> Result<CondPmf> {
        self.check_axis_set(given, "given")?;
        let rest: Vec<usize> = (0..self.rank()).filter(|a| !given.contains(a)).collect();
        if rest.is_empty() {
            return Err(Error::Argument("nothing left to condition".into()));
        }
        let mut order = given.to_vec();
        order.extend(&rest);
        let permuted = self.permute(&order)?;
        let rows: usize = given.iter().map(|&a| self.axes[a].size()).product();
        let cols: usize = rest.iter().map(|&a| self.axes[a].size()).product();
        let mut probs = permuted.probs;
        for row in probs.chunks_mut(cols) {
            let mass: f64 = row.iter().sum();
            if mass > 0.0 {
                row.iter_mut().for_each(|p| *p /= mass);
            } else {
                row.iter_mut().for_each(|p| *p = 1.0 / cols as f64);
            }
        }
        debug_assert_eq!(probs.len(), rows * cols);
        let given_axes = given.iter().map(|&a| self.axes[a].clone()).collect();
        let rest_axes: Vec<Alphabet> = rest.iter().map(|&a| self.axes[a].clone()).collect();
        let out = if rest_axes.len() == 1 { rest_axes[0].clone() } else { Alphabet::product(&rest_axes)? };
        CondPmf::new(given_axes, out, probs)
    }

    /// Reorders the axes; `order` must be a permutation of `0..rank`.
    pub fn permute(&self, order: &[usize]) -> Result<JointPmf> {
        self.check_axis_set(order, "order")?;
        if order.len() != self.rank() {
            return Err(Error::Argument(format!("{order:?} is not a permutation")));
        }
        let (map, size) = tensor::projection_map(&self.shape(), order);
        let mut probs = vec![0.0; size];
        for (flat, &p) in self.probs.iter().enumerate() {
            probs[map[flat]] = p;
        }
        let axes = order.iter().map(|&a| self.axes[a].clone()).collect();
        Ok(JointPmf { axes, probs })
    }

    /// Appends the kernel's output axis: `out(a, b) = self(a) * kernel(b | a[positions])`.
    pub fn compose(&self, kernel: &CondPmf, positions: &[usize]) -> Result<JointPmf> {
        if positions.len() != kernel.given.len() {
            return Err(Error::Dimension(format!(
                "kernel has {} given axes but {} positions were supplied",
                kernel.given.len(),
                positions.len()
            )));
        }
        self.check_axis_set(positions, "positions")?;
        for (k, &p) in positions.iter().enumerate() {
            if self.axes[p].size() != kernel.given[k].size() {
                return Err(Error::Dimension(format!(
                    "kernel given axis {k} has size {} but prior axis {p} has size {}",
                    kernel.given[k].size(),
                    self.axes[p].size()
                )));
            }
        }
        let (map, _) = tensor::projection_map(&self.shape(), positions);
        let cols = kernel.out.size();
        let mut probs = Vec::with_capacity(self.probs.len() * cols);
        for (flat, &p) in self.probs.iter().enumerate() {
            probs.extend(kernel.row(map[flat]).iter().map(|&k| p * k));
        }
        let mut axes = self.axes.clone();
        axes.push(kernel.out.clone());
        let out = JointPmf { axes, probs };
        out.recheck()?;
        Ok(out)
    }

    fn check_axis_set(&self, set: &[usize], what: &str) -> Result<()> {
        let mut seen = vec![false; self.rank()];
        for &a in set {
            if a >= self.rank() {
                return Err(Error::Dimension(format!("{what}: axis {a} out of range")));
            }
            if std::mem::replace(&mut seen[a], true) {
                return Err(Error::Argument(format!("{what}: axis {a} repeated")));
            }
        }
        Ok(())
    }

    fn recheck(&self) -> Result<()> {
        let sum: f64 = self.probs.iter().sum();
        if (sum - 1.0).abs() > PMF_TOL {
            return Err(Error::Consistency(format!("result sums to {sum}")));
        }
        Ok(())
    }
}

/// Conditional pmf `P(out | given)`; one valid pmf row per given tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PmfWire", into = "PmfWire")]
pub struct CondPmf {
    given: Vec<Alphabet>,
    out: Alphabet,
    probs: Vec<f64>,
}

impl TryFrom<PmfWire> for CondPmf {
    type Error = Error;
    fn try_from(w: PmfWire) -> Result<Self> {
        let mut axes = w.alphabets()?;
        let out = axes.pop().ok_or_else(|| Error::Dimension("a kernel needs an output axis".into()))?;
        CondPmf::new(axes, out, w.probs)
    }
}

impl From<CondPmf> for PmfWire {
    fn from(k: CondPmf) -> Self {
        let mut axes = k.given;
        axes.push(k.out);
        PmfWire::from_parts(&axes, &k.probs)
    }
}

impl CondPmf {
    pub fn new(given: Vec<Alphabet>, out: Alphabet, probs: Vec<f64>) -> Result<Self> {
        let rows: usize = given.iter().map(Alphabet::size).product();
        let cols = out.size();
        if probs.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} probabilities for {} rows of {} entries",
                probs.len(),
                rows,
                cols
            )));
        }
        check_entries(&probs, "kernel")?;
        for (r, row) in probs.chunks(cols).enumerate() {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > PMF_TOL {
                return Err(Error::InvalidPmf(format!("kernel row {r} sums to {sum}")));
            }
        }
        Ok(Self { given, out, probs })
    }

    /// Builds a kernel from a weight function, normalizing each row.
    pub fn from_weights(given: Vec<Alphabet>, out: Alphabet, f: impl Fn(&[usize], usize) -> f64) -> Result<Self> {
        let shape: Vec<usize> = given.iter().map(Alphabet::size).collect();
        let cols = out.size();
        let mut probs = Vec::new();
        for idx in tensor::indices(&shape) {
            let row: Vec<f64> = (0..cols).map(|b| f(&idx, b)).collect();
            check_entries(&row, "kernel weights")?;
            let total: f64 = row.iter().sum();
            if total <= 0.0 {
                return Err(Error::InvalidPmf(format!("kernel row {idx:?} has zero weight")));
            }
            probs.extend(row.into_iter().map(|w| w / total));
        }
        Self::new(given, out, probs)
    }

    /// Deterministic kernel `out = f(given)`.
    pub fn deterministic(given: Vec<Alphabet>, out: Alphabet, f: impl Fn(&[usize]) -> usize) -> Result<Self> {
        let cols = out.size();
        Self::from_weights(given, out, |idx, b| if f(idx) == b { 1.0 } else { 0.0 })
            .map_err(|_| Error::Argument(format!("deterministic map leaves 0..{cols}")))
    }

    pub fn identity(alphabet: Alphabet) -> Self {
        Self::deterministic(vec![alphabet.clone()], alphabet, |i| i[0]).expect("identity kernel")
    }

    /// Binary symmetric channel with crossover probability `e`.
    pub fn bsc(e: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&e) {
            return Err(Error::Argument(format!("crossover probability {e} outside [0, 1]")));
        }
        let bit = Alphabet::new(2)?;
        Self::new(vec![bit.clone()], bit, vec![1.0 - e, e, e, 1.0 - e])
    }

    pub fn given_axes(&self) -> &[Alphabet] {
        &self.given
    }

    pub fn given_shape(&self) -> Vec<usize> {
        self.given.iter().map(Alphabet::size).collect()
    }

    pub fn out_axis(&self) -> &Alphabet {
        &self.out
    }

    pub fn rows(&self) -> usize {
        self.probs.len() / self.out.size()
    }

    pub fn row(&self, given_flat: usize) -> &[f64] {
        let cols = self.out.size();
        &self.probs[given_flat * cols..(given_flat + 1) * cols]
    }

    pub fn prob(&self, given: &[usize], out: usize) -> f64 {
        let flat = tensor::flat_index(&self.given_shape(), given);
        self.row(flat)[out]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn is_deterministic(&self) -> bool {
        self.probs.iter().all(|&p| p == 0.0 || p == 1.0)
    }
}

/// `prior ⊗ kernel`, see [`JointPmf::compose`].
pub fn compose(prior: &JointPmf, kernel: &CondPmf, positions: &[usize]) -> Result<JointPmf> {
    prior.compose(kernel, positions)
}

pub fn marginalize(joint: &JointPmf, keep: &[usize]) -> Result<JointPmf> {
    joint.marginalize(keep)
}

pub fn condition(joint: &JointPmf, given: &[usize]) -> Result<CondPmf> {
    joint.condition(given)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bit() -> Alphabet {
        Alphabet::new(2).unwrap()
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn compose_with_identity_kernel() {
        let x = JointPmf::uniform(vec![bit()]);
        let joint = x.compose(&CondPmf::identity(bit()), &[0]).unwrap();
        assert!(close(joint.probs(), &[0.5, 0.0, 0.0, 0.5]));
    }

    #[test]
    fn compose_with_constant_kernel_is_product_with_point_mass() {
        let prior = JointPmf::from_shape(&[3], vec![0.2, 0.3, 0.5]).unwrap();
        let out = Alphabet::new(4).unwrap();
        let kernel = CondPmf::deterministic(vec![Alphabet::new(3).unwrap()], out.clone(), |_| 2).unwrap();
        let joint = prior.compose(&kernel, &[0]).unwrap();
        let expected = prior.product(&JointPmf::point_mass(vec![out], &[2]).unwrap());
        assert!(close(joint.probs(), expected.probs()));
    }

    #[test]
    fn compose_with_bsc() {
        let x = JointPmf::uniform(vec![bit()]);
        let joint = x.compose(&CondPmf::bsc(0.05).unwrap(), &[0]).unwrap();
        assert!(close(joint.probs(), &[0.475, 0.025, 0.025, 0.475]));
    }

    #[test]
    fn compose_rejects_mismatched_kernel() {
        let x = JointPmf::uniform(vec![Alphabet::new(3).unwrap()]);
        assert!(matches!(x.compose(&CondPmf::bsc(0.1).unwrap(), &[0]), Err(Error::Dimension(_))));
        let y = JointPmf::uniform(vec![bit()]);
        assert!(matches!(y.compose(&CondPmf::bsc(0.1).unwrap(), &[]), Err(Error::Dimension(_))));
    }

    #[test]
    fn marginal_of_product_and_point_mass() {
        let p = JointPmf::from_shape(&[2], vec![0.3, 0.7]).unwrap();
        let q = JointPmf::from_shape(&[3], vec![0.1, 0.1, 0.8]).unwrap();
        let m = p.product(&q).marginalize(&[0]).unwrap();
        assert!(close(m.probs(), p.probs()));

        let pm = JointPmf::point_mass(vec![bit(), Alphabet::new(3).unwrap(), bit()], &[1, 2, 0]).unwrap();
        assert!(close(pm.marginalize(&[1]).unwrap().probs(), &[0.0, 0.0, 1.0]));
    }

    #[test]
    fn marginal_of_bsc_output() {
        let x = JointPmf::uniform(vec![bit()]);
        let joint = x.compose(&CondPmf::bsc(0.05).unwrap(), &[0]).unwrap();
        assert!(close(joint.marginalize(&[1]).unwrap().probs(), &[0.5, 0.5]));
    }

    #[test]
    fn empty_keep_set_is_an_argument_error() {
        let x = JointPmf::uniform(vec![bit(), bit()]);
        assert!(matches!(x.marginalize(&[]), Err(Error::Argument(_))));
    }

    #[test]
    fn condition_cases() {
        let x = JointPmf::uniform(vec![bit()]);
        let ident = x.compose(&CondPmf::identity(bit()), &[0]).unwrap();
        assert_eq!(ident.condition(&[0]).unwrap(), CondPmf::identity(bit()));

        let p = JointPmf::from_shape(&[2], vec![0.4, 0.6]).unwrap();
        let q = JointPmf::from_shape(&[3], vec![0.2, 0.3, 0.5]).unwrap();
        let k = p.product(&q).condition(&[0]).unwrap();
        assert!(close(k.row(0), q.probs()));
        assert!(close(k.row(1), q.probs()));

        let z = JointPmf::from_shape(&[2, 3], vec![0.0, 0.0, 0.0, 0.2, 0.3, 0.5]).unwrap();
        let k = z.condition(&[0]).unwrap();
        assert!(close(k.row(0), &[1.0 / 3.0; 3]));
        assert!(close(k.row(1), &[0.2, 0.3, 0.5]));
    }

    #[test]
    fn rejects_bad_pmfs() {
        assert!(matches!(JointPmf::from_shape(&[2], vec![0.5, 0.4]), Err(Error::InvalidPmf(_))));
        assert!(matches!(JointPmf::from_shape(&[2], vec![1.5, -0.5]), Err(Error::InvalidPmf(_))));
        assert!(matches!(JointPmf::from_shape(&[2], vec![1.0]), Err(Error::Dimension(_))));
        assert!(CondPmf::new(vec![bit()], bit(), vec![0.5, 0.5, 0.9, 0.0]).is_err());
        assert!(Alphabet::new(0).is_err());
        assert!(Alphabet::with_labels(["a", "a"]).is_err());
    }

    #[test]
    fn json_round_trip_keeps_labels() {
        let axes = vec![Alphabet::with_labels(["lo", "hi"]).unwrap(), bit()];
        let p = JointPmf::new(axes, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"axes\":[2,2]"));
        let back: JointPmf = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);

        let k = CondPmf::bsc(0.05).unwrap();
        let back: CondPmf = serde_json::from_str(&serde_json::to_string(&k).unwrap()).unwrap();
        assert_eq!(back, k);

        let bad = r#"{"axes":[2],"probs":[0.5,0.4]}"#;
        assert!(serde_json::from_str::<JointPmf>(bad).is_err());
    }
}
