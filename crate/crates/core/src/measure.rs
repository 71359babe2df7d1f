//! Running weighted empirical measure of a scheme path.
//!
//! After `n` insertions the measure is
//! `(1/Γ_n) Σ_{k≤n} γ_k δ_{x_k}` with `Γ_n = Σ γ_k`. Mean and second moment are
//! kept as compensated running sums so they can be read in O(1) at every step.
//! Before the first insertion a measure built with [`WeightedEmpiricalMeasure::new`]
//! behaves as the point mass at its starting position.

use std::io::{Read, Write};
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

#[derive(Debug, Clone)]
pub struct WeightedEmpiricalMeasure {
    dim: usize,
    /// Flat row-major storage, `dim` values per atom.
    positions: Vec<f64>,
    weights: Vec<f64>,
    total: Compensated,
    first: Vec<Compensated>,
    second: Compensated,
    mean: Vec<f64>,
    second_moment: f64,
    /// Set by [`new`](Self::new) until the first insertion.
    bootstrap: bool,
}

impl WeightedEmpiricalMeasure {
    /// The point mass at `x0`. The bootstrap atom carries no weight: the first
    /// [`push_atom`](Self::push_atom) replaces it.
    pub fn new(x0: &[f64]) -> Result<Self> {
        if x0.is_empty() {
            return Err(Error::Dimension("initial position has dimension 0".into()));
        }
        let mut m = Self::empty(x0.len())?;
        m.mean.copy_from_slice(x0);
        m.second_moment = norm_sq(x0);
        m.bootstrap = true;
        Ok(m)
    }

    /// A measure with no atoms and no bootstrap position. Functionals are
    /// zero until the first insertion.
    pub fn empty(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Dimension("measure dimension must be >= 1".into()));
        }
        Ok(Self {
            dim,
            positions: Vec::new(),
            weights: Vec::new(),
            total: Compensated::default(),
            first: vec![Compensated::default(); dim],
            second: Compensated::default(),
            mean: vec![0.0; dim],
            second_moment: 0.0,
            bootstrap: false,
        })
    }

    /// One-dimensional measure from `(position, weight)` pairs.
    pub fn from_atoms(atoms: &[(f64, f64)]) -> Result<Self> {
        let mut m = Self::empty(1)?;
        for &(x, w) in atoms {
            m.push_atom(&[x], w)?;
        }
        Ok(m)
    }

    /// Equal-weight one-dimensional measure.
    pub fn uniform(points: &[f64]) -> Result<Self> {
        let mut m = Self::empty(1)?;
        for &x in points {
            m.push_atom(&[x], 1.0)?;
        }
        Ok(m)
    }

    /// Appends an atom and updates the running functionals. Equivalent to
    /// `ν ← (Γ_{n-1}/Γ_n) ν + (w/Γ_n) δ_x`.
    pub fn push_atom(&mut self, x: &[f64], weight: f64) -> Result<()> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::NonPositiveWeight(weight));
        }
        if x.len() != self.dim {
            return Err(Error::Dimension(format!(
                "atom has dimension {}, measure has {}",
                x.len(),
                self.dim
            )));
        }
        self.positions.extend_from_slice(x);
        self.weights.push(weight);
        self.total.add(weight);
        let total = self.total.value();
        for ((acc, mean), &xi) in self.first.iter_mut().zip(self.mean.iter_mut()).zip(x) {
            acc.add(weight * xi);
            *mean = acc.value() / total;
        }
        self.second.add(weight * norm_sq(x));
        self.second_moment = self.second.value() / total;
        self.bootstrap = false;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of inserted atoms (the bootstrap point is not counted).
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// True for the weightless point mass built by [`new`](Self::new),
    /// before any atom has been pushed.
    pub fn is_bootstrap(&self) -> bool {
        self.bootstrap
    }

    /// `Γ_n`; zero before the first insertion.
    pub fn total_weight(&self) -> f64 {
        self.total.value()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// `∫|x|² ν(dx)`, which is also `W₂(ν, δ₀)²`.
    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Flat positions, `dim` values per atom, in insertion order.
    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn atom(&self, k: usize) -> (&[f64], f64) {
        (&self.positions[k * self.dim..(k + 1) * self.dim], self.weights[k])
    }

    pub fn atoms(&self) -> impl ExactSizeIterator<Item = (&[f64], f64)> + '_ {
        self.positions
            .chunks_exact(self.dim)
            .zip(self.weights.iter().copied())
    }

    pub fn view(&self) -> MeasureView<'_> {
        MeasureView {
            mean: &self.mean,
            second_moment: self.second_moment,
            l2_norm: self.second_moment.sqrt(),
            measure: self,
        }
    }

    /// Writes the atoms as CSV with header `k,x,weight` (`k` starts at 1).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        if self.dim != 1 {
            return Err(Error::UnsupportedDimension(self.dim));
        }
        let mut w = csv::Writer::from_writer(out);
        let wrap = |source| Error::Csv { path: "<atoms>".into(), source };
        w.write_record(["k", "x", "weight"]).map_err(wrap)?;
        for (k, (x, weight)) in self.atoms().enumerate() {
            w.write_record([
                (k + 1).to_string(),
                format!("{:.16e}", x[0]),
                format!("{:.16e}", weight),
            ])
            .map_err(wrap)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a `k,x,weight` atom file. The `k` column is optional and ignored.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            x: f64,
            weight: f64,
        }
        let wrap = |source| Error::Csv { path: "<atoms>".into(), source };
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let mut m = Self::empty(1)?;
        for row in reader.deserialize::<Row>() {
            let row = row.map_err(wrap)?;
            m.push_atom(&[row.x], row.weight)?;
        }
        if m.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        Ok(m)
    }

    pub fn read_csv_file(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(file).map_err(|e| match e {
            Error::Csv { source, .. } => Error::Csv { path: path.to_path_buf(), source },
            other => other,
        })
    }
}

/// Read-only functionals of a measure, as seen by model coefficients.
#[derive(Debug, Clone, Copy)]
pub struct MeasureView<'a> {
    pub mean: &'a [f64],
    pub second_moment: f64,
    /// `‖X‖₂ = sqrt(E|X|²)`.
    pub l2_norm: f64,
    measure: &'a WeightedEmpiricalMeasure,
}

impl<'a> MeasureView<'a> {
    pub fn measure(&self) -> &'a WeightedEmpiricalMeasure {
        self.measure
    }
}

pub(crate) fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn bootstrap_is_point_mass() {
        let m = WeightedEmpiricalMeasure::new(&[0.0]).unwrap();
        assert_eq!(m.mean(), &[0.0]);
        assert_eq!(m.second_moment(), 0.0);
        assert_eq!(m.total_weight(), 0.0);
        assert!(m.is_empty());

        let m = WeightedEmpiricalMeasure::new(&[2.0]).unwrap();
        assert_eq!(m.mean(), &[2.0]);
        assert_eq!(m.second_moment(), 4.0);

        let m = WeightedEmpiricalMeasure::new(&[1.0, -1.0]).unwrap();
        assert_eq!(m.mean(), &[1.0, -1.0]);
        assert_eq!(m.second_moment(), 2.0);
    }

    #[test]
    fn empty_position_is_rejected() {
        assert!(matches!(
            WeightedEmpiricalMeasure::new(&[]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn first_push_replaces_bootstrap() {
        let mut m = WeightedEmpiricalMeasure::new(&[5.0]).unwrap();
        assert!(m.is_bootstrap());
        m.push_atom(&[1.0], 0.5).unwrap();
        assert!(!m.is_bootstrap());
        assert_eq!(m.len(), 1);
        assert_eq!(m.mean(), &[1.0]);
        assert_eq!(m.second_moment(), 1.0);
        assert_eq!(m.total_weight(), 0.5);
    }

    #[test]
    fn push_examples() {
        let mut m = WeightedEmpiricalMeasure::from_atoms(&[(0.0, 1.0)]).unwrap();
        m.push_atom(&[2.0], 1.0).unwrap();
        assert_eq!(m.mean(), &[1.0]);
        assert_eq!(m.second_moment(), 2.0);

        let mut m = WeightedEmpiricalMeasure::from_atoms(&[(0.0, 1.0)]).unwrap();
        m.push_atom(&[0.0], 3.0).unwrap();
        assert_eq!(m.mean(), &[0.0]);
        assert_eq!(m.second_moment(), 0.0);

        let m = WeightedEmpiricalMeasure::from_atoms(&[(1.0, 1.0), (3.0, 1.0), (5.0, 2.0)]).unwrap();
        assert_relative_eq!(m.mean()[0], 3.5, max_relative = 1e-15);
        assert_relative_eq!(m.second_moment(), 15.0, max_relative = 1e-15);
        assert_eq!(m.total_weight(), 4.0);
    }

    #[test]
    fn push_errors() {
        let mut m = WeightedEmpiricalMeasure::empty(1).unwrap();
        assert!(matches!(m.push_atom(&[1.0], 0.0), Err(Error::NonPositiveWeight(_))));
        assert!(matches!(m.push_atom(&[1.0], -2.0), Err(Error::NonPositiveWeight(_))));
        assert!(matches!(m.push_atom(&[1.0], f64::NAN), Err(Error::NonPositiveWeight(_))));
        assert!(matches!(m.push_atom(&[1.0, 2.0], 1.0), Err(Error::Dimension(_))));
        assert!(m.is_empty());
    }

    #[test]
    fn view_examples() {
        let v = WeightedEmpiricalMeasure::new(&[0.0]).unwrap();
        let v = v.view();
        assert_eq!((v.mean[0], v.second_moment, v.l2_norm), (0.0, 0.0, 0.0));

        let m = WeightedEmpiricalMeasure::from_atoms(&[(-1.0, 1.0), (1.0, 1.0)]).unwrap();
        let v = m.view();
        assert_eq!(v.mean[0], 0.0);
        assert_eq!(v.l2_norm, 1.0);

        let m = WeightedEmpiricalMeasure::from_atoms(&[(3.0, 2.0), (0.0, 1.0)]).unwrap();
        let v = m.view();
        assert_relative_eq!(v.mean[0], 2.0, max_relative = 1e-15);
        assert_relative_eq!(v.second_moment, 6.0, max_relative = 1e-15);
        assert_eq!(v.measure().len(), 2);
    }

    #[test]
    fn csv_round_trip() {
        let m = WeightedEmpiricalMeasure::from_atoms(&[(0.1, 1.0), (-3.25, 0.7), (1e-9, 2.5)]).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("k,x,weight\n1,"));
        let back = WeightedEmpiricalMeasure::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.positions(), m.positions());
        assert_eq!(back.weights(), m.weights());
    }

    #[test]
    fn csv_without_index_column() {
        let m = WeightedEmpiricalMeasure::read_csv("x,weight\n1,1\n3,1\n".as_bytes()).unwrap();
        assert_eq!(m.mean(), &[2.0]);
        assert!(matches!(
            WeightedEmpiricalMeasure::read_csv("x,weight\n".as_bytes()),
            Err(Error::EmptyMeasure)
        ));
    }

    fn recompute(atoms: &[(f64, f64)]) -> (f64, f64, f64) {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        let mean = atoms.iter().map(|a| a.1 * a.0).sum::<f64>() / total;
        let second = atoms.iter().map(|a| a.1 * a.0 * a.0).sum::<f64>() / total;
        (total, mean, second)
    }

    proptest! {
        #[test]
        fn incremental_matches_recomputation(
            atoms in prop::collection::vec((-50.0f64..50.0, 1e-3f64..10.0), 1..2000)
        ) {
            let m = WeightedEmpiricalMeasure::from_atoms(&atoms).unwrap();
            let (total, mean, second) = recompute(&atoms);
            let scale = second.sqrt();
            prop_assert!((m.total_weight() - total).abs() <= 1e-12 * total);
            prop_assert!((m.mean()[0] - mean).abs() <= 1e-12 * scale.max(mean.abs()));
            prop_assert!((m.second_moment() - second).abs() <= 1e-12 * second);
            prop_assert!(m.second_moment() >= m.mean()[0] * m.mean()[0] * (1.0 - 1e-12));
            let normalized: f64 = m.weights().iter().map(|w| w / m.total_weight()).sum();
            prop_assert!((normalized - 1.0).abs() <= 1e-12);
            let v = m.view();
            prop_assert!((v.l2_norm * v.l2_norm - v.second_moment).abs() <= 1e-14 * v.second_moment.max(f64::MIN_POSITIVE));
        }

        #[test]
        fn equal_weight_permutation_invariance(
            points in prop::collection::vec(-10.0f64..10.0, 1..200),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = points.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = WeightedEmpiricalMeasure::uniform(&points).unwrap();
            let b = WeightedEmpiricalMeasure::uniform(&shuffled).unwrap();
            let scale = a.second_moment().sqrt().max(1e-300);
            prop_assert!((a.mean()[0] - b.mean()[0]).abs() <= 1e-12 * scale);
            prop_assert!((a.second_moment() - b.second_moment()).abs() <= 1e-12 * a.second_moment().max(1e-300));
        }
    }
}
