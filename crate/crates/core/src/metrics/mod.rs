//! Exact one-dimensional Wasserstein-2 distances, the Monte-Carlo error
//! curve and power-law rate fitting.
//!
//! In one dimension the optimal coupling is the monotone one, so
//! `W₂(μ, ν)² = ∫₀¹ (F_μ⁻¹(u) − F_ν⁻¹(u))² du`. Both quantile functions are
//! piecewise constant for discrete measures, and the integral is an exact
//! sum over the merged cumulative-weight partition.

mod normal;
mod rate;

pub use normal::{normal_cdf, normal_quantile};
pub use rate::{error_curve, fit_rate, ErrorCurve, RateFit};

use crate::error::{Error, Result};
use crate::measure::{Compensated, WeightedEmpiricalMeasure};
use crate::models::GaussianRef;

/// Default number of atoms in the discretized reference law.
pub const DEFAULT_M_REF: usize = 4096;

/// A one-dimensional discrete law in quantile form: positions sorted
/// ascending, with normalized cumulative weights ending at exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedQuantileMeasure {
    positions: Vec<f64>,
    cumulative: Vec<f64>,
}

impl SortedQuantileMeasure {
    /// From `(position, weight)` pairs already sorted by position.
    pub fn from_sorted(atoms: &[(f64, f64)]) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        let mut total = Compensated::default();
        for &(_, w) in atoms {
            total.add(w);
        }
        let total = total.value();
        let mut running = Compensated::default();
        let mut positions = Vec::with_capacity(atoms.len());
        let mut cumulative = Vec::with_capacity(atoms.len());
        for &(x, w) in atoms {
            running.add(w);
            positions.push(x);
            cumulative.push((running.value() / total).min(1.0));
        }
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(Self { positions, cumulative })
    }

    /// Sorts the atoms of a one-dimensional measure. The bootstrap point mass
    /// of a fresh measure counts as a unit atom.
    pub fn from_measure(measure: &WeightedEmpiricalMeasure) -> Result<Self> {
        if measure.dim() != 1 {
            return Err(Error::UnsupportedDimension(measure.dim()));
        }
        if measure.is_bootstrap() {
            return Self::from_sorted(&[(measure.mean()[0], 1.0)]);
        }
        if measure.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        let mut atoms: Vec<(f64, f64)> = measure.atoms().map(|(x, w)| (x[0], w)).collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self::from_sorted(&atoms)
    }

    /// Equal-weight law on the given points.
    pub fn uniform(points: &[f64]) -> Result<Self> {
        let mut atoms: Vec<(f64, f64)> = points.iter().map(|&x| (x, 1.0)).collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self::from_sorted(&atoms)
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Squared W₂ between two quantile-form laws.
pub fn w2_squared_sorted(a: &SortedQuantileMeasure, b: &SortedQuantileMeasure) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut prev = 0.0;
    let mut acc = Compensated::default();
    while i < a.len() && j < b.len() {
        let (ca, cb) = (a.cumulative[i], b.cumulative[j]);
        let c = ca.min(cb);
        let diff = a.positions[i] - b.positions[j];
        acc.add((c - prev) * diff * diff);
        prev = c;
        if ca <= cb {
            i += 1;
        }
        if cb <= ca {
            j += 1;
        }
    }
    acc.value().max(0.0)
}

pub fn w2_sorted(a: &SortedQuantileMeasure, b: &SortedQuantileMeasure) -> f64 {
    w2_squared_sorted(a, b).sqrt()
}

/// `W₂(μ, ν)` for one-dimensional weighted measures.
pub fn w2_discrete(mu: &WeightedEmpiricalMeasure, nu: &WeightedEmpiricalMeasure) -> Result<f64> {
    Ok(w2_sorted(
        &SortedQuantileMeasure::from_measure(mu)?,
        &SortedQuantileMeasure::from_measure(nu)?,
    ))
}

/// Equal-weight midpoint-quantile discretization:
/// atoms at `m + s Φ⁻¹((j − 1/2)/M)`, `j = 1..M`.
pub fn discretize_gaussian(reference: &GaussianRef, m_ref: usize) -> Result<SortedQuantileMeasure> {
    if m_ref < 2 {
        return Err(Error::Parameter(format!("M_ref must be >= 2, got {m_ref}")));
    }
    let reference = GaussianRef::new(reference.mean, reference.std)?;
    let inv = 1.0 / m_ref as f64;
    let positions: Vec<f64> = (1..=m_ref)
        .map(|j| reference.mean + reference.std * normal_quantile((j as f64 - 0.5) * inv))
        .collect();
    let mut cumulative: Vec<f64> = (1..=m_ref).map(|j| j as f64 * inv).collect();
    *cumulative.last_mut().unwrap() = 1.0;
    Ok(SortedQuantileMeasure { positions, cumulative })
}

/// `W₂(μ, ν̃)` where `ν̃` is the `m_ref`-point discretization of `reference`.
pub fn w2_to_gaussian(mu: &WeightedEmpiricalMeasure, reference: &GaussianRef, m_ref: usize) -> Result<f64> {
    Ok(w2_sorted(
        &SortedQuantileMeasure::from_measure(mu)?,
        &discretize_gaussian(reference, m_ref)?,
    ))
}

/// Sorted copy of a growing measure, refreshed by merging only the atoms
/// added since the last sync. Used at snapshot times along a path, where a
/// full re-sort each time would dominate the run.
#[derive(Debug, Clone, Default)]
pub struct IncrementalSorter {
    sorted: Vec<(f64, f64)>,
    synced: usize,
    fresh: Vec<(f64, f64)>,
    merged: Vec<(f64, f64)>,
}

impl IncrementalSorter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Brings the sorted copy up to date with `measure`, which must only have
    /// grown since the previous call.
    pub fn sync(&mut self, measure: &WeightedEmpiricalMeasure) -> Result<()> {
        if measure.dim() != 1 {
            return Err(Error::UnsupportedDimension(measure.dim()));
        }
        if measure.len() < self.synced {
            return Err(Error::Parameter("measure shrank since last sync".into()));
        }
        self.fresh.clear();
        self.fresh.extend(
            measure.positions()[self.synced..]
                .iter()
                .zip(&measure.weights()[self.synced..])
                .map(|(&x, &w)| (x, w)),
        );
        self.synced = measure.len();
        if self.fresh.is_empty() {
            return Ok(());
        }
        self.fresh.sort_by(|a, b| a.0.total_cmp(&b.0));
        self.merged.clear();
        self.merged.reserve(self.sorted.len() + self.fresh.len());
        let (mut i, mut j) = (0, 0);
        while i < self.sorted.len() && j < self.fresh.len() {
            if self.sorted[i].0.total_cmp(&self.fresh[j].0).is_le() {
                self.merged.push(self.sorted[i]);
                i += 1;
            } else {
                self.merged.push(self.fresh[j]);
                j += 1;
            }
        }
        self.merged.extend_from_slice(&self.sorted[i..]);
        self.merged.extend_from_slice(&self.fresh[j..]);
        std::mem::swap(&mut self.sorted, &mut self.merged);
        Ok(())
    }

    pub fn sorted(&self) -> &[(f64, f64)] {
        &self.sorted
    }

    pub fn quantile_measure(&self) -> Result<SortedQuantileMeasure> {
        SortedQuantileMeasure::from_sorted(&self.sorted)
    }
}
