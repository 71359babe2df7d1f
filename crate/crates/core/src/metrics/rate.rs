use crate::error::{Error, Result};

/// Root-mean-square W₂ error across paths at each snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurve {
    pub indices: Vec<usize>,
    /// `Γ_n` at each snapshot.
    pub gamma_sums: Vec<f64>,
    /// `E_n`; `+∞` where every path had diverged.
    pub values: Vec<f64>,
    /// Number of paths `M`.
    pub paths: usize,
    /// Paths excluded at each snapshot because they had diverged.
    pub diverged: Vec<usize>,
}

/// Aggregates per-path W₂ series into `E_n = sqrt(mean_m W₂²)`.
///
/// `per_path[m][j]` is path `m`'s distance at snapshot `j`, or `None` if the
/// path had diverged by then. Diverged entries are excluded and counted.
pub fn error_curve(indices: &[usize], gamma_sums: &[f64], per_path: &[Vec<Option<f64>>]) -> Result<ErrorCurve> {
    if indices.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter("snapshot indices must be strictly increasing".into()));
    }
    if gamma_sums.len() != indices.len() {
        return Err(Error::Parameter("one Γ_n per snapshot required".into()));
    }
    if let Some(bad) = per_path.iter().position(|p| p.len() != indices.len()) {
        return Err(Error::Parameter(format!(
            "path {bad} has {} snapshots, grid has {}",
            per_path[bad].len(),
            indices.len()
        )));
    }
    let mut values = Vec::with_capacity(indices.len());
    let mut diverged = Vec::with_capacity(indices.len());
    for j in 0..indices.len() {
        let (mut sum, mut live) = (0.0, 0usize);
        for path in per_path {
            if let Some(w) = path[j] {
                sum += w * w;
                live += 1;
            }
        }
        values.push(if live == 0 { f64::INFINITY } else { (sum / live as f64).sqrt() });
        diverged.push(per_path.len() - live);
    }
    Ok(ErrorCurve {
        indices: indices.to_vec(),
        gamma_sums: gamma_sums.to_vec(),
        values,
        paths: per_path.len(),
        diverged,
    })
}

impl ErrorCurve {
    /// Value at the snapshot closest to `n` from below.
    pub fn value_at_or_before(&self, n: usize) -> Option<f64> {
        let j = self.indices.partition_point(|&i| i <= n);
        j.checked_sub(1).map(|j| self.values[j])
    }

    pub fn last(&self) -> Option<f64> {
        self.values.last().copied()
    }
}

/// Least-squares fit `log E_n ≈ intercept − exponent · log n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub exponent: f64,
    pub intercept: f64,
    pub window: (usize, usize),
    /// RMS of the log-residuals.
    pub residual: f64,
    pub points: usize,
}

pub const MIN_FIT_POINTS: usize = 5;

/// Fits the snapshots with `lo <= n <= hi`.
pub fn fit_rate(curve: &ErrorCurve, window: (usize, usize)) -> Result<RateFit> {
    let (lo, hi) = window;
    if lo >= hi {
        return Err(Error::Fit(format!("empty window [{lo}, {hi}]")));
    }
    let pts: Vec<(f64, f64)> = curve
        .indices
        .iter()
        .zip(&curve.values)
        .filter(|(&n, _)| n >= lo && n <= hi)
        .map(|(&n, &e)| (n, e))
        .map(|(n, e)| {
            if e > 0.0 && e.is_finite() {
                Ok(((n as f64).ln(), e.ln()))
            } else {
                Err(Error::Fit(format!("E_{n} = {e} is not finite and positive")))
            }
        })
        .collect::<Result<_>>()?;
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::Fit(format!(
            "{} snapshots in [{lo}, {hi}], need at least {MIN_FIT_POINTS}",
            pts.len()
        )));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / k)
        .sqrt();
    Ok(RateFit {
        exponent: -slope,
        intercept,
        window,
        residual,
        points: pts.len(),
    })
}
