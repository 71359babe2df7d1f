//! Coefficient interface and the benchmark models.
//!
//! A [`Model`] evaluates the drift `b(x, μ)` and diffusion `σ(x, μ)` at a state
//! and a read-only view of the current measure. The three zoo models are
//! one-dimensional and depend on the law only through its mean or its L² norm.

use crate::error::{Error, Result};
use crate::measure::MeasureView;

pub trait Model: Send + Sync {
    /// State dimension `d`. Noise has the same dimension.
    fn dim(&self) -> usize;

    /// Writes `b(x, μ)` into `out` (length `d`).
    fn drift(&self, x: &[f64], law: &MeasureView<'_>, out: &mut [f64]);

    /// Writes `σ(x, μ)` into `out` as a row-major `d × d` matrix.
    fn diffusion(&self, x: &[f64], law: &MeasureView<'_>, out: &mut [f64]);
}

/// Convenience evaluation for one-dimensional models.
pub trait ScalarModel {
    fn drift_at(&self, x: f64, law: &MeasureView<'_>) -> f64;
    fn diffusion_at(&self, x: f64, law: &MeasureView<'_>) -> f64;
}

impl<M: Model + ?Sized> ScalarModel for M {
    fn drift_at(&self, x: f64, law: &MeasureView<'_>) -> f64 {
        let mut out = [0.0];
        self.drift(&[x], law, &mut out);
        out[0]
    }

    fn diffusion_at(&self, x: f64, law: &MeasureView<'_>) -> f64 {
        let mut out = [0.0];
        self.diffusion(&[x], law, &mut out);
        out[0]
    }
}

/// Mean-field Ornstein-Uhlenbeck: `dX = (−X + b E[X]) dt + √2 d dW`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFieldOu {
    pub b: f64,
    pub d: f64,
}

/// Nonlinear mean-field OU: `dX = (−X + b (‖X‖₂ − d)) dt + √2 d dW`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlinearMeanFieldOu {
    pub b: f64,
    pub d: f64,
}

/// Mean-field volatility: `dX = −X dt + √2 θ (1 − ‖X‖₂) dW`.
///
/// The volatility is used with its sign; it can go negative when `‖X‖₂ > 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFieldVolatility {
    pub theta: f64,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must be finite, got {v}")))
    }
}

pub fn mf_ou(b: f64, d: f64) -> Result<MeanFieldOu> {
    check_finite("b", b)?;
    check_positive("d", d)?;
    Ok(MeanFieldOu { b, d })
}

pub fn nonlinear_mf_ou(b: f64, d: f64) -> Result<NonlinearMeanFieldOu> {
    check_finite("b", b)?;
    check_positive("d", d)?;
    Ok(NonlinearMeanFieldOu { b, d })
}

pub fn mf_vol(theta: f64) -> Result<MeanFieldVolatility> {
    check_positive("theta", theta)?;
    Ok(MeanFieldVolatility { theta })
}

impl Model for MeanFieldOu {
    fn dim(&self) -> usize {
        1
    }

    fn drift(&self, x: &[f64], law: &MeasureView<'_>, out: &mut [f64]) {
        out[0] = -x[0] + self.b * law.mean[0];
    }

    fn diffusion(&self, _x: &[f64], _law: &MeasureView<'_>, out: &mut [f64]) {
        out[0] = std::f64::consts::SQRT_2 * self.d;
    }
}

impl Model for NonlinearMeanFieldOu {
    fn dim(&self) -> usize {
        1
    }

    fn drift(&self, x: &[f64], law: &MeasureView<'_>, out: &mut [f64]) {
        out[0] = -x[0] + self.b * (law.l2_norm - self.d);
    }

    fn diffusion(&self, _x: &[f64], _law: &MeasureView<'_>, out: &mut [f64]) {
        out[0] = std::f64::consts::SQRT_2 * self.d;
    }
}

impl Model for MeanFieldVolatility {
    fn dim(&self) -> usize {
        1
    }

    fn drift(&self, x: &[f64], _law: &MeasureView<'_>, out: &mut [f64]) {
        out[0] = -x[0];
    }

    fn diffusion(&self, _x: &[f64], law: &MeasureView<'_>, out: &mut [f64]) {
        out[0] = std::f64::consts::SQRT_2 * self.theta * (1.0 - law.l2_norm);
    }
}

/// One-dimensional model from a pair of closures `(x, law) -> value`.
pub struct FnModel<B, S> {
    drift: B,
    diffusion: S,
}

impl<B, S> FnModel<B, S>
where
    B: Fn(f64, &MeasureView<'_>) -> f64 + Send + Sync,
    S: Fn(f64, &MeasureView<'_>) -> f64 + Send + Sync,
{
    pub fn new(drift: B, diffusion: S) -> Self {
        Self { drift, diffusion }
    }
}

impl<B, S> Model for FnModel<B, S>
where
    B: Fn(f64, &MeasureView<'_>) -> f64 + Send + Sync,
    S: Fn(f64, &MeasureView<'_>) -> f64 + Send + Sync,
{
    fn dim(&self) -> usize {
        1
    }

    fn drift(&self, x: &[f64], law: &MeasureView<'_>, out: &mut [f64]) {
        out[0] = (self.drift)(x[0], law);
    }

    fn diffusion(&self, x: &[f64], law: &MeasureView<'_>, out: &mut [f64]) {
        out[0] = (self.diffusion)(x[0], law);
    }
}

/// Gaussian law `N(mean, std²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianRef {
    pub mean: f64,
    pub std: f64,
}

impl GaussianRef {
    pub fn new(mean: f64, std: f64) -> Result<Self> {
        check_finite("mean", mean)?;
        if !(std >= 0.0 && std.is_finite()) {
            return Err(Error::Parameter(format!("std must be >= 0, got {std}")));
        }
        Ok(Self { mean, std })
    }

    pub fn second_moment(&self) -> f64 {
        self.mean * self.mean + self.std * self.std
    }
}

/// Stationary laws of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct Stationary {
    pub laws: Vec<GaussianRef>,
    /// Set when the law is stationary but the mean dynamics are repelling,
    /// so paths started off-centre drift away from it.
    pub unstable: bool,
}

/// Stationary law of [`MeanFieldOu`]. The mean obeys `dm = (b − 1) m dt`, so
/// `N(0, d²)` is stationary for every `b ≠ 1` but attracting only for `b < 1`.
pub fn stationary_mf_ou(b: f64, d: f64) -> Result<Stationary> {
    mf_ou(b, d)?;
    if b == 1.0 {
        return Err(Error::NonUniqueStationary);
    }
    Ok(Stationary {
        laws: vec![GaussianRef { mean: 0.0, std: d }],
        unstable: b > 1.0,
    })
}

/// Stationary laws of [`NonlinearMeanFieldOu`] in closed form:
/// `N(0, d²)`, plus `N(2bd/(b²−1), d²)` when `|b| > 1`.
pub fn stationary_nonlinear(b: f64, d: f64) -> Result<Stationary> {
    nonlinear_mf_ou(b, d)?;
    let mut laws = vec![GaussianRef { mean: 0.0, std: d }];
    if b.abs() > 1.0 {
        laws.push(GaussianRef {
            mean: 2.0 * b * d / (b * b - 1.0),
            std: d,
        });
    }
    Ok(Stationary { laws, unstable: false })
}

/// Numeric fixed points `(m, y)` of `m = b(√y − d)`, `y = m² + d²`.
///
/// Eliminating `m` leaves `(1−b²) s² + 2b²d s − (1+b²) d² = 0` in `s = √y ≥ 0`,
/// solved by bisection. For `|b| > 1` the quadratic is concave with its
/// maximum at `s = b²d/(b²−1)`, which separates the two roots.
pub fn nonlinear_fixed_points(b: f64, d: f64) -> Result<Vec<(f64, f64)>> {
    nonlinear_mf_ou(b, d)?;
    let b2 = b * b;
    let f = |s: f64| (1.0 - b2) * s * s + 2.0 * b2 * d * s - (1.0 + b2) * d * d;
    let upper = if b2 == 1.0 {
        2.0 * d + 1.0
    } else {
        d * (1.0 + b2) / (b2 - 1.0).abs() + 1.0
    };
    let roots = if b2 > 1.0 {
        let vertex = b2 * d / (b2 - 1.0);
        vec![bisect(f, 0.0, vertex), bisect(f, vertex, upper)]
    } else {
        vec![bisect(f, 0.0, upper)]
    };
    Ok(roots
        .into_iter()
        .map(|s| (b * (s - d), s * s))
        .collect())
}

/// Bisection for a sign change on `[lo, hi]`, to an interval width of 1e-14.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = f(lo);
    for _ in 0..200 {
        if hi - lo <= 1e-14 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Stationary law of [`MeanFieldVolatility`]: `N(0, d*²)` with `d* = θ/(1+θ)`,
/// the positive root of `d*² = θ²(1 − d*)²`.
pub fn stationary_mf_vol(theta: f64) -> Result<GaussianRef> {
    mf_vol(theta)?;
    Ok(GaussianRef {
        mean: 0.0,
        std: theta / (1.0 + theta),
    })
}
