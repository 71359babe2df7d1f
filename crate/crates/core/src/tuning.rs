//! Step-rate tuning from Lipschitz data, and sampled checks of the
//! confluence and mean-reversion inequalities.
//!
//! For a one-dimensional model with uniform drift contraction
//! `a = −sup ∂ₓb > 0` and measure-Lipschitz constants `L_b`, `L_σ`, the
//! confluence inequality
//!
//! ```text
//! 2(b(x,μ) − b(y,ν))(x − y) + (2p−1)|σ(x,μ) − σ(y,ν)|² ≤ −α|x−y|² + β W₂²(μ,ν)
//! ```
//!
//! holds (p = 1) with `α = 2a − ε L_b`, `β = L_b/ε + L_σ²` and
//! `ε = 2a / (L_b + sqrt(L_b² + 2a L_b L_σ²))`. The recommended step decay is
//! `r* = ϑ*/(1+ϑ*)` with `ϑ* = 1 − β/α`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measure::WeightedEmpiricalMeasure;
use crate::metrics::w2_discrete;
use crate::models::Model;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfluenceParams {
    pub a: f64,
    pub l_b: f64,
    pub l_sigma: f64,
    /// `+∞` when `L_b = 0`.
    pub eps_star: f64,
    pub alpha: f64,
    pub beta: f64,
    pub theta_star: f64,
    /// `None` when `ϑ* ≤ 0`: no rate is guaranteed.
    pub r_star: Option<f64>,
    /// `min(r*, 1/3)`.
    pub r_as: Option<f64>,
}

impl ConfluenceParams {
    pub fn guaranteed(&self) -> bool {
        self.theta_star > 0.0
    }
}

pub fn confluence_params(a: f64, l_b: f64, l_sigma: f64) -> Result<ConfluenceParams> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Parameter(format!("contraction a must be positive, got {a}")));
    }
    if !(l_b >= 0.0 && l_b.is_finite()) || !(l_sigma >= 0.0 && l_sigma.is_finite()) {
        return Err(Error::Parameter(format!(
            "Lipschitz constants must be finite and >= 0, got L_b = {l_b}, L_sigma = {l_sigma}"
        )));
    }
    let ls2 = l_sigma * l_sigma;
    let (eps_star, alpha, beta) = if l_b == 0.0 {
        (f64::INFINITY, 2.0 * a, ls2)
    } else {
        let eps = 2.0 * a / (l_b + (l_b * l_b + 2.0 * a * l_b * ls2).sqrt());
        (eps, 2.0 * a - eps * l_b, l_b / eps + ls2)
    };
    let theta_star = 1.0 - beta / alpha;
    let r_star = (theta_star > 0.0).then(|| theta_star / (1.0 + theta_star));
    Ok(ConfluenceParams {
        a,
        l_b,
        l_sigma,
        eps_star,
        alpha,
        beta,
        theta_star,
        r_star,
        r_as: r_star.map(|r| r.min(1.0 / 3.0)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleMode {
    /// `r*`, the quadratic-mean recommendation.
    L2,
    /// `min(r*, 1/3)`.
    AlmostSure,
    /// `1/3`, optimal without mean-field interaction.
    FixedThird,
}

impl std::str::FromStr for ScheduleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l2" | "L2" => Ok(ScheduleMode::L2),
            "as" | "a.s." | "almost_sure" => Ok(ScheduleMode::AlmostSure),
            "third" | "fixed_third" => Ok(ScheduleMode::FixedThird),
            other => Err(Error::Parameter(format!("unknown schedule mode {other:?} (l2 | as | third)"))),
        }
    }
}

pub fn recommend_schedule(params: &ConfluenceParams, mode: ScheduleMode) -> Result<f64> {
    match mode {
        ScheduleMode::FixedThird => Ok(1.0 / 3.0),
        ScheduleMode::L2 => params.r_star.ok_or(Error::Untuned(params.theta_star)),
        ScheduleMode::AlmostSure => params.r_as.ok_or(Error::Untuned(params.theta_star)),
    }
}

/// Outcome of a sampled inequality check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViolationReport {
    pub samples: usize,
    pub violations: usize,
    /// Largest `LHS − RHS` seen; negative when every sample held strictly.
    pub worst_margin: f64,
}

/// Sampling box and measure size for the checkers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingDomain {
    /// Points and atoms are drawn uniformly from `[−radius, radius]`.
    pub radius: f64,
    /// Sampled measures have between 1 and `max_atoms` atoms.
    pub max_atoms: usize,
}

impl Default for SamplingDomain {
    fn default() -> Self {
        Self { radius: 10.0, max_atoms: 8 }
    }
}

fn coefficients(model: &dyn Model, x: f64, law: &WeightedEmpiricalMeasure) -> (f64, f64) {
    let view = law.view();
    let (mut b, mut s) = ([0.0], [0.0]);
    model.drift(&[x], &view, &mut b);
    model.diffusion(&[x], &view, &mut s);
    (b[0], s[0])
}

fn require_scalar(model: &dyn Model) -> Result<()> {
    if model.dim() != 1 {
        return Err(Error::UnsupportedDimension(model.dim()));
    }
    Ok(())
}

/// `(LHS, RHS)` of the confluence inequality at one tuple.
pub fn confluence_sides(
    model: &dyn Model,
    (x, mu): (f64, &WeightedEmpiricalMeasure),
    (y, nu): (f64, &WeightedEmpiricalMeasure),
    alpha: f64,
    beta: f64,
    p: f64,
) -> Result<(f64, f64)> {
    require_scalar(model)?;
    let (bx, sx) = coefficients(model, x, mu);
    let (by, sy) = coefficients(model, y, nu);
    let w = w2_discrete(mu, nu)?;
    let dx = x - y;
    let lhs = 2.0 * (bx - by) * dx + (2.0 * p - 1.0) * (sx - sy).powi(2);
    let rhs = -alpha * dx * dx + beta * w * w;
    Ok((lhs, rhs))
}

/// `(LHS, RHS)` of the mean-reversion inequality at one tuple.
pub fn mean_reversion_sides(
    model: &dyn Model,
    (x, mu): (f64, &WeightedEmpiricalMeasure),
    p: f64,
    k: f64,
    alpha: f64,
    beta: f64,
) -> Result<(f64, f64)> {
    require_scalar(model)?;
    let (b, s) = coefficients(model, x, mu);
    let lhs = 2.0 * b * x + (2.0 * p - 1.0) * s * s;
    // W₂(μ, δ₀)² is the second moment.
    let rhs = k - alpha * x * x + beta * mu.second_moment();
    Ok((lhs, rhs))
}

fn is_violation(lhs: f64, rhs: f64) -> bool {
    lhs - rhs > 1e-9 * (1.0 + lhs.abs() + rhs.abs())
}

fn sample_measure(rng: &mut ChaCha8Rng, domain: &SamplingDomain) -> Result<WeightedEmpiricalMeasure> {
    let k = rng.random_range(1..=domain.max_atoms.max(1));
    let atoms: Vec<(f64, f64)> = (0..k)
        .map(|_| {
            (
                rng.random_range(-domain.radius..=domain.radius),
                1.0 - rng.random::<f64>(),
            )
        })
        .collect();
    WeightedEmpiricalMeasure::from_atoms(&atoms)
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("p must be >= 1, got {p}")))
    }
}

pub fn check_confluence(
    model: &dyn Model,
    alpha: f64,
    beta: f64,
    p: f64,
    num_samples: usize,
    seed: u64,
) -> Result<ViolationReport> {
    check_confluence_in(model, alpha, beta, p, num_samples, seed, &SamplingDomain::default())
}

pub fn check_confluence_in(
    model: &dyn Model,
    alpha: f64,
    beta: f64,
    p: f64,
    num_samples: usize,
    seed: u64,
    domain: &SamplingDomain,
) -> Result<ViolationReport> {
    check_p(p)?;
    require_scalar(model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ViolationReport { samples: num_samples, violations: 0, worst_margin: f64::NEG_INFINITY };
    for _ in 0..num_samples {
        let x = rng.random_range(-domain.radius..=domain.radius);
        let y = rng.random_range(-domain.radius..=domain.radius);
        let mu = sample_measure(&mut rng, domain)?;
        let nu = sample_measure(&mut rng, domain)?;
        let (lhs, rhs) = confluence_sides(model, (x, &mu), (y, &nu), alpha, beta, p)?;
        report.worst_margin = report.worst_margin.max(lhs - rhs);
        if is_violation(lhs, rhs) {
            report.violations += 1;
        }
    }
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
pub fn check_mean_reversion(
    model: &dyn Model,
    p: f64,
    k: f64,
    alpha: f64,
    beta: f64,
    num_samples: usize,
    seed: u64,
) -> Result<ViolationReport> {
    check_mean_reversion_in(model, p, k, alpha, beta, num_samples, seed, &SamplingDomain::default())
}

#[allow(clippy::too_many_arguments)]
pub fn check_mean_reversion_in(
    model: &dyn Model,
    p: f64,
    k: f64,
    alpha: f64,
    beta: f64,
    num_samples: usize,
    seed: u64,
    domain: &SamplingDomain,
) -> Result<ViolationReport> {
    check_p(p)?;
    require_scalar(model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ViolationReport { samples: num_samples, violations: 0, worst_margin: f64::NEG_INFINITY };
    for _ in 0..num_samples {
        let x = rng.random_range(-domain.radius..=domain.radius);
        let mu = sample_measure(&mut rng, domain)?;
        let (lhs, rhs) = mean_reversion_sides(model, (x, &mu), p, k, alpha, beta)?;
        report.worst_margin = report.worst_margin.max(lhs - rhs);
        if is_violation(lhs, rhs) {
            report.violations += 1;
        }
    }
    Ok(report)
}
