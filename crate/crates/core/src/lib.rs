//! Stochastic-approximation simulation of the invariant distribution of
//! McKean–Vlasov SDEs.
//!
//! A single Euler-type path is run with decreasing steps `γ_n = γ₁ n^{-r}`;
//! its coefficients read the path's own weighted occupation measure
//! `ν̄_{Γn} = Γ_n⁻¹ Σ γ_k δ_{X_{k-1}}`, which converges to the stationary law.
//!
//! - [`measure`]: the running weighted empirical measure.
//! - [`scheme`]: step schedules, the update rule and seeded path runner.
//! - [`models`]: the benchmark drift/diffusion pairs and their stationary laws.
//! - [`metrics`]: exact 1-D W₂, Gaussian references, error curves, rate fits.
//! - [`tuning`]: step-rate recommendations and sampled condition checks.
//! - [`harness`]: configured Monte-Carlo experiments, sweeps and CSV output.

pub mod error;
pub mod harness;
pub mod measure;
pub mod metrics;
pub mod models;
pub mod scheme;
pub mod tuning;

pub use error::{Error, Result};
pub use measure::{MeasureView, WeightedEmpiricalMeasure};
pub use models::{GaussianRef, Model};
pub use scheme::{make_schedule, run_path, InitialLaw, NoiseKey, SchemeState, StepSchedule};
