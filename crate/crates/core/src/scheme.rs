//! Decreasing-step Euler scheme for the self-interacting diffusion.
//!
//! One path evolves as
//!
//! ```text
//! X_n = X_{n-1} + γ_n b(X_{n-1}, ν_{n-1}) + √γ_n σ(X_{n-1}, ν_{n-1}) Z_n
//! ν_n = (1/Γ_n) Σ_{k≤n} γ_k δ_{X_{k-1}}
//! ```
//!
//! with `ν_0 = δ_{X_0}`. Coefficients always read the lagged measure `ν_{n-1}`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::measure::{Compensated, WeightedEmpiricalMeasure};
use crate::models::Model;

/// Paths whose state leaves the ball of this radius are marked diverged.
pub const DIVERGENCE_GUARD: f64 = 1e8;

/// Steps `γ_n = γ₁ n^{−r}` for `1 ≤ n ≤ N` and partial sums `Γ_n`, `Γ_0 = 0`.
#[derive(Debug, Clone)]
pub struct StepSchedule {
    gamma1: f64,
    rate: f64,
    gammas: Vec<f64>,
    sums: Vec<f64>,
}

pub fn make_schedule(gamma1: f64, rate: f64, horizon: usize) -> Result<StepSchedule> {
    if !(gamma1 > 0.0 && gamma1.is_finite()) {
        return Err(Error::Schedule(format!("gamma1 must be positive, got {gamma1}")));
    }
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Schedule(format!(
            "step rate must lie in [0, 1) so that Γ_n diverges, got {rate}"
        )));
    }
    let mut gammas = Vec::with_capacity(horizon);
    let mut sums = Vec::with_capacity(horizon + 1);
    sums.push(0.0);
    let mut acc = Compensated::default();
    for n in 1..=horizon {
        let g = gamma1 * (n as f64).powf(-rate);
        gammas.push(g);
        acc.add(g);
        sums.push(acc.value());
    }
    Ok(StepSchedule { gamma1, rate, gammas, sums })
}

impl StepSchedule {
    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Number of steps `N`.
    pub fn horizon(&self) -> usize {
        self.gammas.len()
    }

    /// `γ_n`, `1 ≤ n ≤ N`.
    pub fn gamma(&self, n: usize) -> f64 {
        self.gammas[n - 1]
    }

    /// `Γ_n`, `0 ≤ n ≤ N`.
    pub fn gamma_sum(&self, n: usize) -> f64 {
        self.sums[n]
    }
}

/// Key of a path's normal stream: a ChaCha8 generator seeded from `seed`
/// on stream `stream`. Path `m` of an experiment uses `(master_seed, m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseKey {
    pub seed: u64,
    pub stream: u64,
}

impl NoiseKey {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Law of the starting point `X_0`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialLaw {
    /// Independent uniform coordinates on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    Dirac(Vec<f64>),
}

impl Default for InitialLaw {
    fn default() -> Self {
        InitialLaw::Uniform { lo: 0.0, hi: 1.0 }
    }
}

impl InitialLaw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, dim: usize) -> Result<Vec<f64>> {
        match self {
            InitialLaw::Uniform { lo, hi } => {
                if lo.is_nan() || hi.is_nan() || lo > hi {
                    return Err(Error::Parameter(format!("uniform initial law needs lo <= hi, got [{lo}, {hi}]")));
                }
                Ok((0..dim).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect())
            }
            InitialLaw::Dirac(x) => {
                if x.len() != dim {
                    return Err(Error::Dimension(format!(
                        "initial point has dimension {}, model has {dim}",
                        x.len()
                    )));
                }
                Ok(x.clone())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SchemeState {
    n: usize,
    x: Vec<f64>,
    measure: WeightedEmpiricalMeasure,
    diverged_at: Option<usize>,
    drift: Vec<f64>,
    diffusion: Vec<f64>,
}

impl SchemeState {
    pub fn new(x0: Vec<f64>) -> Result<Self> {
        let measure = WeightedEmpiricalMeasure::new(&x0)?;
        let d = x0.len();
        Ok(Self {
            n: 0,
            x: x0,
            measure,
            diverged_at: None,
            drift: vec![0.0; d],
            diffusion: vec![0.0; d * d],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Current state `X_n`. After divergence this is the last finite value.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// `ν_n`.
    pub fn measure(&self) -> &WeightedEmpiricalMeasure {
        &self.measure
    }

    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }

    /// Step at which the path was flagged.
    pub fn diverged_at(&self) -> Option<usize> {
        self.diverged_at
    }

    /// Advances from `n` to `n + 1` with standard normal noise `z`.
    ///
    /// Once a path has diverged, further steps only advance the counter.
    pub fn step<M: Model + ?Sized>(&mut self, model: &M, schedule: &StepSchedule, z: &[f64]) -> Result<()> {
        let d = self.x.len();
        if self.n + 1 > schedule.horizon() {
            return Err(Error::Schedule(format!(
                "step {} beyond horizon {}",
                self.n + 1,
                schedule.horizon()
            )));
        }
        if z.len() != d || model.dim() != d {
            return Err(Error::Dimension(format!(
                "state d = {d}, noise d = {}, model d = {}",
                z.len(),
                model.dim()
            )));
        }
        self.n += 1;
        if self.diverged_at.is_some() {
            return Ok(());
        }
        let g = schedule.gamma(self.n);
        {
            let law = self.measure.view();
            model.drift(&self.x, &law, &mut self.drift);
            model.diffusion(&self.x, &law, &mut self.diffusion);
        }
        self.measure.push_atom(&self.x, g)?;

        let sqrt_g = g.sqrt();
        let mut next = Vec::with_capacity(d);
        for i in 0..d {
            let noise: f64 = self.diffusion[i * d..(i + 1) * d]
                .iter()
                .zip(z)
                .map(|(s, z)| s * z)
                .sum();
            next.push(self.x[i] + g * self.drift[i] + sqrt_g * noise);
        }
        if next.iter().any(|v| !v.is_finite()) {
            self.diverged_at = Some(self.n);
            return Ok(());
        }
        if next.iter().map(|v| v * v).sum::<f64>().sqrt() > DIVERGENCE_GUARD {
            self.diverged_at = Some(self.n);
        }
        self.x = next;
        Ok(())
    }
}

/// What an observer sees at a snapshot index.
#[derive(Debug, Clone, Copy)]
pub struct Snapshot<'a> {
    pub n: usize,
    /// `Γ_n`.
    pub gamma_sum: f64,
    pub measure: &'a WeightedEmpiricalMeasure,
    pub x: &'a [f64],
    pub diverged: bool,
}

pub trait Observer {
    fn observe(&mut self, snapshot: &Snapshot<'_>);
}

impl<F: FnMut(&Snapshot<'_>)> Observer for F {
    fn observe(&mut self, snapshot: &Snapshot<'_>) {
        self(snapshot)
    }
}

/// Runs the full horizon of `schedule` on one path, calling `observer` after
/// each step listed in `snapshots` (strictly increasing, in `1..=N`).
pub fn run_path<M, O>(
    model: &M,
    schedule: &StepSchedule,
    initial: &InitialLaw,
    key: NoiseKey,
    snapshots: &[usize],
    observer: &mut O,
) -> Result<SchemeState>
where
    M: Model + ?Sized,
    O: Observer + ?Sized,
{
    validate_snapshots(snapshots, schedule.horizon())?;
    let d = model.dim();
    let mut rng = key.rng();
    let mut state = SchemeState::new(initial.sample(&mut rng, d)?)?;
    let mut z = vec![0.0; d];
    let mut pending = snapshots.iter().copied().peekable();
    for _ in 0..schedule.horizon() {
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        state.step(model, schedule, &z)?;
        if pending.peek() == Some(&state.n) {
            pending.next();
            observer.observe(&Snapshot {
                n: state.n,
                gamma_sum: schedule.gamma_sum(state.n),
                measure: &state.measure,
                x: &state.x,
                diverged: state.diverged(),
            });
        }
    }
    Ok(state)
}

fn validate_snapshots(snapshots: &[usize], horizon: usize) -> Result<()> {
    if snapshots.first().is_some_and(|&n| n == 0) {
        return Err(Error::Parameter("snapshot indices start at 1".into()));
    }
    if snapshots.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter("snapshot indices must be strictly increasing".into()));
    }
    if let Some(&last) = snapshots.last() {
        if last > horizon {
            return Err(Error::Parameter(format!("snapshot {last} beyond horizon {horizon}")));
        }
    }
    Ok(())
}

/// About `count` indices spaced geometrically from `start` to `horizon`
/// (both included when `start <= horizon`), deduplicated after rounding.
pub fn geometric_snapshots(start: usize, horizon: usize, count: usize) -> Vec<usize> {
    if horizon == 0 || count == 0 {
        return Vec::new();
    }
    let start = start.clamp(1, horizon);
    if count == 1 || start == horizon {
        return vec![horizon];
    }
    let ratio = (horizon as f64 / start as f64).powf(1.0 / (count - 1) as f64);
    let mut out: Vec<usize> = (0..count)
        .map(|j| ((start as f64) * ratio.powi(j as i32)).round() as usize)
        .map(|n| n.clamp(start, horizon))
        .collect();
    *out.last_mut().unwrap() = horizon;
    out.dedup();
    out
}
