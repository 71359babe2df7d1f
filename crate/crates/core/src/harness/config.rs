//! Experiment configuration.
//!
//! Configs are flat TOML key/value files:
//!
//! ```toml
//! model = "mf_ou"        # mf_ou | nonlinear_mf_ou | mf_vol
//! b = 0.5
//! d = 1.0
//! rate = "1/3"           # number, fraction, or auto:l2 | auto:as | auto:third
//! steps = 100000
//! paths = 100
//! seed = 7
//! reference = "auto"     # or "N(0, 1)"
//! x0 = "uniform(0, 1)"   # or "dirac(0.5)"
//! ```
//!
//! Any key can be overridden with `key=value` strings.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::metrics::DEFAULT_M_REF;
use crate::models::{self, GaussianRef, Model};
use crate::scheme::InitialLaw;
use crate::tuning::{confluence_params, recommend_schedule, ScheduleMode};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelSpec {
    MfOu { b: f64, d: f64 },
    NonlinearMfOu { b: f64, d: f64 },
    MfVol { theta: f64 },
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::MfOu { .. } => "mf_ou",
            ModelSpec::NonlinearMfOu { .. } => "nonlinear_mf_ou",
            ModelSpec::MfVol { .. } => "mf_vol",
        }
    }

    pub fn build(&self) -> Result<Box<dyn Model>> {
        Ok(match *self {
            ModelSpec::MfOu { b, d } => Box::new(models::mf_ou(b, d)?),
            ModelSpec::NonlinearMfOu { b, d } => Box::new(models::nonlinear_mf_ou(b, d)?),
            ModelSpec::MfVol { theta } => Box::new(models::mf_vol(theta)?),
        })
    }

    /// The reference law used when none is configured. For the nonlinear
    /// model with `|b| > 1` this is the centred law `N(0, d²)`.
    pub fn stationary(&self) -> Result<GaussianRef> {
        match *self {
            ModelSpec::MfOu { b, d } => match models::stationary_mf_ou(b, d) {
                Ok(s) => Ok(s.laws[0]),
                Err(Error::NonUniqueStationary) => Err(Error::Config(
                    "mf_ou with b = 1 has infinitely many stationary laws; set `reference` explicitly".into(),
                )),
                Err(e) => Err(e),
            },
            ModelSpec::NonlinearMfOu { b, d } => Ok(models::stationary_nonlinear(b, d)?.laws[0]),
            ModelSpec::MfVol { theta } => models::stationary_mf_vol(theta),
        }
    }

    /// `(a, L_b, L_σ)` for the step-rate calculator.
    pub fn lipschitz(&self) -> (f64, f64, f64) {
        match *self {
            ModelSpec::MfOu { b, .. } | ModelSpec::NonlinearMfOu { b, .. } => (1.0, b.abs(), 0.0),
            ModelSpec::MfVol { theta } => (1.0, 0.0, std::f64::consts::SQRT_2 * theta),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateSpec {
    Fixed(f64),
    Auto(ScheduleMode),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceSpec {
    Auto,
    Gaussian(GaussianRef),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub gamma1: f64,
    pub rate: RateSpec,
    /// Number of Euler steps `N`.
    pub steps: usize,
    /// Number of paths `M`.
    pub paths: usize,
    pub seed: u64,
    /// Approximate number of geometrically spaced snapshots.
    pub snapshot_count: usize,
    pub snapshot_start: usize,
    pub reference: ReferenceSpec,
    pub m_ref: usize,
    pub initial: InitialLaw,
    /// Defaults to `[N/10, N]`.
    pub fit_window: Option<(usize, usize)>,
    /// Worker threads; `None` uses `MKV_THREADS` or all cores.
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelSpec::MfOu { b: 0.5, d: 1.0 },
            gamma1: 1.0,
            rate: RateSpec::Fixed(1.0 / 3.0),
            steps: 100_000,
            paths: 500,
            seed: 0,
            snapshot_count: 30,
            snapshot_start: 100,
            reference: ReferenceSpec::Auto,
            m_ref: DEFAULT_M_REF,
            initial: InitialLaw::default(),
            fit_window: None,
            threads: None,
            output: None,
        }
    }
}

/// Numeric config value that may also be written as text (`"1/3"`).
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum NumOrText {
    Num(f64),
    Text(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: Option<String>,
    b: Option<f64>,
    d: Option<f64>,
    theta: Option<f64>,
    gamma1: Option<f64>,
    rate: Option<NumOrText>,
    steps: Option<usize>,
    paths: Option<usize>,
    seed: Option<u64>,
    snapshots: Option<usize>,
    snapshot_start: Option<usize>,
    reference: Option<String>,
    m_ref: Option<usize>,
    x0: Option<NumOrText>,
    fit_lo: Option<usize>,
    fit_hi: Option<usize>,
    threads: Option<usize>,
    output: Option<PathBuf>,
}

fn parse_number(text: &str) -> Result<f64> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num: f64 = num.trim().parse().map_err(|_| Error::Config(format!("bad number {text:?}")))?;
        let den: f64 = den.trim().parse().map_err(|_| Error::Config(format!("bad number {text:?}")))?;
        return Ok(num / den);
    }
    text.parse().map_err(|_| Error::Config(format!("bad number {text:?}")))
}

/// Arguments of `name(a, b, ...)`.
fn call_args<'a>(text: &'a str, name: &str) -> Option<Vec<&'a str>> {
    let inner = text.trim().strip_prefix(name)?.trim().strip_prefix('(')?.strip_suffix(')')?;
    Some(inner.split(',').map(str::trim).collect())
}

fn parse_rate(v: &NumOrText) -> Result<RateSpec> {
    match v {
        NumOrText::Num(r) => Ok(RateSpec::Fixed(*r)),
        NumOrText::Text(t) => match t.trim().strip_prefix("auto:") {
            Some(mode) => Ok(RateSpec::Auto(mode.parse()?)),
            None => Ok(RateSpec::Fixed(parse_number(t)?)),
        },
    }
}

fn parse_reference(text: &str) -> Result<ReferenceSpec> {
    if text.trim() == "auto" {
        return Ok(ReferenceSpec::Auto);
    }
    match call_args(text, "N").as_deref() {
        Some([m, s]) => Ok(ReferenceSpec::Gaussian(GaussianRef::new(parse_number(m)?, parse_number(s)?)?)),
        _ => Err(Error::Config(format!("reference must be \"auto\" or \"N(mean, std)\", got {text:?}"))),
    }
}

fn parse_initial(v: &NumOrText) -> Result<InitialLaw> {
    match v {
        NumOrText::Num(x) => Ok(InitialLaw::Dirac(vec![*x])),
        NumOrText::Text(t) => {
            if let Some(args) = call_args(t, "uniform") {
                if let [lo, hi] = args.as_slice() {
                    return Ok(InitialLaw::Uniform { lo: parse_number(lo)?, hi: parse_number(hi)? });
                }
            }
            if let Some(args) = call_args(t, "dirac") {
                let point = args.iter().map(|a| parse_number(a)).collect::<Result<Vec<_>>>()?;
                return Ok(InitialLaw::Dirac(point));
            }
            Err(Error::Config(format!("x0 must be \"uniform(lo, hi)\" or \"dirac(x)\", got {t:?}")))
        }
    }
}

fn fmt_num(v: f64) -> String {
    format!("{v:?}")
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
        Self::from_table(table)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Parses a config, then applies `key=value` overrides in order.
    pub fn from_str_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        Self::from_table(table)
    }

    fn from_table(table: toml::Table) -> Result<Self> {
        Self::from_table_inner(table).map_err(|e| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        })
    }

    fn from_table_inner(table: toml::Table) -> Result<Self> {
        let raw: RawConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        let base = Self::default();
        let d = raw.d.unwrap_or(1.0);
        let model = match raw.model.as_deref().unwrap_or("mf_ou") {
            "mf_ou" => ModelSpec::MfOu { b: raw.b.unwrap_or(0.5), d },
            "nonlinear_mf_ou" => ModelSpec::NonlinearMfOu { b: raw.b.unwrap_or(0.5), d },
            "mf_vol" => ModelSpec::MfVol { theta: raw.theta.unwrap_or(0.5) },
            other => {
                return Err(Error::Config(format!(
                    "unknown model {other:?} (mf_ou | nonlinear_mf_ou | mf_vol)"
                )))
            }
        };
        let fit_window = match (raw.fit_lo, raw.fit_hi) {
            (None, None) => None,
            (lo, hi) => {
                let steps = raw.steps.unwrap_or(base.steps);
                Some((lo.unwrap_or(steps / 10), hi.unwrap_or(steps)))
            }
        };
        let cfg = Self {
            model,
            gamma1: raw.gamma1.unwrap_or(base.gamma1),
            rate: raw.rate.as_ref().map(parse_rate).transpose()?.unwrap_or(base.rate),
            steps: raw.steps.unwrap_or(base.steps),
            paths: raw.paths.unwrap_or(base.paths),
            seed: raw.seed.unwrap_or(base.seed),
            snapshot_count: raw.snapshots.unwrap_or(base.snapshot_count),
            snapshot_start: raw.snapshot_start.unwrap_or(base.snapshot_start),
            reference: raw.reference.as_deref().map(parse_reference).transpose()?.unwrap_or(base.reference),
            m_ref: raw.m_ref.unwrap_or(base.m_ref),
            initial: raw.x0.as_ref().map(parse_initial).transpose()?.unwrap_or(base.initial),
            fit_window,
            threads: raw.threads,
            output: raw.output,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.steps < 1 {
            return bad("steps must be >= 1".into());
        }
        if self.paths < 1 {
            return bad("paths must be >= 1".into());
        }
        if self.m_ref < 2 {
            return bad("m_ref must be >= 2".into());
        }
        if !(self.gamma1 > 0.0 && self.gamma1.is_finite()) {
            return bad(format!("gamma1 must be positive, got {}", self.gamma1));
        }
        if let RateSpec::Fixed(r) = self.rate {
            if !(0.0..1.0).contains(&r) {
                return bad(format!("rate must lie in [0, 1), got {r}"));
            }
        }
        if let Some((lo, hi)) = self.fit_window {
            if lo >= hi {
                return bad(format!("fit window [{lo}, {hi}] is empty"));
            }
        }
        self.model.build().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    /// The step rate after resolving `auto:` modes through the calculator.
    pub fn resolved_rate(&self) -> Result<f64> {
        match self.rate {
            RateSpec::Fixed(r) => Ok(r),
            RateSpec::Auto(mode) => {
                let (a, lb, ls) = self.model.lipschitz();
                let params = confluence_params(a, lb, ls)?;
                recommend_schedule(&params, mode).map_err(|e| Error::Config(format!("rate auto: {e}")))
            }
        }
    }

    pub fn resolved_reference(&self) -> Result<GaussianRef> {
        match self.reference {
            ReferenceSpec::Gaussian(g) => Ok(g),
            ReferenceSpec::Auto => self.model.stationary(),
        }
    }

    pub fn resolved_fit_window(&self) -> (usize, usize) {
        self.fit_window.unwrap_or((self.steps / 10, self.steps))
    }

    /// Copy with one parameter changed. Accepts the model parameters
    /// `b`, `d`, `theta`, and `rate`, `gamma1`.
    pub fn with_param(&self, name: &str, value: f64) -> Result<Self> {
        let mut cfg = self.clone();
        match (name, &mut cfg.model) {
            ("b", ModelSpec::MfOu { b, .. } | ModelSpec::NonlinearMfOu { b, .. }) => *b = value,
            ("d", ModelSpec::MfOu { d, .. } | ModelSpec::NonlinearMfOu { d, .. }) => *d = value,
            ("theta", ModelSpec::MfVol { theta }) => *theta = value,
            ("rate", _) => cfg.rate = RateSpec::Fixed(value),
            ("gamma1", _) => cfg.gamma1 = value,
            (other, model) => {
                return Err(Error::Config(format!(
                    "cannot sweep {other:?} for model {}",
                    model.name()
                )))
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Flat TOML with every field explicit, re-parseable by
    /// [`from_toml_str`](Self::from_toml_str).
    pub fn to_toml(&self) -> String {
        let mut lines = vec![format!("model = \"{}\"", self.model.name())];
        match self.model {
            ModelSpec::MfOu { b, d } | ModelSpec::NonlinearMfOu { b, d } => {
                lines.push(format!("b = {}", fmt_num(b)));
                lines.push(format!("d = {}", fmt_num(d)));
            }
            ModelSpec::MfVol { theta } => lines.push(format!("theta = {}", fmt_num(theta))),
        }
        lines.push(format!("gamma1 = {}", fmt_num(self.gamma1)));
        lines.push(match self.rate {
            RateSpec::Fixed(r) => format!("rate = {}", fmt_num(r)),
            RateSpec::Auto(ScheduleMode::L2) => "rate = \"auto:l2\"".into(),
            RateSpec::Auto(ScheduleMode::AlmostSure) => "rate = \"auto:as\"".into(),
            RateSpec::Auto(ScheduleMode::FixedThird) => "rate = \"auto:third\"".into(),
        });
        lines.push(format!("steps = {}", self.steps));
        lines.push(format!("paths = {}", self.paths));
        lines.push(format!("seed = {}", self.seed));
        lines.push(format!("snapshots = {}", self.snapshot_count));
        lines.push(format!("snapshot_start = {}", self.snapshot_start));
        lines.push(match self.reference {
            ReferenceSpec::Auto => "reference = \"auto\"".into(),
            ReferenceSpec::Gaussian(g) => format!("reference = \"N({}, {})\"", fmt_num(g.mean), fmt_num(g.std)),
        });
        lines.push(format!("m_ref = {}", self.m_ref));
        lines.push(match &self.initial {
            InitialLaw::Uniform { lo, hi } => format!("x0 = \"uniform({}, {})\"", fmt_num(*lo), fmt_num(*hi)),
            InitialLaw::Dirac(x) => format!(
                "x0 = \"dirac({})\"",
                x.iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join(", ")
            ),
        });
        let (lo, hi) = self.resolved_fit_window();
        lines.push(format!("fit_lo = {lo}"));
        lines.push(format!("fit_hi = {hi}"));
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }
}

/// Applies one `key=value` override. Values are read as TOML (numbers,
/// quoted strings) and fall back to a bare string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
    let key = key.trim();
    let value = value.trim();
    let parsed = format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    table.insert(key.to_string(), parsed);
    Ok(())
}
