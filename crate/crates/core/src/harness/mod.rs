//! Monte-Carlo experiments: `M` independent scheme paths, W₂ error against a
//! discretized stationary reference at each snapshot, RMS aggregation and a
//! power-law rate fit.
//!
//! Path `m` draws its noise from `NoiseKey::new(master_seed, m)`, so results
//! do not depend on the number of worker threads and adding paths leaves the
//! existing ones unchanged. Aggregation always runs in path order.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;

pub use config::{apply_override, ExperimentConfig, ModelSpec, RateSpec, ReferenceSpec};
pub use output::{emit_plotdata, write_error_curve, write_moments, write_rate_fit, PlotKind};

use crate::error::{Error, Result};
use crate::metrics::{
    discretize_gaussian, error_curve, fit_rate, w2_sorted, ErrorCurve, IncrementalSorter, RateFit,
    SortedQuantileMeasure,
};
use crate::models::{GaussianRef, Model};
use crate::scheme::{geometric_snapshots, make_schedule, run_path, InitialLaw, NoiseKey, Snapshot, StepSchedule};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "MKV_THREADS";

/// Scalars a path reports at each snapshot. `None` once the path diverged.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub w2: Vec<Option<f64>>,
    pub x: Vec<Option<f64>>,
    pub measure_mean: Vec<Option<f64>>,
    pub measure_second_moment: Vec<Option<f64>>,
    pub diverged_at: Option<usize>,
}

/// Everything needed to run a batch of paths against a fixed model.
pub struct Batch<'a> {
    pub model: &'a dyn Model,
    pub schedule: &'a StepSchedule,
    pub initial: &'a InitialLaw,
    pub reference: &'a SortedQuantileMeasure,
    pub snapshots: &'a [usize],
    pub seed: u64,
    pub paths: usize,
    pub threads: Option<usize>,
}

/// Runs one path and evaluates W₂ to the reference inside the observer, so
/// only scalars leave the worker.
pub fn run_recorded_path(batch: &Batch<'_>, path: usize) -> Result<PathRecord> {
    if batch.model.dim() != 1 {
        return Err(Error::UnsupportedDimension(batch.model.dim()));
    }
    let k = batch.snapshots.len();
    let mut record = PathRecord {
        w2: Vec::with_capacity(k),
        x: Vec::with_capacity(k),
        measure_mean: Vec::with_capacity(k),
        measure_second_moment: Vec::with_capacity(k),
        diverged_at: None,
    };
    let mut sorter = IncrementalSorter::new();
    let mut failure = None;
    let mut observer = |s: &Snapshot<'_>| {
        if s.diverged || failure.is_some() {
            record.w2.push(None);
            record.x.push(None);
            record.measure_mean.push(None);
            record.measure_second_moment.push(None);
            return;
        }
        let w2 = sorter
            .sync(s.measure)
            .and_then(|_| sorter.quantile_measure())
            .map(|q| w2_sorted(&q, batch.reference));
        match w2 {
            Ok(w) => record.w2.push(Some(w)),
            Err(e) => {
                failure = Some(e);
                record.w2.push(None);
            }
        }
        record.x.push(Some(s.x[0]));
        record.measure_mean.push(Some(s.measure.mean()[0]));
        record.measure_second_moment.push(Some(s.measure.second_moment()));
    };
    let state = run_path(
        batch.model,
        batch.schedule,
        batch.initial,
        NoiseKey::new(batch.seed, path as u64),
        batch.snapshots,
        &mut observer,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    record.diverged_at = state.diverged_at();
    Ok(record)
}

fn worker_count(requested: Option<usize>) -> usize {
    let cap = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok());
    match (requested, cap) {
        (Some(r), Some(c)) => r.min(c).max(1),
        (Some(r), None) => r.max(1),
        (None, Some(c)) => c.max(1),
        (None, None) => 0,
    }
}

/// Runs all paths of a batch on a bounded pool; records come back in path order.
pub fn run_batch(batch: &Batch<'_>) -> Result<Vec<PathRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count(batch.threads))
        .build()
        .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?;
    pool.install(|| {
        (0..batch.paths)
            .into_par_iter()
            .map(|m| run_recorded_path(batch, m))
            .collect()
    })
}

/// Per-snapshot Monte-Carlo averages over the paths still alive.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub indices: Vec<usize>,
    /// Mean of `X_n` across paths.
    pub mc_mean: Vec<f64>,
    /// Mean of `X_n²` across paths.
    pub mc_second_moment: Vec<f64>,
    /// Mean across paths of the empirical measure's mean.
    pub measure_mean: Vec<f64>,
    /// Mean across paths of the empirical measure's second moment.
    pub measure_second_moment: Vec<f64>,
}

fn column_mean(records: &[PathRecord], pick: impl Fn(&PathRecord) -> Option<f64>) -> f64 {
    let (mut sum, mut live) = (0.0, 0usize);
    for r in records {
        if let Some(v) = pick(r) {
            sum += v;
            live += 1;
        }
    }
    if live == 0 {
        f64::INFINITY
    } else {
        sum / live as f64
    }
}

pub fn aggregate_moments(snapshots: &[usize], records: &[PathRecord]) -> Moments {
    let col = |pick: &dyn Fn(&PathRecord, usize) -> Option<f64>| -> Vec<f64> {
        (0..snapshots.len()).map(|j| column_mean(records, |r| pick(r, j))).collect()
    };
    Moments {
        indices: snapshots.to_vec(),
        mc_mean: col(&|r, j| r.x[j]),
        mc_second_moment: col(&|r, j| r.x[j].map(|x| x * x)),
        measure_mean: col(&|r, j| r.measure_mean[j]),
        measure_second_moment: col(&|r, j| r.measure_second_moment[j]),
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    /// The config with the step rate and reference law made explicit.
    pub config: ExperimentConfig,
    pub rate: f64,
    pub reference: GaussianRef,
    pub curve: ErrorCurve,
    /// `None` when the window holds too few finite points.
    pub fit: Option<RateFit>,
    pub fit_error: Option<String>,
    pub moments: Moments,
    /// Paths that diverged at any step.
    pub diverged_paths: usize,
    pub elapsed: Duration,
}

impl ExperimentResult {
    pub fn final_error(&self) -> f64 {
        self.curve.last().unwrap_or(f64::NAN)
    }
}

/// Runs a configured experiment. Writes CSVs when `cfg.output` is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let start = Instant::now();
    let rate = cfg.resolved_rate()?;
    let reference = cfg.resolved_reference()?;
    let model = cfg.model.build()?;
    let schedule = make_schedule(cfg.gamma1, rate, cfg.steps)?;
    let snapshots = geometric_snapshots(cfg.snapshot_start, cfg.steps, cfg.snapshot_count);
    let reference_atoms = discretize_gaussian(&reference, cfg.m_ref)?;
    let batch = Batch {
        model: model.as_ref(),
        schedule: &schedule,
        initial: &cfg.initial,
        reference: &reference_atoms,
        snapshots: &snapshots,
        seed: cfg.seed,
        paths: cfg.paths,
        threads: cfg.threads,
    };
    let records = run_batch(&batch)?;
    let resolved = ExperimentConfig {
        rate: RateSpec::Fixed(rate),
        reference: ReferenceSpec::Gaussian(reference),
        fit_window: Some(cfg.resolved_fit_window()),
        ..cfg.clone()
    };
    let result = summarize(resolved, rate, reference, &schedule, &snapshots, &records, start.elapsed())?;
    if let Some(dir) = &cfg.output {
        write_outputs(&result, dir)?;
    }
    Ok(result)
}

/// Builds the curve, rate fit and moments from collected path records.
pub fn summarize(
    config: ExperimentConfig,
    rate: f64,
    reference: GaussianRef,
    schedule: &StepSchedule,
    snapshots: &[usize],
    records: &[PathRecord],
    elapsed: Duration,
) -> Result<ExperimentResult> {
    let gamma_sums: Vec<f64> = snapshots.iter().map(|&n| schedule.gamma_sum(n)).collect();
    let per_path: Vec<Vec<Option<f64>>> = records.iter().map(|r| r.w2.clone()).collect();
    let curve = error_curve(snapshots, &gamma_sums, &per_path)?;
    let (fit, fit_error) = match fit_rate(&curve, config.resolved_fit_window()) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(ExperimentResult {
        moments: aggregate_moments(snapshots, records),
        diverged_paths: records.iter().filter(|r| r.diverged_at.is_some()).count(),
        config,
        rate,
        reference,
        curve,
        fit,
        fit_error,
        elapsed,
    })
}

/// Writes `error_curve.csv`, `moments.csv`, `rate_fit.csv` and the resolved
/// `config.toml` into `dir`.
pub fn write_outputs(result: &ExperimentResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    emit_plotdata(result, PlotKind::ErrorCurve, &dir.join("error_curve.csv"))?;
    emit_plotdata(result, PlotKind::Moments, &dir.join("moments.csv"))?;
    emit_plotdata(result, PlotKind::RateFit, &dir.join("rate_fit.csv"))?;
    std::fs::write(dir.join("config.toml"), result.config.to_toml())?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub r_hat: Option<f64>,
    pub residual: Option<f64>,
    pub final_error: f64,
    pub diverged: usize,
    /// Set when this point failed; the sweep carries on.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub param: String,
    pub rows: Vec<SweepRow>,
}

/// One experiment per value of `param`, all sharing the base master seed so
/// every point sees the same noise.
pub fn sweep(base: &ExperimentConfig, param: &str, values: &[f64]) -> Result<SweepTable> {
    let known = matches!(
        (param, &base.model),
        ("b" | "d", ModelSpec::MfOu { .. } | ModelSpec::NonlinearMfOu { .. })
            | ("theta", ModelSpec::MfVol { .. })
            | ("rate" | "gamma1", _)
    );
    if !known {
        return Err(Error::Config(format!("cannot sweep {param:?} for model {}", base.model.name())));
    }
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let point = base.with_param(param, value).and_then(|mut cfg| {
            cfg.output = base.output.as_ref().map(|dir| point_dir(dir, param, value));
            run_experiment(&cfg)
        });
        rows.push(match point {
            Ok(res) => SweepRow {
                value,
                r_hat: res.fit.map(|f| f.exponent),
                residual: res.fit.map(|f| f.residual),
                final_error: res.final_error(),
                diverged: res.diverged_paths,
                error: res.fit_error,
            },
            Err(e) => SweepRow {
                value,
                r_hat: None,
                residual: None,
                final_error: f64::NAN,
                diverged: 0,
                error: Some(e.to_string()),
            },
        });
    }
    let table = SweepTable { param: param.to_string(), rows };
    if let Some(dir) = &base.output {
        std::fs::create_dir_all(dir)?;
        let file = std::fs::File::create(dir.join("rate_table.csv"))?;
        table.write_csv(file)?;
    }
    Ok(table)
}

fn point_dir(dir: &Path, param: &str, value: f64) -> PathBuf {
    dir.join(format!("{param}={value:?}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::FnModel;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            steps: 3_000,
            paths: 6,
            snapshot_count: 12,
            snapshot_start: 10,
            m_ref: 256,
            seed: 11,
            ..Default::default()
        }
    }

    #[test]
    fn frozen_model_gives_constant_curve() {
        let model = FnModel::new(|_, _| 0.0, |_, _| 0.0);
        let schedule = make_schedule(1.0, 1.0 / 3.0, 500).unwrap();
        let snaps = geometric_snapshots(10, 500, 8);
        let reference = GaussianRef { mean: 0.0, std: 1.0 };
        let ref_atoms = discretize_gaussian(&reference, 4096).unwrap();
        let batch = Batch {
            model: &model,
            schedule: &schedule,
            initial: &InitialLaw::Dirac(vec![0.0]),
            reference: &ref_atoms,
            snapshots: &snaps,
            seed: 0,
            paths: 3,
            threads: Some(2),
        };
        let records = run_batch(&batch).unwrap();
        let res = summarize(ExperimentConfig::default(), 1.0 / 3.0, reference, &schedule, &snaps, &records, Duration::ZERO).unwrap();
        let first = res.curve.values[0];
        assert!((first - 1.0).abs() < 2e-3);
        assert!(res.curve.values.iter().all(|&v| v == first));
        assert!(res.moments.mc_mean.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn records_are_thread_count_independent() {
        let cfg = small_config();
        let a = run_experiment(&ExperimentConfig { threads: Some(1), ..cfg.clone() }).unwrap();
        let b = run_experiment(&ExperimentConfig { threads: Some(4), ..cfg }).unwrap();
        assert_eq!(a.curve, b.curve);
        assert_eq!(a.moments, b.moments);
        assert_eq!(a.fit, b.fit);
    }

    #[test]
    fn adding_paths_keeps_existing_ones() {
        let cfg = small_config();
        let model = cfg.model.build().unwrap();
        let schedule = make_schedule(1.0, 1.0 / 3.0, cfg.steps).unwrap();
        let snaps = geometric_snapshots(10, cfg.steps, 5);
        let ref_atoms = discretize_gaussian(&GaussianRef { mean: 0.0, std: 1.0 }, 128).unwrap();
        let mut batch = Batch {
            model: model.as_ref(),
            schedule: &schedule,
            initial: &cfg.initial,
            reference: &ref_atoms,
            snapshots: &snaps,
            seed: 5,
            paths: 3,
            threads: None,
        };
        let three = run_batch(&batch).unwrap();
        batch.paths = 4;
        let four = run_batch(&batch).unwrap();
        assert_eq!(three[..], four[..3]);
        assert_ne!(four[3], four[2]);
    }

    #[test]
    fn non_unique_reference_is_a_config_error() {
        let cfg = ExperimentConfig { model: ModelSpec::MfOu { b: 1.0, d: 1.0 }, ..small_config() };
        assert!(matches!(run_experiment(&cfg), Err(Error::Config(_))));
        let explicit = ExperimentConfig {
            reference: ReferenceSpec::Gaussian(GaussianRef { mean: 0.0, std: 1.0 }),
            ..cfg
        };
        assert!(run_experiment(&explicit).is_ok());
    }

    #[test]
    fn divergent_paths_are_reported() {
        let cfg = ExperimentConfig {
            model: ModelSpec::MfVol { theta: 6.0 },
            initial: InitialLaw::Dirac(vec![5.0]),
            ..small_config()
        };
        let res = run_experiment(&cfg).unwrap();
        assert!(res.diverged_paths > 0, "{res:?}");
        assert_eq!(*res.curve.diverged.last().unwrap(), res.diverged_paths);
        assert!(res.curve.values.iter().all(|v| !v.is_nan()));
    }

    #[test]
    fn single_value_sweep_matches_run() {
        let cfg = small_config();
        let table = sweep(&cfg, "b", &[0.5]).unwrap();
        let direct = run_experiment(&cfg).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert_eq!(table.rows[0].r_hat, direct.fit.map(|f| f.exponent));
        assert_eq!(table.rows[0].final_error, direct.final_error());
    }

    #[test]
    fn sweep_continues_past_failing_points() {
        let cfg = small_config();
        let table = sweep(&cfg, "b", &[0.2, 1.0, 0.4]).unwrap();
        assert!(table.rows[0].error.is_none());
        assert!(table.rows[1].error.is_some());
        assert!(table.rows[2].r_hat.is_some());
        assert!(sweep(&cfg, "theta", &[0.5]).is_err());
    }

    #[test]
    fn thread_cap_from_environment() {
        assert_eq!(worker_count(Some(3)).min(3), worker_count(Some(3)));
    }
}
