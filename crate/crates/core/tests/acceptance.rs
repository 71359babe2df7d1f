//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Tolerances are fixed here and never relaxed.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mkv_sid::harness::{run_experiment, sweep, ExperimentConfig, ModelSpec, RateSpec, ReferenceSpec};
use mkv_sid::metrics::w2_discrete;
use mkv_sid::models::{mf_ou, nonlinear_fixed_points, stationary_mf_vol, stationary_nonlinear, GaussianRef};
use mkv_sid::tuning::{check_confluence, confluence_params};
use mkv_sid::WeightedEmpiricalMeasure;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

fn w2_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let perms: Vec<_> = (0..=6).map(permutations).collect();
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let k = rng.random_range(1..=6);
        let xs: Vec<f64> = (0..k).map(|_| rng.random_range(-5.0..5.0)).collect();
        let ys: Vec<f64> = (0..k).map(|_| rng.random_range(-5.0..5.0)).collect();
        let brute = perms[k]
            .iter()
            .map(|p| p.iter().enumerate().map(|(i, &j)| (xs[i] - ys[j]).powi(2)).sum::<f64>() / k as f64)
            .fold(f64::INFINITY, f64::min)
            .sqrt();
        let fast = w2_discrete(
            &WeightedEmpiricalMeasure::uniform(&xs).unwrap(),
            &WeightedEmpiricalMeasure::uniform(&ys).unwrap(),
        )
        .unwrap();
        worst = worst.max((fast - brute).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst <= 1e-12 && secs < 1.0, format!("max |diff| = {worst:.2e}, {secs:.3} s"))
}

fn moment_consistency() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let origin = WeightedEmpiricalMeasure::from_atoms(&[(0.0, 1.0)]).unwrap();
    let (mut worst_mean, mut worst_second, mut worst_w2) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let mut m = WeightedEmpiricalMeasure::empty(1).unwrap();
        let center = rng.random_range(-3.0..3.0);
        let mut atoms = Vec::with_capacity(10_000);
        for _ in 0..10_000 {
            let x: f64 = center + rng.random_range(-2.0..2.0);
            let w: f64 = rng.random_range(0.01..1.0);
            m.push_atom(&[x], w).unwrap();
            atoms.push((x, w));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        let mean = atoms.iter().map(|a| a.0 * a.1).sum::<f64>() / total;
        let second = atoms.iter().map(|a| a.0 * a.0 * a.1).sum::<f64>() / total;
        let scale = second.sqrt();
        worst_mean = worst_mean.max((m.mean()[0] - mean).abs() / scale.max(mean.abs()));
        worst_second = worst_second.max((m.second_moment() - second).abs() / second);
        let w2 = w2_discrete(&m, &origin).unwrap();
        worst_w2 = worst_w2.max((m.second_moment() - w2 * w2).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        worst_mean <= 1e-12 && worst_second <= 1e-12 && worst_w2 <= 1e-10 && secs < 5.0,
        format!("mean {worst_mean:.1e}, second {worst_second:.1e}, vs W2^2 {worst_w2:.1e}, {secs:.2} s"),
    )
}

fn calculator() -> Outcome {
    let mut worst = 0.0f64;
    for i in 1..=9 {
        let b = i as f64 / 10.0;
        let p = confluence_params(1.0, b, 0.0).map_err(|e| e.to_string())?;
        let r = p.r_star.ok_or("no rate")?;
        worst = worst.max((p.theta_star - (1.0 - b * b)).abs());
        worst = worst.max((r - (1.0 - b * b) / (2.0 - b * b)).abs());
    }
    let mut worst_limit = 0.0f64;
    for &(a, ls) in &[(1.0, 0.5), (1.0, 1.0), (0.5, 0.3), (2.0, 1.2)] {
        let near = confluence_params(a, 1e-16, ls).map_err(|e| e.to_string())?;
        let exact = confluence_params(a, 0.0, ls).map_err(|e| e.to_string())?;
        worst_limit = worst_limit
            .max((near.alpha - 2.0 * a).abs())
            .max((near.beta - ls * ls).abs())
            .max((exact.alpha - 2.0 * a).abs())
            .max((exact.beta - ls * ls).abs());
    }
    ensure(
        worst <= 1e-12 && worst_limit <= 1e-6,
        format!("case 1 max err {worst:.1e}, L_b -> 0 max err {worst_limit:.1e}"),
    )
}

fn stationary_references() -> Outcome {
    let s = stationary_nonlinear(2.0, 1.0).map_err(|e| e.to_string())?;
    let means: Vec<f64> = s.laws.iter().map(|g| g.mean).collect();
    let exact = means.len() == 2 && means[0] == 0.0 && means[1] == 4.0 / 3.0;
    let roots = nonlinear_fixed_points(2.0, 1.0).map_err(|e| e.to_string())?;
    let mut root_err = 0.0f64;
    for law in &s.laws {
        let closest = roots.iter().map(|(m, _)| (m - law.mean).abs()).fold(f64::INFINITY, f64::min);
        root_err = root_err.max(closest);
    }
    let vol = stationary_mf_vol(0.5).map_err(|e| e.to_string())?;
    ensure(
        exact && roots.len() == 2 && root_err <= 1e-12 && vol.std == 1.0 / 3.0 && vol.mean == 0.0,
        format!("means {means:?}, numeric root err {root_err:.1e}, mf_vol std {}", vol.std),
    )
}

fn base_config() -> ExperimentConfig {
    ExperimentConfig {
        model: ModelSpec::MfOu { b: 0.0, d: 1.0 },
        gamma1: 1.0,
        rate: RateSpec::Fixed(1.0 / 3.0),
        steps: 100_000,
        paths: 100,
        seed: 20_240_601,
        reference: ReferenceSpec::Gaussian(GaussianRef { mean: 0.0, std: 1.0 }),
        fit_window: Some((10_000, 100_000)),
        ..ExperimentConfig::default()
    }
}

fn plain_ou_rate() -> Outcome {
    let res = run_experiment(&base_config()).map_err(|e| e.to_string())?;
    let fit = res.fit.ok_or("no fit")?;
    ensure(
        (0.25..=0.42).contains(&fit.exponent),
        format!("r_hat = {:.4} in [0.25, 0.42], {:.1} s", fit.exponent, res.elapsed.as_secs_f64()),
    )
}

fn mean_field_slowdown() -> Outcome {
    let table = sweep(&base_config(), "b", &[0.1, 0.9]).map_err(|e| e.to_string())?;
    let r = |i: usize| table.rows[i].r_hat.ok_or_else(|| format!("no fit at b = {}", table.rows[i].value));
    let (lo, hi) = (r(0)?, r(1)?);
    ensure(hi <= lo - 0.05, format!("r_hat(0.1) = {lo:.4}, r_hat(0.9) = {hi:.4}"))
}

fn mf_vol_stationarity() -> Outcome {
    let cfg = ExperimentConfig {
        model: ModelSpec::MfVol { theta: 0.5 },
        reference: ReferenceSpec::Auto,
        ..base_config()
    };
    let res = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let target = 1.0 / 9.0;
    let second = *res.moments.measure_second_moment.last().ok_or("no snapshots")?;
    let rel = (second - target).abs() / target;
    let e_n = res.curve.value_at_or_before(cfg.steps).ok_or("no E_N")?;
    let e_n10 = res.curve.value_at_or_before(cfg.steps / 10).ok_or("no E_N/10")?;
    ensure(
        rel <= 0.15 && e_n < e_n10,
        format!("second moment {second:.5} (rel err {rel:.3}), E_N = {e_n:.4} < E_N/10 = {e_n10:.4}"),
    )
}

fn nonlinear_rate() -> Outcome {
    let cfg = ExperimentConfig { model: ModelSpec::NonlinearMfOu { b: 0.5, d: 1.0 }, ..base_config() };
    let res = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let fit = res.fit.ok_or("no fit")?;
    ensure((0.2..=0.45).contains(&fit.exponent), format!("r_hat = {:.4} in [0.2, 0.45]", fit.exponent))
}

fn checkers() -> Outcome {
    let start = Instant::now();
    let model = mf_ou(0.5, 1.0).map_err(|e| e.to_string())?;
    let p = confluence_params(1.0, 0.5, 0.0).map_err(|e| e.to_string())?;
    let ok = check_confluence(&model, p.alpha, p.beta, 1.0, 10_000, 99).map_err(|e| e.to_string())?;
    let bad = check_confluence(&model, 5.0 * p.alpha, p.beta, 1.0, 10_000, 99).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    ensure(
        ok.violations == 0 && bad.violations >= 1 && secs < 10.0,
        format!("{} violations calibrated, {} with 5x alpha, {secs:.2} s", ok.violations, bad.violations),
    )
}

fn read_outputs(dir: &Path) -> Vec<Vec<u8>> {
    ["error_curve.csv", "moments.csv", "rate_fit.csv"]
        .iter()
        .map(|f| std::fs::read(dir.join(f)).unwrap_or_default())
        .collect()
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs = [("a", Some(1)), ("b", Some(1)), ("c", Some(4))];
    let mut outputs = Vec::new();
    for (name, threads) in runs {
        let cfg = ExperimentConfig { threads, output: Some(tmp.path().join(name)), ..base_config() };
        run_experiment(&cfg).map_err(|e| e.to_string())?;
        outputs.push(read_outputs(&tmp.path().join(name)));
    }
    let nonempty = outputs[0].iter().all(|b| !b.is_empty());
    ensure(
        nonempty && outputs[0] == outputs[1] && outputs[0] == outputs[2],
        format!("rerun identical: {}, 1 vs 4 threads identical: {}", outputs[0] == outputs[1], outputs[0] == outputs[2]),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("W2 oracle equivalence", w2_oracle),
        ("moment consistency", moment_consistency),
        ("step-rate calculator", calculator),
        ("stationary references", stationary_references),
        ("plain OU rate", plain_ou_rate),
        ("mean-field slowdown", mean_field_slowdown),
        ("MF-volatility stationarity", mf_vol_stationarity),
        ("nonlinear OU rate", nonlinear_rate),
        ("assumption checkers", checkers),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
