use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mkv_sid::harness::{run_experiment, sweep, ExperimentConfig};
use mkv_sid::metrics::w2_discrete;
use mkv_sid::tuning::{confluence_params, recommend_schedule, ScheduleMode};
use mkv_sid::{Error, WeightedEmpiricalMeasure};

/// Stochastic-approximation simulation of McKean–Vlasov invariant laws.
///
/// Worker threads are capped by the MKV_THREADS environment variable.
#[derive(Parser)]
#[command(name = "mkv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write error_curve.csv, moments.csv, rate_fit.csv.
    Simulate {
        config: PathBuf,
        /// Output directory (overrides `output` in the config).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// `key=value` overrides applied on top of the config file.
        #[arg(short = 's', long = "set")]
        set: Vec<String>,
    },
    /// Run one experiment per value of a parameter and write rate_table.csv.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        param: String,
        /// Comma-separated values, e.g. `0.1,0.5,0.9`.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(short = 's', long = "set")]
        set: Vec<String>,
    },
    /// Step-rate calculator from contraction and Lipschitz constants.
    Tune {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        lb: f64,
        #[arg(long)]
        lsigma: f64,
        #[arg(long, default_value = "l2")]
        mode: ScheduleMode,
    },
    /// W₂ distance between two atom CSVs (`k,x,weight`).
    W2 { file_a: PathBuf, file_b: PathBuf },
}

fn load(config: &PathBuf, set: &[String], output: Option<PathBuf>) -> Result<ExperimentConfig, Error> {
    let text = std::fs::read_to_string(config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", config.display())))?;
    let mut cfg = ExperimentConfig::from_str_with_overrides(&text, set)?;
    if output.is_some() {
        cfg.output = output;
    }
    Ok(cfg)
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        "inf".into()
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate { config, output, set } => {
            let cfg = load(&config, &set, output)?;
            let res = run_experiment(&cfg)?;
            println!("model          {}", cfg.model.name());
            println!("rate           {}", res.rate);
            println!("reference      N({}, {})", res.reference.mean, res.reference.std);
            println!("final_E        {}", num(res.final_error()));
            match (&res.fit, &res.fit_error) {
                (Some(f), _) => println!("r_hat          {} (residual {})", f.exponent, f.residual),
                (None, Some(e)) => println!("r_hat          none ({e})"),
                _ => {}
            }
            println!("diverged       {}/{}", res.diverged_paths, cfg.paths);
            println!("elapsed        {:.2?}", res.elapsed);
            if let Some(dir) = &cfg.output {
                println!("output         {}", dir.display());
            }
        }
        Command::Sweep { config, param, values, output, set } => {
            let cfg = load(&config, &set, output)?;
            let table = sweep(&cfg, &param, &values)?;
            table.write_csv(std::io::stdout().lock())?;
            for row in table.rows.iter().filter(|r| r.error.is_some()) {
                eprintln!("{param}={}: {}", row.value, row.error.as_deref().unwrap_or_default());
            }
        }
        Command::Tune { a, lb, lsigma, mode } => {
            let p = confluence_params(a, lb, lsigma).map_err(|e| Error::Config(e.to_string()))?;
            let rec = recommend_schedule(&p, mode).ok();
            let opt = |v: Option<f64>| v.map(num).unwrap_or_else(|| "none".into());
            let rows = [
                ("a", num(p.a)),
                ("l_b", num(p.l_b)),
                ("l_sigma", num(p.l_sigma)),
                ("eps_star", num(p.eps_star)),
                ("alpha", num(p.alpha)),
                ("beta", num(p.beta)),
                ("theta_star", num(p.theta_star)),
                ("r_star", opt(p.r_star)),
                ("r_as", opt(p.r_as)),
                ("guaranteed", p.guaranteed().to_string()),
                ("recommended_r", opt(rec)),
            ];
            for (k, v) in &rows {
                println!("{k:<14} {v}");
            }
            println!();
            println!("{}", rows.iter().map(|r| r.0).collect::<Vec<_>>().join(","));
            println!("{}", rows.iter().map(|r| r.1.as_str()).collect::<Vec<_>>().join(","));
        }
        Command::W2 { file_a, file_b } => {
            let a = WeightedEmpiricalMeasure::read_csv_file(&file_a)?;
            let b = WeightedEmpiricalMeasure::read_csv_file(&file_b)?;
            println!("{:.16e}", w2_discrete(&a, &b)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
