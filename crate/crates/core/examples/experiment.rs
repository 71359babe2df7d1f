//! A configured Monte-Carlo experiment: error curve, rate fit, CSV output.
//!
//! cargo run --release --example experiment -- [output-dir]

use mkv_sid::harness::{run_experiment, ExperimentConfig};

const CONFIG: &str = r#"
model = "mf_ou"
b = 0.5
rate = "1/3"
steps = 100000
paths = 100
seed = 7
"#;

fn main() -> mkv_sid::Result<()> {
    let mut cfg = ExperimentConfig::from_toml_str(CONFIG)?;
    cfg.output = std::env::args().nth(1).map(Into::into);
    let res = run_experiment(&cfg)?;

    for (n, e) in res.curve.indices.iter().zip(&res.curve.values).step_by(3) {
        println!("n = {n:>7}  E_n = {e:.5}");
    }
    match res.fit {
        Some(f) => println!("fitted rate {:.4} over [{}, {}]", f.exponent, f.window.0, f.window.1),
        None => println!("no fit: {}", res.fit_error.unwrap_or_default()),
    }
    println!("{} paths diverged, {:.2?}", res.diverged_paths, res.elapsed);
    print!("{}", res.config.to_toml());
    Ok(())
}
