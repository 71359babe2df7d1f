//! Fitted rate as a function of the interaction strength b, with common
//! random numbers across points.

use mkv_sid::harness::{sweep, ExperimentConfig, ModelSpec, RateSpec};

fn main() -> mkv_sid::Result<()> {
    let base = ExperimentConfig {
        model: ModelSpec::MfOu { b: 0.0, d: 1.0 },
        rate: RateSpec::Fixed(1.0 / 3.0),
        steps: 50_000,
        paths: 100,
        ..Default::default()
    };
    let table = sweep(&base, "b", &[0.0, 0.3, 0.6, 0.9, 1.0])?;
    for row in &table.rows {
        match (&row.error, row.r_hat) {
            (None, Some(r)) => println!("b = {:<4} r_hat = {r:.4}  E_N = {:.4}", row.value, row.final_error),
            (e, _) => println!("b = {:<4} failed: {}", row.value, e.as_deref().unwrap_or("?")),
        }
    }
    table.write_csv(std::io::stdout().lock())
}
