//! Step-rate recommendations from Lipschitz data, cross-checked by sampling
//! the confluence inequality.

use mkv_sid::models::mf_ou;
use mkv_sid::tuning::{check_confluence, check_mean_reversion, confluence_params, recommend_schedule, ScheduleMode};

fn main() -> mkv_sid::Result<()> {
    println!("{:>4} {:>8} {:>8} {:>8} {:>8}", "b", "theta*", "r*", "r_as", "alpha");
    for b in [0.1, 0.3, 0.5, 0.7, 0.9, 1.2] {
        let p = confluence_params(1.0, b, 0.0)?;
        let show = |r: Option<f64>| r.map_or("none".to_string(), |r| format!("{r:.4}"));
        println!("{b:>4} {:>8.4} {:>8} {:>8} {:>8.4}", p.theta_star, show(p.r_star), show(p.r_as), p.alpha);
    }

    let p = confluence_params(1.0, 0.5, 0.0)?;
    println!("a.s. rate: {}", recommend_schedule(&p, ScheduleMode::AlmostSure)?);

    let model = mf_ou(0.5, 1.0)?;
    let ok = check_confluence(&model, p.alpha, p.beta, 1.0, 10_000, 1)?;
    let bad = check_confluence(&model, 5.0 * p.alpha, p.beta, 1.0, 10_000, 1)?;
    println!("confluence: {ok:?}");
    println!("confluence, alpha x5: {bad:?}");

    let free = mf_ou(0.0, 1.0)?;
    println!("mean reversion K=2: {:?}", check_mean_reversion(&free, 1.0, 2.0, 2.0, 0.0, 10_000, 2)?);
    println!("mean reversion K=0: {:?}", check_mean_reversion(&free, 1.0, 0.0, 2.0, 0.0, 10_000, 2)?);
    Ok(())
}
