//! One path of the decreasing-step scheme for the mean-field OU model,
//! watching the empirical measure's moments settle.

use mkv_sid::models::{mf_ou, stationary_mf_ou};
use mkv_sid::scheme::{geometric_snapshots, make_schedule, run_path, InitialLaw, NoiseKey, Snapshot};

fn main() -> mkv_sid::Result<()> {
    let b = 0.5;
    let model = mf_ou(b, 1.0)?;
    let target = stationary_mf_ou(b, 1.0)?.laws[0];
    let schedule = make_schedule(1.0, 1.0 / 3.0, 200_000)?;
    let snapshots = geometric_snapshots(10, schedule.horizon(), 12);

    println!("target: mean {}, second moment {}", target.mean, target.second_moment());
    println!("{:>8} {:>12} {:>12} {:>12}", "n", "Gamma_n", "mean", "2nd moment");
    let mut print = |s: &Snapshot<'_>| {
        println!(
            "{:>8} {:>12.3} {:>12.5} {:>12.5}",
            s.n,
            s.gamma_sum,
            s.measure.mean()[0],
            s.measure.second_moment()
        );
    };
    let state = run_path(&model, &schedule, &InitialLaw::default(), NoiseKey::new(42, 0), &snapshots, &mut print)?;
    println!("final X = {:.5}, diverged: {}", state.x()[0], state.diverged());
    Ok(())
}
