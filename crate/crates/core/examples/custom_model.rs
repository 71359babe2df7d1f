//! Plugging a user-defined model into the scheme: a Langevin drift in a
//! double-well potential pulled towards the running mean.

use mkv_sid::metrics::{IncrementalSorter, SortedQuantileMeasure};
use mkv_sid::models::FnModel;
use mkv_sid::scheme::{geometric_snapshots, make_schedule, run_path, InitialLaw, NoiseKey, Snapshot};

fn main() -> mkv_sid::Result<()> {
    let model = FnModel::new(
        |x: f64, law: &mkv_sid::MeasureView<'_>| -4.0 * x * (x * x - 1.0) - 0.5 * (x - law.mean[0]),
        |_, _| 0.8,
    );
    let schedule = make_schedule(0.1, 0.4, 100_000)?;
    let snapshots = geometric_snapshots(1_000, schedule.horizon(), 5);
    let mut sorter = IncrementalSorter::new();
    let mut last: Option<SortedQuantileMeasure> = None;
    let mut watch = |s: &Snapshot<'_>| {
        sorter.sync(s.measure).unwrap();
        let q = sorter.quantile_measure().unwrap();
        let drift = last.as_ref().map(|p| mkv_sid::metrics::w2_sorted(p, &q));
        println!("n = {:>6}  mean = {:+.4}  W2 to previous = {drift:.4?}", s.n, s.measure.mean()[0]);
        last = Some(q);
    };
    run_path(&model, &schedule, &InitialLaw::Dirac(vec![0.5]), NoiseKey::new(3, 0), &snapshots, &mut watch)?;
    Ok(())
}
