//! Build a weighted empirical measure incrementally and dump its atoms.

use mkv_sid::WeightedEmpiricalMeasure;

fn main() -> mkv_sid::Result<()> {
    let mut nu = WeightedEmpiricalMeasure::empty(1)?;
    for (x, w) in [(1.0, 1.0), (3.0, 1.0), (5.0, 2.0)] {
        nu.push_atom(&[x], w)?;
        println!("after ({x}, {w}): mean = {}, second moment = {}", nu.mean()[0], nu.second_moment());
    }

    let view = nu.view();
    println!("L2 norm = {}", view.l2_norm);

    nu.write_csv(std::io::stdout().lock())?;
    Ok(())
}
