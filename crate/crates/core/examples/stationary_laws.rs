//! Stationary laws of the benchmark models, including the two invariant
//! laws of the nonlinear OU model once |b| > 1.

use mkv_sid::models::{nonlinear_fixed_points, stationary_mf_ou, stationary_mf_vol, stationary_nonlinear};

fn main() -> mkv_sid::Result<()> {
    for b in [0.5, 1.5] {
        let s = stationary_mf_ou(b, 1.0)?;
        println!("mf_ou b={b}: {:?} (unstable: {})", s.laws, s.unstable);
    }
    if let Err(e) = stationary_mf_ou(1.0, 1.0) {
        println!("mf_ou b=1: {e}");
    }

    for b in [0.5, 2.0, -2.0] {
        let s = stationary_nonlinear(b, 1.0)?;
        println!("nonlinear b={b}:");
        for law in &s.laws {
            println!("  N({:.6}, {:.6})", law.mean, law.std);
        }
        for (m, y) in nonlinear_fixed_points(b, 1.0)? {
            println!("  root: mean {m:.15}, second moment {y:.15}");
        }
    }

    for theta in [0.5, 1.0, 3.0] {
        println!("mf_vol theta={theta}: std {}", stationary_mf_vol(theta)?.std);
    }
    Ok(())
}
