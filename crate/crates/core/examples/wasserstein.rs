//! Exact 1-D W2 between discrete measures, and to a discretized Gaussian.

use mkv_sid::metrics::{discretize_gaussian, w2_discrete, w2_to_gaussian, DEFAULT_M_REF};
use mkv_sid::{GaussianRef, WeightedEmpiricalMeasure};

fn main() -> mkv_sid::Result<()> {
    let a = WeightedEmpiricalMeasure::uniform(&[0.0, 1.0])?;
    let b = WeightedEmpiricalMeasure::uniform(&[2.0, 3.0])?;
    println!("W2(U{{0,1}}, U{{2,3}}) = {}", w2_discrete(&a, &b)?);

    let c = WeightedEmpiricalMeasure::from_atoms(&[(0.0, 3.0), (1.0, 1.0)])?;
    println!("W2(3/4 d0 + 1/4 d1, U{{0,1}}) = {}", w2_discrete(&c, &a)?);

    let std_normal = GaussianRef::new(0.0, 1.0)?;
    let reference = discretize_gaussian(&std_normal, DEFAULT_M_REF)?;
    println!("reference: {} atoms, outermost at {:.4}", reference.len(), reference.positions()[0]);

    let origin = WeightedEmpiricalMeasure::new(&[0.0])?;
    println!("W2(d0, N(0,1)) ~ {}", w2_to_gaussian(&origin, &std_normal, DEFAULT_M_REF)?);

    let shifted = GaussianRef::new(0.5, 1.0)?;
    let sample = WeightedEmpiricalMeasure::uniform(reference.positions())?;
    println!("W2(N(0,1), N(0.5,1)) ~ {}", w2_to_gaussian(&sample, &shifted, DEFAULT_M_REF)?);
    Ok(())
}
