//! CSV emitters. Reals are written with 17 significant digits; `inf` and
//! `nan` mark diverged or failed entries. Column order is fixed.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{ExperimentResult, SweepTable};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// `n,Gamma_n,E_n,diverged_count`
    ErrorCurve,
    /// `n,mc_mean,mc_second_moment`
    Moments,
    /// `r_hat,intercept,n_lo,n_hi,residual`
    RateFit,
}

pub(crate) fn real(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

pub fn emit_plotdata(result: &ExperimentResult, kind: PlotKind, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    match kind {
        PlotKind::ErrorCurve => write_error_curve(result, &mut out)?,
        PlotKind::Moments => write_moments(result, &mut out)?,
        PlotKind::RateFit => write_rate_fit(result, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

pub fn write_error_curve<W: Write>(result: &ExperimentResult, mut out: W) -> Result<()> {
    let c = &result.curve;
    writeln!(out, "n,Gamma_n,E_n,diverged_count")?;
    for j in 0..c.indices.len() {
        writeln!(out, "{},{},{},{}", c.indices[j], real(c.gamma_sums[j]), real(c.values[j]), c.diverged[j])?;
    }
    Ok(())
}

pub fn write_moments<W: Write>(result: &ExperimentResult, mut out: W) -> Result<()> {
    let m = &result.moments;
    writeln!(out, "n,mc_mean,mc_second_moment")?;
    for j in 0..m.indices.len() {
        writeln!(out, "{},{},{}", m.indices[j], real(m.mc_mean[j]), real(m.mc_second_moment[j]))?;
    }
    Ok(())
}

/// One row; all-`nan` except the window when the fit failed.
pub fn write_rate_fit<W: Write>(result: &ExperimentResult, mut out: W) -> Result<()> {
    writeln!(out, "r_hat,intercept,n_lo,n_hi,residual")?;
    let (lo, hi) = result.config.resolved_fit_window();
    match result.fit {
        Some(f) => writeln!(out, "{},{},{},{},{}", real(f.exponent), real(f.intercept), lo, hi, real(f.residual))?,
        None => writeln!(out, "nan,nan,{lo},{hi},nan")?,
    }
    Ok(())
}

impl SweepTable {
    /// `param,r_hat,residual,final_E,diverged`; `param` holds the swept value.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut out = BufWriter::new(out);
        writeln!(out, "param,r_hat,residual,final_E,diverged")?;
        for row in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                real(row.value),
                real(row.r_hat.unwrap_or(f64::NAN)),
                real(row.residual.unwrap_or(f64::NAN)),
                real(row.final_error),
                row.diverged
            )?;
        }
        out.flush()?;
        Ok(())
    }
}
