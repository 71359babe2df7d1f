use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("weight must be positive and finite, got {0}")]
    NonPositiveWeight(f64),

    #[error("measure has no atoms")]
    EmptyMeasure,

    #[error("operation supports only one-dimensional measures, got d = {0}")]
    UnsupportedDimension(usize),

    #[error("invalid step schedule: {0}")]
    Schedule(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The mean-field OU model at b = 1 has a continuum of stationary laws.
    #[error("infinitely many stationary distributions (parametrised by the initial mean); an explicit reference is required")]
    NonUniqueStationary,

    #[error("rate fit: {0}")]
    Fit(String),

    #[error("no guaranteed rate: theta* = {0} <= 0 (beta >= alpha)")]
    Untuned(f64),

    #[error("config error: {0}")]
    Config(String),

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
