use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("time {t} s is outside the series grid [{start}, {end})")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),

    #[error("leaf `{leaf}`: supply/return difference {delta_t:.3} K too small for a {demand:.1} W demand")]
    DegenerateDeltaT {
        leaf: String,
        delta_t: f64,
        demand: f64,
    },

    #[error("non-finite state in {component} at t = {t} s")]
    NonFiniteState { component: String, t: f64 },

    #[error("invalid heat-pump lift: sink {sink} degC must exceed source {source_temp} degC")]
    InvalidLift { source_temp: f64, sink: f64 },

    #[error("unit mismatch connecting {from} [{from_unit}] to {to} [{to_unit}]")]
    UnitMismatch {
        from: String,
        from_unit: String,
        to: String,
        to_unit: String,
    },

    #[error("input port {0} is already bound")]
    AlreadyBound(String),

    #[error("unknown port {0}")]
    UnknownPort(String),

    #[error("co-simulation did not converge at t = {t} s after {iterations} iterations (largest residual {residual:.3e} on {port})")]
    NonConvergence {
        t: f64,
        iterations: usize,
        residual: f64,
        port: String,
    },

    #[error("useful heat is zero; heat production cost undefined")]
    ZeroHeat,

    #[error("profile grid mismatch: {0}")]
    GridMismatch(String),

    #[error("negative demand {value} W in column `{column}` at row {row}")]
    NegativeDemand {
        column: String,
        row: usize,
        value: f64,
    },

    #[error("weather does not cover the requested grid: {0}")]
    WeatherGap(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("scenario error: {0}")]
    Schema(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code for the CLI contract: 2 usage/schema, 3 validation,
    /// 4 convergence, 5 numeric.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Validation(_) => 3,
            Error::NonConvergence { .. } => 4,
            Error::NonFiniteState { .. } => 5,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl AsRef<std::path::Path>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.as_ref().display().to_string(),
            line,
            msg: msg.into(),
        }
    }
}

pub(crate) fn ensure_finite(component: &str, t: f64, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteState {
            component: component.to_string(),
            t,
        })
    }
}
