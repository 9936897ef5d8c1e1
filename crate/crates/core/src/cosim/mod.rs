//! Block-based co-simulation: blocks with typed scalar ports, a coupling
//! graph, a fixed-step master with optional fixed-point iteration, and the
//! run archive.

mod archive;
mod master;

pub use archive::{Archive, ColumnMeta, Recorder};
pub use master::{CouplingGraph, MasterConfig, NonConvergencePolicy, RunStats, Scheme, StepReport};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Unit {
    Celsius,
    KgPerS,
    Watt,
    WattPerM2,
    Dimensionless,
}

impl Unit {
    pub fn symbol(self) -> &'static str {
        match self {
            Unit::Celsius => "degC",
            Unit::KgPerS => "kg/s",
            Unit::Watt => "W",
            Unit::WattPerM2 => "W/m2",
            Unit::Dimensionless => "1",
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "degC" => Unit::Celsius,
            "kg/s" => Unit::KgPerS,
            "W" => Unit::Watt,
            "W/m2" => Unit::WattPerM2,
            "1" => Unit::Dimensionless,
            other => return Err(Error::Schema(format!("unknown unit `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortSpec {
    pub name: String,
    pub unit: Unit,
}

impl PortSpec {
    pub fn new(name: impl Into<String>, unit: Unit) -> Self {
        Self {
            name: name.into(),
            unit,
        }
    }
}

/// A simulation unit stepped by the master.
///
/// Outputs are valid after `do_step` and describe the step just taken
/// (mean powers, outlet temperatures). `save`/`restore` bracket a macro step
/// so the master can repeat it.
pub trait Block: Send {
    fn id(&self) -> &str;
    fn inputs(&self) -> &[PortSpec];
    fn outputs(&self) -> &[PortSpec];
    fn init(&mut self, t0: f64) -> Result<()>;
    fn set_input(&mut self, port: usize, value: f64);
    fn do_step(&mut self, t: f64, dt: f64) -> Result<()>;
    fn output(&self, port: usize) -> f64;
    fn save(&mut self);
    fn restore(&mut self);
}
