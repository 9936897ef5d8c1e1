//! Heating center: stratified buffer acting as hydraulic separator, the
//! generating units and the per-variant dispatch.

mod dispatch;
mod plant;
mod units;

pub use dispatch::{dispatch_base, dispatch_v1, dispatch_v3, dispatch_v4, CycleBand, CycleState, Setpoints, TankSensors};
pub use plant::{step_center, CenterInputs, CenterOutputs, CenterParams, CenterState, TankParams};
pub use units::{buffer_power, hp_cop, ChpUnit, Fuel, HeatPumpUnit, HpKind, PeakBoiler};

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    V1,
    V2,
    V3,
    V4,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::V1, Variant::V2, Variant::V3, Variant::V4];

    pub fn label(self) -> &'static str {
        match self {
            Variant::V1 => "v1",
            Variant::V2 => "v2",
            Variant::V3 => "v3",
            Variant::V4 => "v4",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "v1" => Ok(Variant::V1),
            "v2" => Ok(Variant::V2),
            "v3" => Ok(Variant::V3),
            "v4" => Ok(Variant::V4),
            other => Err(Error::Schema(format!("unknown variant `{other}` (expected v1..v4)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Season {
    Winter,
    Summer,
}

impl Season {
    /// Winter is November through April.
    pub fn of_month(month: u32) -> Season {
        if (5..=10).contains(&month) {
            Season::Summer
        } else {
            Season::Winter
        }
    }
}
