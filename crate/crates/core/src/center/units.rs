use serde::{Deserialize, Serialize};

use crate::common::FluidProps;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fuel {
    Ng,
    Bm,
    H2,
}

impl Fuel {
    pub fn label(self) -> &'static str {
        match self {
            Fuel::Ng => "ng",
            Fuel::Bm => "bm",
            Fuel::H2 => "h2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChpUnit {
    pub q_max: f64,
    /// Power-to-heat ratio.
    pub sigma: f64,
    pub eta_total: f64,
    pub fuel: Fuel,
    pub min_part_load: f64,
}

impl Default for ChpUnit {
    fn default() -> Self {
        Self {
            q_max: 108e3,
            sigma: 0.44,
            eta_total: 0.90,
            fuel: Fuel::Ng,
            min_part_load: 0.5,
        }
    }
}

impl ChpUnit {
    pub fn validate(&self) -> Result<()> {
        let ok = self.q_max > 0.0
            && self.sigma > 0.0
            && self.sigma < 1.0
            && self.eta_total > 0.0
            && self.eta_total <= 1.0
            && (0.0..=1.0).contains(&self.min_part_load);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid CHP parameters {self:?}")))
        }
    }

    pub fn q_min(&self) -> f64 {
        self.q_max * self.min_part_load
    }

    pub fn electricity(&self, heat: f64) -> f64 {
        heat * self.sigma
    }

    pub fn fuel_for(&self, heat: f64) -> f64 {
        heat * (1.0 + self.sigma) / self.eta_total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PeakBoiler {
    pub q_max: f64,
    pub eta: f64,
    pub fuel: Fuel,
}

impl Default for PeakBoiler {
    fn default() -> Self {
        Self {
            q_max: 400e3,
            eta: 0.95,
            fuel: Fuel::Ng,
        }
    }
}

impl PeakBoiler {
    pub fn validate(&self) -> Result<()> {
        if self.q_max > 0.0 && self.eta > 0.0 && self.eta <= 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid boiler parameters {self:?}")))
        }
    }

    pub fn fuel_for(&self, heat: f64) -> f64 {
        heat / self.eta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HpKind {
    Ground,
    Air,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeatPumpUnit {
    pub kind: HpKind,
    pub q_max: f64,
    pub carnot_eta: f64,
    pub min_part_load: f64,
    /// Ground source temperature [degC]; air units use the ambient series.
    pub ground_temp: f64,
    /// Borehole field metadata; only the extraction cap is used.
    pub probes: u32,
    pub probe_spacing: f64,
    pub extraction_per_probe: f64,
}

impl Default for HeatPumpUnit {
    fn default() -> Self {
        Self {
            kind: HpKind::Ground,
            q_max: 108e3,
            carnot_eta: 0.45,
            min_part_load: 0.5,
            ground_temp: 10.0,
            probes: 30,
            probe_spacing: 10.0,
            extraction_per_probe: 5000.0,
        }
    }
}

impl HeatPumpUnit {
    pub fn air() -> Self {
        Self {
            kind: HpKind::Air,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.q_max > 0.0
            && self.carnot_eta > 0.0
            && self.carnot_eta < 1.0
            && (0.0..=1.0).contains(&self.min_part_load)
            && self.extraction_per_probe > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid heat-pump parameters {self:?}")))
        }
    }

    pub fn q_min(&self) -> f64 {
        self.q_max * self.min_part_load
    }

    pub fn source_temp(&self, t_ambient: f64) -> f64 {
        match self.kind {
            HpKind::Ground => self.ground_temp,
            HpKind::Air => t_ambient,
        }
    }

    /// Largest heat output the source allows at this COP.
    pub fn capacity(&self, cop: f64) -> f64 {
        match self.kind {
            HpKind::Ground => {
                let cap = self.probes as f64 * self.extraction_per_probe / (1.0 - 1.0 / cop);
                self.q_max.min(cap)
            }
            HpKind::Air => self.q_max,
        }
    }
}

/// Heat flow leaving the store towards the supply, positive when discharging.
pub fn buffer_power(mdot: f64, t1: f64, t2: f64) -> f64 {
    let cp = FluidProps::default().cp;
    mdot * cp * (t2 - t1)
}

pub fn hp_cop(t_source: f64, t_sink: f64, carnot_eta: f64) -> Result<f64> {
    if !(t_sink > t_source) {
        return Err(Error::InvalidLift {
            source_temp: t_source,
            sink: t_sink,
        });
    }
    Ok((carnot_eta * (t_sink + 273.15) / (t_sink - t_source)).clamp(1.2, 8.0))
}
