//! Carrier emission factors and their reconstruction from published
//! monthly results.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::econ::toml_line;
use super::seasonal_extrapolate;
use crate::center::{ChpUnit, PeakBoiler};
use crate::error::{Error, Result};

/// kg CO2e per MWh of fuel (or grid electricity); `hp_heat` is per kWh of
/// heat-pump heat.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmissionFactors {
    #[serde(rename = "ng_kg_per_mwh")]
    pub ng: f64,
    #[serde(rename = "bm_kg_per_mwh")]
    pub bm: f64,
    #[serde(rename = "h2_kg_per_mwh")]
    pub h2: f64,
    /// Carried for reporting; grid purchases are not charged separately
    /// because the heat-pump factor already covers its electricity.
    #[serde(rename = "grid_kg_per_mwh")]
    pub grid: f64,
    #[serde(rename = "hp_heat_kg_per_kwh")]
    pub hp_heat: f64,
}

impl EmissionFactors {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let f: Self = toml::from_str(&text).map_err(|e| Error::parse(path, toml_line(&e, &text), e.message()))?;
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if [self.ng, self.bm, self.h2, self.grid, self.hp_heat].iter().all(|v| *v >= 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidParameter("emission factors must be non-negative".into()))
        }
    }
}

/// Inputs of the factor fit: reported results of the reference study plus
/// the plant defaults that turn reported heat into fuel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorDerivation {
    /// Reference-variant emissions for January, April, August [t].
    pub v1_monthly_t: [f64; 3],
    /// Reference-variant January heat [MWh] and CHP share of it.
    pub v1_jan_heat: f64,
    pub v1_jan_chp_share: f64,
    /// Heat per representative month [MWh], shared by all variants.
    pub monthly_heat: [f64; 3],
    pub v2_reduction: f64,
    pub v4_reduction: f64,
    /// Heat-pump emissions of the hydrogen variant in August [t].
    pub v4_aug_hp_t: f64,
    /// Heat-pump share of the winter cascade.
    pub hp_stage_share: f64,
    pub hp_heat: f64,
    pub grid: f64,
    pub chp: ChpUnit,
    pub boiler: PeakBoiler,
}

impl Default for FactorDerivation {
    fn default() -> Self {
        Self {
            v1_monthly_t: [22.94, 12.04, 7.0],
            v1_jan_heat: 86.0,
            v1_jan_chp_share: 0.76,
            monthly_heat: [86.0, 47.0, 29.0],
            v2_reduction: 0.70,
            v4_reduction: 0.772,
            v4_aug_hp_t: 0.84,
            hp_stage_share: 0.4,
            hp_heat: 0.028,
            grid: 420.0,
            chp: ChpUnit::default(),
            boiler: PeakBoiler::default(),
        }
    }
}

impl FactorDerivation {
    /// Natural-gas fuel of the reference January [MWh].
    pub fn v1_jan_fuel(&self) -> f64 {
        let chp_heat = self.v1_jan_heat * self.v1_jan_chp_share;
        self.chp.fuel_for(chp_heat) + self.boiler.fuel_for(self.v1_jan_heat - chp_heat)
    }

    /// Hydrogen burnt in the winter months of the cascade variant [MWh/a];
    /// summer months run on the heat pump alone.
    pub fn v4_annual_h2_fuel(&self) -> f64 {
        let month = |heat: f64| self.chp.fuel_for(heat * (1.0 - self.hp_stage_share));
        seasonal_extrapolate(month(self.monthly_heat[0]), month(self.monthly_heat[1]), 0.0)
    }

    pub fn baseline_annual_t(&self) -> f64 {
        let [j, a, g] = self.v1_monthly_t;
        seasonal_extrapolate(j, a, g)
    }
}

/// Natural gas from the reference January; biomethane from the reported
/// reduction of the otherwise identical plant; hydrogen so the annual total
/// of the cascade variant hits its reported reduction after the summer
/// heat-pump share.
pub fn derive_reference_factors(d: &FactorDerivation) -> EmissionFactors {
    let ng = d.v1_monthly_t[0] * 1000.0 / d.v1_jan_fuel();
    let bm = ng * (1.0 - d.v2_reduction);
    let v4_target_kg = (1.0 - d.v4_reduction) * d.baseline_annual_t() * 1000.0;
    let hp_kg = seasonal_extrapolate(0.0, 0.0, d.v4_aug_hp_t * 1000.0);
    let h2 = (v4_target_kg - hp_kg) / d.v4_annual_h2_fuel();
    EmissionFactors {
        ng,
        bm,
        h2,
        grid: d.grid,
        hp_heat: d.hp_heat,
    }
}

impl EmissionFactors {
    /// Flat key-value text with provenance comments.
    pub fn to_cfg(&self, d: &FactorDerivation) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# Fitted emission factors, kg CO2e per MWh of fuel (hp_heat: per kWh of heat).");
        let _ = writeln!(s, "# Regenerate with `heatgrid derive-factors`.");
        let _ = writeln!(
            s,
            "# ng: reference January {} t over {:.4} MWh of gas.",
            d.v1_monthly_t[0],
            d.v1_jan_fuel()
        );
        let _ = writeln!(s, "# bm: {}% below ng.", d.v2_reduction * 100.0);
        let _ = writeln!(
            s,
            "# h2: annual target {:.4} t minus summer heat-pump share, over {:.4} MWh of hydrogen.",
            (1.0 - d.v4_reduction) * d.baseline_annual_t(),
            d.v4_annual_h2_fuel()
        );
        let _ = writeln!(s, "# grid: representative mix, reported only.");
        let _ = writeln!(s, "ng_kg_per_mwh = {}", self.ng);
        let _ = writeln!(s, "bm_kg_per_mwh = {}", self.bm);
        let _ = writeln!(s, "h2_kg_per_mwh = {}", self.h2);
        let _ = writeln!(s, "grid_kg_per_mwh = {}", self.grid);
        let _ = writeln!(s, "hp_heat_kg_per_kwh = {}", self.hp_heat);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_fit() {
        let d = FactorDerivation::default();
        // 86 MWh: 76 % from the CHP at 1.6 MWh fuel per MWh heat, rest at 95 %
        let fuel = 86.0 * 0.76 * 1.44 / 0.9 + 86.0 * 0.24 / 0.95;
        assert!((d.v1_jan_fuel() - fuel).abs() < 1e-9);
        let f = derive_reference_factors(&d);
        assert!((f.ng - 22_940.0 / fuel).abs() < 1e-9);
        assert!((f.ng - 181.6).abs() < 0.1);
        assert!((f.bm / f.ng - 0.3).abs() < 1e-12);
        // annual V4 = 2 jan + 4 apr CHP fuel terms + 6 aug heat-pump terms
        let h2_fuel = 2.0 * 86.0 * 0.6 * 1.6 + 4.0 * 47.0 * 0.6 * 1.6;
        let v4 = (f.h2 * h2_fuel / 1000.0) + 6.0 * 0.84;
        assert!((1.0 - v4 / 136.04 - 0.772).abs() < 1e-9);
    }

    #[test]
    fn cfg_round_trip() {
        let d = FactorDerivation::default();
        let f = derive_reference_factors(&d);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.cfg");
        std::fs::write(&p, f.to_cfg(&d)).unwrap();
        assert_eq!(EmissionFactors::read(&p).unwrap(), f);
    }
}
