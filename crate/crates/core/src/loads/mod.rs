//! Building heat and hot-water demand: the annual demand formula, profile
//! import with conservative resampling, and a degree-hour synthesizer.

mod synth;
mod weather;

pub use synth::{synthesize_profile, SynthParams};
pub use weather::{reference_weather, Weather};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::common::{Table, TimeGrid, TimeSeries, SECONDS_PER_DAY};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BuildingArchetype {
    /// Design heating power density [W/m2].
    pub q_h: f64,
    /// Simultaneity factor.
    pub g: f64,
    /// Full-load hours [h/a].
    pub full_load_hours: f64,
    /// Conditioned area [m2].
    pub area: f64,
}

impl Default for BuildingArchetype {
    fn default() -> Self {
        Self {
            q_h: 35.0,
            g: 0.8,
            full_load_hours: 1500.0,
            area: 186.8,
        }
    }
}

impl BuildingArchetype {
    pub fn validate(&self) -> Result<()> {
        let ok = self.q_h > 0.0 && self.g > 0.0 && self.g <= 1.0 && self.full_load_hours > 0.0 && self.area > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid archetype {self:?}")))
        }
    }

    pub fn annual_demand(&self) -> f64 {
        annual_heat_demand(self.q_h, self.area, self.g, self.full_load_hours)
    }
}

/// Annual space-heating demand [kWh/a].
pub fn annual_heat_demand(q_h: f64, area: f64, g: f64, full_load_hours: f64) -> f64 {
    q_h * area / 1000.0 * g * full_load_hours
}

/// [kWh/(m2 a)]
pub fn specific_demand(annual_kwh: f64, area: f64) -> f64 {
    annual_kwh / area
}

/// Space heat and hot water [W] of one building.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandProfile {
    pub id: String,
    pub space_heat: TimeSeries,
    pub dhw: TimeSeries,
}

impl DemandProfile {
    pub fn resample(&self, grid: &TimeGrid) -> Result<Self> {
        Ok(Self {
            id: self.id.clone(),
            space_heat: resample(&self.space_heat, grid)?,
            dhw: resample(&self.dhw, grid)?,
        })
    }

    pub fn scaled(&self, space_heat: f64, dhw: f64) -> Self {
        Self {
            id: self.id.clone(),
            space_heat: self.space_heat.map(|v| v * space_heat),
            dhw: self.dhw.map(|v| v * dhw),
        }
    }
}

/// Source grids spanning whole 365-day years are treated as periodic.
fn is_periodic(grid: &TimeGrid) -> bool {
    let days = grid.duration() / SECONDS_PER_DAY;
    days >= 365.0 && (days / 365.0 - (days / 365.0).round()).abs() < 1e-9
}

/// Maps a series onto `grid`: finer grids hold each sample, coarser grids
/// average whole source steps. Step lengths must divide each other and the
/// grids must be aligned. Whole-year sources wrap around the year.
pub fn resample(series: &TimeSeries, grid: &TimeGrid) -> Result<TimeSeries> {
    let src = series.grid();
    let periodic = is_periodic(src);
    let span = src.duration();
    let (fine, coarse) = (src.dt.min(grid.dt), src.dt.max(grid.dt));
    let ratio = coarse / fine;
    if (ratio - ratio.round()).abs() > 1e-9 {
        return Err(Error::GridMismatch(format!("steps {} s and {} s do not divide", src.dt, grid.dt)));
    }
    let offset = (grid.t0 - src.t0) / fine;
    if (offset - offset.round()).abs() > 1e-9 {
        return Err(Error::GridMismatch(format!(
            "grid start is not aligned to the {} s source step",
            src.dt
        )));
    }
    if !periodic && (grid.t0 < src.t0 || grid.end() > src.end() + 1e-6) {
        return Err(Error::GridMismatch(format!(
            "source covers [{}, {}), run needs [{}, {})",
            src.t0,
            src.end(),
            grid.t0,
            grid.end()
        )));
    }
    let n_src = src.n_steps as i64;
    let index = |t: f64| -> usize {
        let k = ((t - src.t0) / src.dt + 1e-9).floor() as i64;
        if periodic {
            k.rem_euclid((span / src.dt).round() as i64) as usize
        } else {
            k.clamp(0, n_src - 1) as usize
        }
    };
    let v = series.values();
    let values: Vec<f64> = if grid.dt <= src.dt {
        (0..grid.n_steps).map(|i| v[index(grid.time_at(i))]).collect()
    } else {
        let per = ratio.round() as usize;
        (0..grid.n_steps)
            .map(|i| {
                let t = grid.time_at(i);
                (0..per).map(|j| v[index(t + j as f64 * src.dt)]).sum::<f64>() / per as f64
            })
            .collect()
    };
    TimeSeries::new(*grid, values)
}

/// Reads `timestamp,<id>_heat_W,<id>_dhw_W,...` (a `_kW` suffix scales by
/// 1000) and resamples every building onto `grid`.
pub fn import_profiles(path: &Path, grid: &TimeGrid) -> Result<Vec<DemandProfile>> {
    let table = Table::read(path)?;
    let src = table.grid(path)?;
    let mut heat: Vec<(String, TimeSeries)> = Vec::new();
    let mut dhw: Vec<(String, TimeSeries)> = Vec::new();
    for (name, values) in &table.columns {
        if let Some(row) = values.iter().position(|&v| v < 0.0) {
            return Err(Error::NegativeDemand {
                column: name.clone(),
                row: row + 1,
                value: values[row],
            });
        }
        let (stem, scale) = if let Some(s) = name.strip_suffix("_kW") {
            (s, 1e3)
        } else if let Some(s) = name.strip_suffix("_W") {
            (s, 1.0)
        } else {
            return Err(Error::parse(path, 1, format!("column `{name}` needs a _W or _kW suffix")));
        };
        let series = TimeSeries::new(src, values.iter().map(|v| v * scale).collect())?;
        if let Some(id) = stem.strip_suffix("_heat") {
            heat.push((id.to_string(), series));
        } else if let Some(id) = stem.strip_suffix("_dhw") {
            dhw.push((id.to_string(), series));
        } else {
            return Err(Error::parse(path, 1, format!("column `{name}` is neither _heat nor _dhw")));
        }
    }
    let mut out = Vec::with_capacity(heat.len());
    for (id, sh) in heat {
        let hot = match dhw.iter().position(|(d, _)| *d == id) {
            Some(i) => dhw.swap_remove(i).1,
            None => TimeSeries::constant(src, 0.0),
        };
        out.push(
            DemandProfile {
                id,
                space_heat: sh,
                dhw: hot,
            }
            .resample(grid)?,
        );
    }
    if let Some((id, _)) = dhw.first() {
        return Err(Error::parse(path, 1, format!("hot-water column for `{id}` has no heat column")));
    }
    Ok(out)
}
