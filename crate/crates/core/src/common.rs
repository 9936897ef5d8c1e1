//! Shared physical conventions: fluid properties, the simulation clock and
//! time-series containers with zero-order-hold lookup.
//!
//! Temperatures are carried in degC throughout the crate, powers in W,
//! energies in J unless a name says otherwise (`_kwh`, `_mwh`).

use std::path::Path;

use chrono::{DateTime, Datelike, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const J_PER_KWH: f64 = 3.6e6;
pub const SECONDS_PER_HOUR: f64 = 3600.0;
pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// Constant properties of the heat-carrier water.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidProps {
    /// Specific heat capacity [J/(kg K)].
    pub cp: f64,
    /// Density [kg/m3].
    pub rho: f64,
}

impl Default for FluidProps {
    fn default() -> Self {
        Self {
            cp: 4186.0,
            rho: 985.0,
        }
    }
}

impl FluidProps {
    pub fn new(cp: f64, rho: f64) -> Result<Self> {
        if !(cp > 0.0 && rho > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "fluid properties must be positive (cp = {cp}, rho = {rho})"
            )));
        }
        Ok(Self { cp, rho })
    }
}

pub fn kwh_from_joule(e: f64) -> f64 {
    e / J_PER_KWH
}

/// Uniform simulation clock.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    /// Start, epoch seconds.
    pub t0: f64,
    /// Step length [s].
    pub dt: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, n_steps: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() || !t0.is_finite() {
            return Err(Error::InvalidParameter(format!("time grid step must be positive, got {dt}")));
        }
        if n_steps == 0 {
            return Err(Error::InvalidParameter("time grid needs at least one step".into()));
        }
        Ok(Self { t0, dt, n_steps })
    }

    pub fn end(&self) -> f64 {
        self.t0 + self.n_steps as f64 * self.dt
    }

    pub fn time_at(&self, step: usize) -> f64 {
        self.t0 + step as f64 * self.dt
    }

    pub fn duration(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }

    /// Index of the step containing `t`.
    pub fn step_index(&self, t: f64) -> Result<usize> {
        if !(t >= self.t0 && t < self.end()) {
            return Err(Error::OutOfRange {
                t,
                start: self.t0,
                end: self.end(),
            });
        }
        let idx = ((t - self.t0) / self.dt).floor() as usize;
        Ok(idx.min(self.n_steps - 1))
    }
}

/// Scalar samples on a [`TimeGrid`]; sample `i` holds over `[t_i, t_i + dt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_steps {
            return Err(Error::InvalidParameter(format!(
                "series has {} samples but grid has {} steps",
                values.len(),
                grid.n_steps
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("series sample {i} is missing or non-finite")));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: TimeGrid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.n_steps],
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Time integral over the whole grid (value-units x seconds).
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dt
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Zero-order-hold lookup: the sample of the step containing `t`.
pub fn interp_hold(series: &TimeSeries, t: f64) -> Result<f64> {
    let idx = series.grid.step_index(t)?;
    Ok(series.values[idx])
}

/// Parses an ISO-8601 timestamp (naive timestamps are taken as UTC) into
/// epoch seconds.
pub fn parse_timestamp(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp() as f64);
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt.and_utc().timestamp() as f64);
        }
    }
    None
}

pub fn format_timestamp(t: f64) -> String {
    match DateTime::from_timestamp(t.floor() as i64, 0) {
        Some(dt) => dt.format("%Y-%m-%dT%H:%M:%S").to_string(),
        None => format!("{t}"),
    }
}

fn datetime(t: f64) -> NaiveDateTime {
    DateTime::from_timestamp(t.floor() as i64, 0)
        .map(|d| d.naive_utc())
        .unwrap_or_default()
}

/// Calendar month 1..=12 of an epoch time.
pub fn month_of(t: f64) -> u32 {
    datetime(t).month()
}

/// Local hour of day as a fractional hour in [0, 24).
pub fn hour_of_day(t: f64) -> f64 {
    let d = datetime(t);
    d.hour() as f64 + d.minute() as f64 / 60.0 + d.second() as f64 / 3600.0
}

pub fn epoch(year: i32, month: u32, day: u32) -> f64 {
    chrono::NaiveDate::from_ymd_opt(year, month, day)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|d| d.and_utc().timestamp() as f64)
        .unwrap_or(f64::NAN)
}

pub fn days_in_month(year: i32, month: u32) -> u32 {
    let (ny, nm) = if month == 12 { (year + 1, 1) } else { (year, month + 1) };
    ((epoch(ny, nm, 1) - epoch(year, month, 1)) / SECONDS_PER_DAY).round() as u32
}

/// A delimited text table with an ISO timestamp first column.
#[derive(Debug, Clone)]
pub struct Table {
    pub timestamps: Vec<f64>,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 1, "empty file"))?;
        let names: Vec<&str> = header.split(',').map(str::trim).collect();
        if names.len() < 2 || names[0] != "timestamp" {
            return Err(Error::parse(path, 1, "header must start with `timestamp`"));
        }
        let mut timestamps = Vec::new();
        let mut data: Vec<Vec<f64>> = vec![Vec::new(); names.len() - 1];
        for (i, line) in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != names.len() {
                return Err(Error::parse(
                    path,
                    i + 1,
                    format!("expected {} fields, found {}", names.len(), fields.len()),
                ));
            }
            let t = parse_timestamp(fields[0])
                .ok_or_else(|| Error::parse(path, i + 1, format!("bad timestamp `{}`", fields[0])))?;
            timestamps.push(t);
            for (col, raw) in data.iter_mut().zip(&fields[1..]) {
                let v: f64 = raw
                    .parse()
                    .map_err(|_| Error::parse(path, i + 1, format!("bad number `{raw}`")))?;
                col.push(v);
            }
        }
        if timestamps.is_empty() {
            return Err(Error::parse(path, 2, "no data rows"));
        }
        Ok(Self {
            timestamps,
            columns: names[1..].iter().map(|s| s.to_string()).zip(data).collect(),
        })
    }

    /// The uniform grid implied by the timestamps.
    pub fn grid(&self, path: &Path) -> Result<TimeGrid> {
        let t0 = self.timestamps[0];
        if self.timestamps.len() == 1 {
            return Err(Error::parse(path, 2, "need at least two rows to infer the step"));
        }
        let dt = self.timestamps[1] - self.timestamps[0];
        for (i, w) in self.timestamps.windows(2).enumerate() {
            if (w[1] - w[0] - dt).abs() > 1e-6 {
                return Err(Error::parse(path, i + 3, "timestamps are not uniformly spaced"));
            }
        }
        TimeGrid::new(t0, dt, self.timestamps.len())
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }
}

/// Reads a `timestamp,value` file. A `_kW` header suffix scales to W; a
/// `_degC` suffix (or none) keeps values as given.
pub fn read_series_csv(path: &Path) -> Result<TimeSeries> {
    let table = Table::read(path)?;
    let grid = table.grid(path)?;
    let (name, values) = table
        .columns
        .first()
        .ok_or_else(|| Error::parse(path, 1, "missing value column"))?;
    let scale = if name.ends_with("_kW") { 1e3 } else { 1.0 };
    TimeSeries::new(grid, values.iter().map(|v| v * scale).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series123() -> TimeSeries {
        TimeSeries::new(TimeGrid::new(1000.0, 3600.0, 3).unwrap(), vec![1.0, 2.0, 3.0]).unwrap()
    }

    #[test]
    fn hold_lookup() {
        let s = series123();
        assert_eq!(interp_hold(&s, 1000.0).unwrap(), 1.0);
        assert_eq!(interp_hold(&s, 1000.0 + 3599.0).unwrap(), 1.0);
        assert_eq!(interp_hold(&s, 1000.0 + 7200.0).unwrap(), 3.0);
        assert!(matches!(
            interp_hold(&s, 1000.0 + 3.0 * 3600.0),
            Err(Error::OutOfRange { .. })
        ));
        assert!(interp_hold(&s, 999.0).is_err());
    }

    #[test]
    fn kwh_conversion() {
        assert_eq!(kwh_from_joule(3.6e6), 1.0);
        assert_eq!(kwh_from_joule(0.0), 0.0);
        assert!((kwh_from_joule(2.8242e10) - 7845.0).abs() < 1e-9);
    }

    #[test]
    fn fluid_defaults_and_validation() {
        let f = FluidProps::default();
        assert_eq!((f.cp, f.rho), (4186.0, 985.0));
        assert!(FluidProps::new(0.0, 985.0).is_err());
    }

    #[test]
    fn series_csv_with_kw_suffix() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        std::fs::write(
            &p,
            "timestamp,load_kW\n2021-01-01T00:00:00,1.5\n2021-01-01T01:00:00,2\n",
        )
        .unwrap();
        let s = read_series_csv(&p).unwrap();
        assert_eq!(s.values(), &[1500.0, 2000.0]);
        assert_eq!(s.grid().dt, 3600.0);
        assert_eq!(s.grid().t0, epoch(2021, 1, 1));
    }

    #[test]
    fn calendar_helpers() {
        let t = epoch(2021, 8, 15) + 7.5 * 3600.0;
        assert_eq!(month_of(t), 8);
        assert!((hour_of_day(t) - 7.5).abs() < 1e-12);
        assert_eq!(days_in_month(2021, 1), 31);
        assert_eq!(days_in_month(2021, 4), 30);
        assert_eq!(days_in_month(2021, 12), 31);
        assert_eq!(format_timestamp(epoch(2021, 1, 2)), "2021-01-02T00:00:00");
    }

    proptest::proptest! {
        #[test]
        fn kwh_round_trip(x in 0.0f64..1e12) {
            let back = kwh_from_joule(x * 3.6e6);
            proptest::prop_assert!((back - x).abs() <= 1e-12 * x.max(1.0));
        }

        #[test]
        fn hold_is_piecewise_constant(step in 0usize..3, a in 0.0f64..3600.0, b in 0.0f64..3600.0) {
            let s = series123();
            let base = 1000.0 + step as f64 * 3600.0;
            proptest::prop_assert_eq!(interp_hold(&s, base + a).unwrap(), interp_hold(&s, base + b).unwrap());
        }
    }
}
