use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::resample;
use crate::common::{epoch, Table, TimeGrid, TimeSeries, SECONDS_PER_HOUR};
use crate::error::{Error, Result};

/// Ambient temperature [degC] and global horizontal irradiance [W/m2].
#[derive(Debug, Clone, PartialEq)]
pub struct Weather {
    pub t_ambient: TimeSeries,
    pub solar: TimeSeries,
}

/// Monthly mean air temperatures of the built-in climate, Jan..Dec.
const MONTHLY_MEAN: [f64; 12] = [0.0, 1.0, 4.5, 9.0, 13.5, 16.5, 18.5, 18.0, 14.0, 9.5, 4.5, 1.5];
const LATITUDE_DEG: f64 = 51.0;

impl Weather {
    /// Reads `timestamp,t_ambient_degC,solar_w_per_m2`.
    pub fn read(path: &Path) -> Result<Self> {
        let table = Table::read(path)?;
        let grid = table.grid(path)?;
        let col = |name: &str| {
            table
                .column(name)
                .map(<[f64]>::to_vec)
                .ok_or_else(|| Error::parse(path, 1, format!("missing column `{name}`")))
        };
        let t = TimeSeries::new(grid, col("t_ambient_degC")?).map_err(|e| Error::WeatherGap(e.to_string()))?;
        let s = TimeSeries::new(grid, col("solar_w_per_m2")?).map_err(|e| Error::WeatherGap(e.to_string()))?;
        Ok(Self { t_ambient: t, solar: s })
    }

    pub fn grid(&self) -> &TimeGrid {
        self.t_ambient.grid()
    }

    pub fn resample(&self, grid: &TimeGrid) -> Result<Self> {
        let gap = |e: Error| match e {
            Error::GridMismatch(m) => Error::WeatherGap(m),
            other => other,
        };
        Ok(Self {
            t_ambient: resample(&self.t_ambient, grid).map_err(gap)?,
            solar: resample(&self.solar, grid).map_err(gap)?,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("timestamp,t_ambient_degC,solar_w_per_m2\n");
        for (i, (t, g)) in self.t_ambient.values().iter().zip(self.solar.values()).enumerate() {
            s.push_str(&format!("{},{t},{g}\n", crate::common::format_timestamp(self.grid().time_at(i))));
        }
        s
    }
}

/// Day-of-year mean temperature, linear between mid-month values.
fn seasonal_mean(day: f64) -> f64 {
    let mid = |m: usize| (m as f64 + 0.5) * 365.0 / 12.0;
    let pos = day - mid(0);
    let k = (pos / (365.0 / 12.0)).floor();
    let i = (k as i64).rem_euclid(12) as usize;
    let frac = (pos - k * 365.0 / 12.0) / (365.0 / 12.0);
    MONTHLY_MEAN[i] + frac * (MONTHLY_MEAN[(i + 1) % 12] - MONTHLY_MEAN[i])
}

/// Hourly synthetic year for a central-European site: seasonal means, AR(1)
/// day-to-day anomalies, a diurnal swing and clear-sky irradiance scaled by
/// a random daily clearness.
pub fn reference_weather(year: i32, seed: u64) -> Weather {
    let t0 = epoch(year, 1, 1);
    let grid = TimeGrid::new(t0, SECONDS_PER_HOUR, 8760).expect("static grid");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut anomaly = 0.0;
    let mut temps = Vec::with_capacity(8760);
    let mut solar = Vec::with_capacity(8760);
    let phi = LATITUDE_DEG.to_radians();
    for day in 0..365 {
        let d = day as f64;
        let winter = !(60..=330).contains(&day);
        let sigma = if winter { 3.0 } else { 2.0 };
        anomaly = 0.75 * anomaly + sigma * (1.0f64 - 0.75 * 0.75).sqrt() * unit.sample(&mut rng);
        let clearness: f64 = rng.random_range(0.25..1.0);
        let mean = seasonal_mean(d + 0.5) + anomaly;
        let decl = (23.45f64).to_radians() * (2.0 * PI * (284.0 + d + 1.0) / 365.0).sin();
        // clear summer days swing most
        let amplitude = (1.5 + 3.0 * clearness) * (1.0 + 0.4 * decl / 23.45f64.to_radians());
        for h in 0..24 {
            let hour = h as f64 + 0.5;
            temps.push(mean + amplitude * (2.0 * PI * (hour - 15.0) / 24.0).cos());
            let omega = (15.0 * (hour - 12.0)).to_radians();
            let sin_elev = phi.sin() * decl.sin() + phi.cos() * decl.cos() * omega.cos();
            solar.push(if sin_elev > 0.0 { 1000.0 * 0.75 * sin_elev.powf(1.15) * clearness } else { 0.0 });
        }
    }
    Weather {
        t_ambient: TimeSeries::new(grid, temps).expect("finite"),
        solar: TimeSeries::new(grid, solar).expect("finite"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::common::month_of;

    #[test]
    fn monthly_means_follow_climate() {
        let w = reference_weather(2021, 1);
        let mut sums = [0.0; 12];
        let mut counts = [0usize; 12];
        for (i, &t) in w.t_ambient.values().iter().enumerate() {
            let m = month_of(w.grid().time_at(i)) as usize - 1;
            sums[m] += t;
            counts[m] += 1;
        }
        for m in 0..12 {
            let mean = sums[m] / counts[m] as f64;
            assert!((mean - MONTHLY_MEAN[m]).abs() < 4.0, "month {} mean {mean}", m + 1);
        }
        assert!(w.solar.values().iter().all(|&g| (0.0..=1000.0).contains(&g)));
    }

    #[test]
    fn deterministic_in_seed() {
        assert_eq!(reference_weather(2021, 3), reference_weather(2021, 3));
        assert_ne!(reference_weather(2021, 3), reference_weather(2021, 4));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.csv");
        let w = reference_weather(2021, 1);
        std::fs::write(&p, w.to_csv()).unwrap();
        assert_eq!(Weather::read(&p).unwrap(), w);
    }

    #[test]
    fn short_weather_is_a_gap() {
        let w = reference_weather(2021, 1);
        let short = Weather {
            t_ambient: TimeSeries::new(TimeGrid::new(w.grid().t0, 3600.0, 24).unwrap(), w.t_ambient.values()[..24].to_vec()).unwrap(),
            solar: TimeSeries::new(TimeGrid::new(w.grid().t0, 3600.0, 24).unwrap(), w.solar.values()[..24].to_vec()).unwrap(),
        };
        let g = TimeGrid::new(w.grid().t0, 60.0, 48 * 60).unwrap();
        assert!(matches!(short.resample(&g), Err(Error::WeatherGap(_))));
    }
}
