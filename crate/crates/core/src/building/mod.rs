//! Building substation and envelope: HIU with buffer, radiator circuit,
//! hot-water draw and a two-node room/wall model.

mod envelope;
mod hiu;
mod model;

pub use envelope::{envelope_step, EnvelopeBalance, EnvelopeParams};
pub use hiu::{balanced_exchanger, hiu_step, BufferLoads, HiuController, HiuOutcome, HiuParams};
pub use model::{step_building, BuildingInputs, BuildingOutputs, BuildingParams, BuildingState};

use serde::{Deserialize, Serialize};

use crate::common::hour_of_day;
use crate::error::{Error, Result};

/// Room setpoint: 20 degC from midnight to 07:00, 22 degC otherwise.
pub fn setpoint_schedule(t: f64) -> f64 {
    if hour_of_day(t) < 7.0 {
        20.0
    } else {
        22.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadiatorParams {
    pub q_nom: f64,
    pub dt_nom: f64,
    pub exponent: f64,
}

impl Default for RadiatorParams {
    fn default() -> Self {
        Self {
            q_nom: 5000.0,
            dt_nom: 30.0,
            exponent: 1.3,
        }
    }
}

impl RadiatorParams {
    pub fn validate(&self) -> Result<()> {
        if self.q_nom > 0.0 && self.dt_nom > 0.0 && (1.0..=1.5).contains(&self.exponent) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid radiator parameters {self:?}")))
        }
    }
}

pub fn radiator_output(t_water: f64, t_room: f64, params: &RadiatorParams) -> f64 {
    let dt = t_water - t_room;
    if dt <= 0.0 {
        return 0.0;
    }
    params.q_nom * (dt / params.dt_nom).powf(params.exponent)
}

/// Room thermostat: PI on the setpoint error with a symmetric deadband.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThermostatParams {
    pub deadband: f64,
    /// [1/K]
    pub kp: f64,
    /// Integral time [s].
    pub ti: f64,
}

impl Default for ThermostatParams {
    fn default() -> Self {
        Self {
            deadband: 0.5,
            kp: 0.5,
            ti: 3600.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Thermostat {
    pub integral: f64,
}

impl Thermostat {
    /// Valve opening in [0, 1].
    pub fn update(&mut self, params: &ThermostatParams, t_set: f64, t_room: f64, dt: f64) -> f64 {
        let e = t_set - t_room;
        let e = e.signum() * (e.abs() - params.deadband).max(0.0);
        let ki = params.kp / params.ti;
        self.integral = (self.integral + ki * e * dt).clamp(0.0, 1.0);
        (params.kp * e + self.integral).clamp(0.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::common::epoch;

    #[test]
    fn schedule_boundaries() {
        let day = epoch(2021, 1, 12);
        assert_eq!(setpoint_schedule(day + 3.0 * 3600.0), 20.0);
        assert_eq!(setpoint_schedule(day + 12.0 * 3600.0), 22.0);
        assert_eq!(setpoint_schedule(day + 6.0 * 3600.0 + 59.0 * 60.0), 20.0);
        assert_eq!(setpoint_schedule(day + 7.0 * 3600.0), 22.0);
    }

    #[test]
    fn radiator_power_law() {
        let p = RadiatorParams::default();
        assert_eq!(radiator_output(50.0, 20.0, &p), 5000.0);
        assert_eq!(radiator_output(20.0, 21.0, &p), 0.0);
        let q = radiator_output(35.0, 20.0, &p);
        let oracle = 5000.0 * (-1.3 * std::f64::consts::LN_2).exp();
        assert!((q - oracle).abs() < 1e-9);
        assert!((q - 2031.0).abs() < 1.0);
    }

    #[test]
    fn thermostat_holds_inside_deadband() {
        let p = ThermostatParams::default();
        let mut th = Thermostat { integral: 0.3 };
        let u = th.update(&p, 21.0, 20.7, 60.0);
        assert_eq!(u, 0.3);
        let u = th.update(&p, 21.0, 19.0, 60.0);
        assert!(u > 0.3);
    }
}
