//! Heat interface unit: counterflow plate exchanger between the primary
//! (grid) side and the building buffer, with a PI controller holding the
//! primary return at its setpoint.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::storage::{StratifiedTank, TankBalance, TankPorts};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HiuParams {
    /// Exchanger effectiveness at `max_flow` with balanced flows.
    pub hx_effectiveness: f64,
    pub buffer_volume: f64,
    pub buffer_layers: usize,
    /// Buffer standing-loss coefficient [W/K].
    pub buffer_ua: f64,
    pub t_return_set: f64,
    pub min_flow: f64,
    pub max_flow: f64,
    /// Proportional gain [1/K] on the normalized flow command.
    pub kp: f64,
    /// Integral gain [1/(K s)].
    pub ki: f64,
    /// Controller sample time [s].
    pub control_dt: f64,
}

impl Default for HiuParams {
    fn default() -> Self {
        Self {
            hx_effectiveness: 0.8,
            buffer_volume: 0.5,
            buffer_layers: 3,
            buffer_ua: 1.5,
            t_return_set: 55.0,
            min_flow: 0.003,
            max_flow: 0.15,
            kp: 0.05,
            ki: 0.005,
            control_dt: 10.0,
        }
    }
}

impl HiuParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.hx_effectiveness > 0.0
            && self.hx_effectiveness <= 1.0
            && self.buffer_volume > 0.0
            && self.buffer_layers >= 2
            && self.buffer_ua >= 0.0
            && self.min_flow >= 0.0
            && self.max_flow > self.min_flow
            && self.control_dt > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid HIU parameters {self:?}")))
        }
    }

    /// Exchanger conductance [W/K] implied by the nominal effectiveness.
    pub fn hx_ua(&self, cp: f64) -> f64 {
        let eps = self.hx_effectiveness.min(0.999);
        eps / (1.0 - eps) * self.max_flow * cp
    }
}

/// Balanced counterflow exchanger; both sides carry `flow`.
/// Returns (duty [W], primary outlet, secondary outlet).
pub fn balanced_exchanger(ua: f64, flow: f64, cp: f64, t_primary_in: f64, t_secondary_in: f64) -> (f64, f64, f64) {
    if flow <= 0.0 {
        return (0.0, t_primary_in, t_secondary_in);
    }
    let ntu = ua / (flow * cp);
    let eps = ntu / (1.0 + ntu);
    let duty = eps * flow * cp * (t_primary_in - t_secondary_in);
    let dt = duty / (flow * cp);
    (duty, t_primary_in - dt, t_secondary_in + dt)
}

/// PI state of the return-temperature controller.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct HiuController {
    /// Normalized flow command in [0, 1] (fraction of `max_flow`).
    pub command: f64,
    pub integral: f64,
}

/// Loads on the buffer during one step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BufferLoads {
    /// Space-heating loop flow [kg/s] leaving the top.
    pub heating_flow: f64,
    pub heating_return_temp: f64,
    /// Hot-water draw from the top [W].
    pub dhw_power: f64,
    pub dhw_floor: f64,
    pub ambient: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HiuOutcome {
    /// Mean primary flow over the step [kg/s].
    pub primary_flow: f64,
    /// Flow-weighted primary return temperature.
    pub primary_out_temp: f64,
    /// Mean exchanger duty [W].
    pub duty: f64,
    /// Buffer bookkeeping summed over the control sub-steps.
    pub buffer: TankBalance,
}

/// Advances the HIU and its buffer over `dt`.
///
/// The controller and exchanger run at `control_dt`; each sub-step moves the
/// buffer once with the exchanger's secondary outlet as charge inlet. Charging
/// requires the primary inlet to exceed both the buffer bottom and the return
/// setpoint by 1 K; otherwise only the bypass minimum flow passes. A disabled
/// unit draws nothing from the grid.
#[allow(clippy::too_many_arguments)]
pub fn hiu_step(
    params: &HiuParams,
    ctrl: &mut HiuController,
    buffer: &mut StratifiedTank,
    enabled: bool,
    cp: f64,
    t_primary_in: f64,
    loads: &BufferLoads,
    dt: f64,
) -> HiuOutcome {
    let ua = params.hx_ua(cp);
    let u_min = params.min_flow / params.max_flow;
    let n = ((dt / params.control_dt).ceil() as usize).max(1);
    let h = dt / n as f64;
    let mut total = TankBalance {
        stored_before: buffer.stored_energy(),
        ..Default::default()
    };
    let (mut mass, mut enthalpy_drop, mut heating_mass, mut heating_temp) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..n {
        let t_bot = buffer.bottom();
        let charging = enabled && t_primary_in > t_bot.max(params.t_return_set) + 1.0;
        let (flow, duty, t_sec) = if charging {
            let flow = ctrl.command.clamp(u_min, 1.0) * params.max_flow;
            let (duty, t_out, t_sec) = balanced_exchanger(ua, flow, cp, t_primary_in, t_bot);
            // a colder return than the setpoint means the flow may rise
            let err = params.t_return_set - t_out;
            let trial = params.kp * err + ctrl.integral + params.ki * err * h;
            if !((trial > 1.0 && err > 0.0) || (trial < u_min && err < 0.0)) {
                ctrl.integral += params.ki * err * h;
            }
            ctrl.command = (params.kp * err + ctrl.integral).clamp(u_min, 1.0);
            (flow, duty, t_sec)
        } else if enabled {
            (params.min_flow, 0.0, t_bot)
        } else {
            (0.0, 0.0, t_bot)
        };
        let bal = buffer.step(
            &TankPorts {
                charge_flow: if charging { flow } else { 0.0 },
                charge_temp: t_sec,
                discharge_flow: loads.heating_flow,
                discharge_return_temp: loads.heating_return_temp,
                top_draw: loads.dhw_power,
                draw_floor: loads.dhw_floor,
                ambient: loads.ambient,
            },
            h,
        );
        mass += flow * h;
        enthalpy_drop += bal.charge_in;
        debug_assert!(!charging || (bal.charge_in - duty * h).abs() <= 1e-9 * (1.0 + duty * h));
        heating_mass += loads.heating_flow * h;
        heating_temp += loads.heating_flow * h * bal.top_outlet_temp;
        total.charge_in += bal.charge_in;
        total.discharge_out += bal.discharge_out;
        total.draw += bal.draw;
        total.unmet_draw += bal.unmet_draw;
        total.standing_loss += bal.standing_loss;
    }
    total.stored_after = buffer.stored_energy();
    total.top_outlet_temp = if heating_mass > 0.0 { heating_temp / heating_mass } else { buffer.top() };
    total.bottom_outlet_temp = buffer.bottom();
    let primary_out_temp = if mass > 0.0 {
        t_primary_in - enthalpy_drop / (mass * cp)
    } else {
        t_primary_in
    };
    HiuOutcome {
        primary_flow: mass / dt,
        primary_out_temp,
        duty: enthalpy_drop / dt,
        buffer: total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::common::FluidProps;

    const CP: f64 = 4186.0;

    fn buffer(t: f64) -> StratifiedTank {
        let p = HiuParams::default();
        StratifiedTank::new(FluidProps::default(), p.buffer_volume, p.buffer_layers, p.buffer_ua, t).unwrap()
    }

    fn idle() -> BufferLoads {
        BufferLoads {
            heating_return_temp: 40.0,
            dhw_floor: 45.0,
            ambient: 20.0,
            ..Default::default()
        }
    }

    #[test]
    fn enthalpy_balance_arithmetic() {
        // 25 kW taken from 0.24 kg/s entering at 80 degC
        let t_out = 80.0 - 25_000.0 / (0.24 * CP);
        assert!((t_out - 55.1).abs() < 0.05);
    }

    #[test]
    fn no_driving_temperature_means_bypass() {
        let p = HiuParams::default();
        let mut c = HiuController::default();
        let mut b = buffer(40.0);
        let out = hiu_step(&p, &mut c, &mut b, true, CP, 55.0, &idle(), 60.0);
        assert_eq!(out.duty, 0.0);
        assert_eq!(out.primary_flow, p.min_flow);
        assert_eq!(out.primary_out_temp, 55.0);
    }

    #[test]
    fn settles_return_at_setpoint() {
        // steady heating load that keeps the buffer bottom near 50 degC
        let p = HiuParams::default();
        let mut c = HiuController::default();
        let mut b = buffer(50.0);
        let loads = BufferLoads {
            heating_flow: 0.12,
            heating_return_temp: 50.0,
            ..idle()
        };
        let mut out = HiuOutcome::default();
        for _ in 0..240 {
            out = hiu_step(&p, &mut c, &mut b, true, CP, 80.0, &loads, 60.0);
        }
        assert!((out.primary_out_temp - 55.0).abs() <= 1.0, "return {}", out.primary_out_temp);
    }

    #[test]
    fn disabled_unit_draws_nothing() {
        let p = HiuParams::default();
        let mut c = HiuController::default();
        let mut b = buffer(40.0);
        let out = hiu_step(&p, &mut c, &mut b, false, CP, 80.0, &idle(), 60.0);
        assert_eq!(out.primary_flow, 0.0);
    }

    #[test]
    fn effectiveness_at_nominal_flow() {
        let p = HiuParams::default();
        let (duty, ..) = balanced_exchanger(p.hx_ua(CP), p.max_flow, CP, 80.0, 40.0);
        assert!((duty / (p.max_flow * CP * 40.0) - 0.8).abs() < 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn buffer_first_law_and_return_bound(t_in in 20.0f64..95.0, t0 in 20.0f64..80.0,
                                             cmd in 0.0f64..1.0, flow in 0.0f64..0.2,
                                             dhw in 0.0f64..2e4, dt in 1.0f64..900.0) {
            let p = HiuParams::default();
            let mut c = HiuController { command: cmd, integral: cmd };
            let mut b = buffer(t0);
            let loads = BufferLoads { heating_flow: flow, dhw_power: dhw, ..idle() };
            let out = hiu_step(&p, &mut c, &mut b, true, CP, t_in, &loads, dt);
            let bal = out.buffer;
            proptest::prop_assert!(bal.residual().abs() <= 1e-9 * bal.stored_before);
            proptest::prop_assert!(out.primary_out_temp <= t_in + 1e-12);
            proptest::prop_assert!(b.is_stratified());
        }

        #[test]
        fn duty_monotone_in_supply(t_in in 40.0f64..90.0, t0 in 30.0f64..70.0, cmd in 0.0f64..1.0) {
            let p = HiuParams::default();
            let run = |tin: f64| {
                let mut c = HiuController { command: cmd, integral: cmd };
                let mut b = buffer(t0);
                hiu_step(&p, &mut c, &mut b, true, CP, tin, &idle(), p.control_dt).duty
            };
            proptest::prop_assert!(run(t_in + 5.0) >= run(t_in));
        }
    }
}
