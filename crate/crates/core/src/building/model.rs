use serde::{Deserialize, Serialize};

use super::envelope::{envelope_step, EnvelopeBalance, EnvelopeParams};
use super::hiu::{hiu_step, BufferLoads, HiuController, HiuParams};
use super::{radiator_output, setpoint_schedule, RadiatorParams, Thermostat, ThermostatParams};
use crate::common::FluidProps;
use crate::error::{ensure_finite, Result};
use crate::storage::{StratifiedTank, TankBalance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildingParams {
    pub id: String,
    pub envelope: EnvelopeParams,
    pub radiator: RadiatorParams,
    pub hiu: HiuParams,
    pub thermostat: ThermostatParams,
    /// Radiator supply is mixed down to this temperature.
    pub heating_supply_max: f64,
    pub heating_return_temp: f64,
    pub dhw_floor: f64,
    /// Internal gains [W/m2].
    pub internal_gains: f64,
    /// Electricity stubs: PV peak [kWp] and base household load [W].
    pub pv_kwp: f64,
    pub el_load: f64,
}

impl BuildingParams {
    pub fn new(id: impl Into<String>, area: f64) -> Self {
        Self {
            id: id.into(),
            envelope: EnvelopeParams::for_area(area),
            radiator: RadiatorParams::default(),
            hiu: HiuParams::default(),
            thermostat: ThermostatParams::default(),
            heating_supply_max: 55.0,
            heating_return_temp: 40.0,
            dhw_floor: 45.0,
            internal_gains: 3.0,
            pv_kwp: 0.0,
            el_load: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.envelope.validate()?;
        self.radiator.validate()?;
        self.hiu.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingState {
    pub t_room: f64,
    pub t_wall: f64,
    pub buffer: StratifiedTank,
    pub hiu: HiuController,
    pub thermostat: Thermostat,
    pub t_primary_out: f64,
    pub hiu_enabled: bool,
}

impl BuildingState {
    pub fn new(params: &BuildingParams, fluid: FluidProps, t_room: f64, t_buffer: f64) -> Result<Self> {
        params.validate()?;
        let h = &params.hiu;
        Ok(Self {
            t_room,
            t_wall: t_room,
            buffer: StratifiedTank::new(fluid, h.buffer_volume, h.buffer_layers, h.buffer_ua, t_buffer)?,
            hiu: HiuController::default(),
            thermostat: Thermostat::default(),
            t_primary_out: h.t_return_set,
            hiu_enabled: true,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BuildingInputs {
    pub t_primary_in: f64,
    pub t_ambient: f64,
    /// Global horizontal irradiance [W/m2].
    pub solar: f64,
    /// Internal gains [W]; `None` uses the per-area default.
    pub internal_gains: Option<f64>,
    pub dhw_draw: f64,
    /// Prescribed space-heating demand [W]. When set the envelope is not
    /// simulated and the radiator circuit delivers this load instead.
    pub space_heat: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BuildingOutputs {
    pub primary_flow: f64,
    pub t_primary_out: f64,
    pub t_room: f64,
    pub t_set: f64,
    /// Heat delivered by the radiator circuit [W].
    pub q_rad: f64,
    pub q_dhw: f64,
    /// Exchanger duty [W].
    pub q_hiu: f64,
    pub unmet: f64,
    pub pv_power: f64,
    pub el_load: f64,
    pub buffer: TankBalance,
    pub envelope: Option<EnvelopeBalance>,
}

/// Advances one building from `t` to `t + dt`.
pub fn step_building(
    params: &BuildingParams,
    fluid: FluidProps,
    state: &mut BuildingState,
    inputs: &BuildingInputs,
    t: f64,
    dt: f64,
) -> Result<BuildingOutputs> {
    let t_set = setpoint_schedule(t);
    let t_top = state.buffer.top();
    let t_ret = params.heating_return_temp;
    let wanted = match inputs.space_heat {
        Some(q) => q.max(0.0),
        None => {
            let valve = state.thermostat.update(&params.thermostat, t_set, state.t_room, dt);
            let supply = t_top.min(params.heating_supply_max);
            valve * radiator_output(supply, state.t_room, &params.radiator)
        }
    };
    let heating_flow = if t_top > t_ret + 0.5 { wanted / (fluid.cp * (t_top - t_ret)) } else { 0.0 };

    let loads = BufferLoads {
        heating_flow,
        heating_return_temp: t_ret,
        dhw_power: inputs.dhw_draw.max(0.0),
        dhw_floor: params.dhw_floor,
        ambient: if inputs.space_heat.is_some() { 20.0 } else { state.t_room },
    };
    let hiu = hiu_step(
        &params.hiu,
        &mut state.hiu,
        &mut state.buffer,
        state.hiu_enabled,
        fluid.cp,
        inputs.t_primary_in,
        &loads,
        dt,
    );
    state.t_primary_out = hiu.primary_out_temp;
    let q_rad = hiu.buffer.discharge_out / dt;

    let envelope = if inputs.space_heat.is_none() {
        let internal = inputs.internal_gains.unwrap_or(params.internal_gains * params.envelope.area);
        let gains = q_rad + internal + params.envelope.g_solar * inputs.solar + hiu.buffer.standing_loss / dt;
        Some(envelope_step(
            &params.envelope,
            &mut state.t_room,
            &mut state.t_wall,
            inputs.t_ambient,
            gains,
            dt,
        ))
    } else {
        state.t_room = t_set;
        state.t_wall = t_set;
        None
    };

    let mut check = vec![state.t_room, state.t_wall, state.t_primary_out];
    check.extend_from_slice(state.buffer.temps());
    ensure_finite(&format!("building {}", params.id), t, &check)?;

    let unmet = (wanted - q_rad).max(0.0) + hiu.buffer.unmet_draw / dt;
    Ok(BuildingOutputs {
        primary_flow: hiu.primary_flow,
        t_primary_out: hiu.primary_out_temp,
        t_room: state.t_room,
        t_set,
        q_rad,
        q_dhw: hiu.buffer.draw / dt,
        q_hiu: hiu.duty,
        unmet,
        pv_power: params.pv_kwp * inputs.solar.max(0.0),
        el_load: params.el_load,
        buffer: hiu.buffer,
        envelope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::common::epoch;

    fn house() -> (BuildingParams, BuildingState) {
        let p = BuildingParams::new("b", 150.0);
        let s = BuildingState::new(&p, FluidProps::default(), 20.0, 60.0).unwrap();
        (p, s)
    }

    #[test]
    fn equilibrium_without_loads() {
        let (mut p, _) = house();
        p.hiu.buffer_ua = 0.0;
        p.internal_gains = 0.0;
        let mut s = BuildingState::new(&p, FluidProps::default(), 20.0, 60.0).unwrap();
        s.hiu_enabled = false;
        let night = epoch(2021, 1, 5) + 3600.0;
        let inp = BuildingInputs { t_primary_in: 60.0, t_ambient: 20.0, ..Default::default() };
        let before = (s.t_room, s.t_wall, s.buffer.temps().to_vec());
        let out = step_building(&p, FluidProps::default(), &mut s, &inp, night, 600.0).unwrap();
        assert_eq!((s.t_room, s.t_wall, s.buffer.temps().to_vec()), before);
        assert_eq!(out.primary_flow, 0.0);
    }

    #[test]
    fn free_cooling_without_heating() {
        let (mut p, mut s) = house();
        p.internal_gains = 0.0;
        p.hiu.buffer_ua = 0.0;
        s.hiu_enabled = false;
        s.buffer.set_temps(&[30.0, 30.0, 30.0]);
        let mut last = s.t_room;
        let inp = BuildingInputs { t_primary_in: 80.0, t_ambient: 0.0, ..Default::default() };
        for k in 0..200 {
            step_building(&p, FluidProps::default(), &mut s, &inp, k as f64 * 900.0, 900.0).unwrap();
            assert!(s.t_room <= last + 1e-12);
            last = s.t_room;
        }
        assert!(s.t_room < 15.0);
    }

    #[test]
    fn heated_house_tracks_setpoint_and_balances() {
        let (p, mut s) = house();
        let t0 = epoch(2021, 1, 10);
        let inp = BuildingInputs { t_primary_in: 80.0, t_ambient: -5.0, dhw_draw: 200.0, ..Default::default() };
        let mut last = BuildingOutputs::default();
        for k in 0..(3 * 1440) {
            let t = t0 + k as f64 * 60.0;
            last = step_building(&p, FluidProps::default(), &mut s, &inp, t, 60.0).unwrap();
            assert!(last.buffer.residual().abs() <= 1e-9 * last.buffer.stored_before);
            let env = last.envelope.unwrap();
            assert!(env.residual().abs() <= 1e-9 * env.stored_before.abs());
            assert!(last.t_primary_out <= 80.0);
            assert!(s.buffer.is_stratified());
        }
        assert!((last.t_room - last.t_set).abs() < 1.0, "room {}", last.t_room);
    }

    #[test]
    fn profile_mode_delivers_requested_heat() {
        let (p, mut s) = house();
        let inp = BuildingInputs { t_primary_in: 80.0, space_heat: Some(3000.0), dhw_draw: 300.0, ..Default::default() };
        let mut out = BuildingOutputs::default();
        for k in 0..600 {
            out = step_building(&p, FluidProps::default(), &mut s, &inp, k as f64 * 60.0, 60.0).unwrap();
        }
        assert!((out.q_rad - 3000.0).abs() < 30.0, "{}", out.q_rad);
        assert!((out.q_hiu - 3300.0).abs() < 300.0, "{}", out.q_hiu);
        assert!(out.unmet < 1.0);
    }
}
