use serde::{Deserialize, Serialize};

use super::dispatch::{dispatch_v1, dispatch_v3, dispatch_v4, CycleBand, CycleState, Setpoints, TankSensors};
use super::units::{hp_cop, ChpUnit, Fuel, HeatPumpUnit, PeakBoiler};
use super::{Season, Variant};
use crate::common::{month_of, FluidProps};
use crate::error::{ensure_finite, Error, Result};
use crate::storage::{StratifiedTank, TankPorts};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TankParams {
    /// Total volume of the store [m3] (two 7 m3 tanks in series).
    pub volume: f64,
    pub layers: usize,
    pub ua: f64,
    pub ambient: f64,
    /// Relative depths of the cycling sensors.
    pub sensor_upper: f64,
    pub sensor_lower: f64,
}

impl Default for TankParams {
    fn default() -> Self {
        Self {
            volume: 14.0,
            layers: 10,
            ua: 6.0,
            ambient: 15.0,
            sensor_upper: 0.25,
            sensor_lower: 0.75,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CenterParams {
    pub variant: Variant,
    pub tank: TankParams,
    pub chp: Option<ChpUnit>,
    pub boiler: Option<PeakBoiler>,
    pub hp: Option<HeatPumpUnit>,
    pub t_supply: f64,
    /// Summer supply temperature when the heat pump runs alone.
    pub t_supply_summer: f64,
    /// Heat-pump stage outlet in the winter cascade.
    pub hp_stage_temp: f64,
    pub cycle: CycleBand,
    /// Time constant of the demand estimate [s].
    pub demand_tau: f64,
    pub soc_target: f64,
    pub soc_tau: f64,
    /// Temperature counted as empty for the state of charge.
    pub soc_ref_temp: f64,
    pub max_charge_flow: f64,
}

impl CenterParams {
    pub fn for_variant(variant: Variant) -> Self {
        let (chp, boiler, hp) = match variant {
            Variant::V1 => (Some(ChpUnit::default()), Some(PeakBoiler::default()), None),
            Variant::V2 => (
                Some(ChpUnit {
                    fuel: Fuel::Bm,
                    ..ChpUnit::default()
                }),
                Some(PeakBoiler {
                    fuel: Fuel::Bm,
                    ..PeakBoiler::default()
                }),
                None,
            ),
            Variant::V3 => (None, Some(PeakBoiler::default()), Some(HeatPumpUnit::default())),
            Variant::V4 => (
                Some(ChpUnit {
                    fuel: Fuel::H2,
                    ..ChpUnit::default()
                }),
                None,
                Some(HeatPumpUnit::air()),
            ),
        };
        Self {
            variant,
            tank: TankParams::default(),
            chp,
            boiler,
            hp,
            t_supply: 80.0,
            t_supply_summer: 70.0,
            hp_stage_temp: 65.0,
            cycle: CycleBand::default(),
            demand_tau: 1800.0,
            soc_target: 0.6,
            soc_tau: 7200.0,
            soc_ref_temp: 55.0,
            max_charge_flow: 20.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let need = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("variant {} needs {what}", self.variant)))
            }
        };
        match self.variant {
            Variant::V1 | Variant::V2 => {
                need(self.chp.is_some(), "a CHP unit")?;
                need(self.boiler.is_some(), "a peak boiler")?;
            }
            Variant::V3 => {
                need(self.hp.is_some(), "a heat pump")?;
                need(self.boiler.is_some(), "a peak boiler")?;
            }
            Variant::V4 => {
                need(self.chp.is_some(), "a CHP unit")?;
                need(self.hp.is_some(), "a heat pump")?;
            }
        }
        if let Some(c) = &self.chp {
            c.validate()?;
        }
        if let Some(b) = &self.boiler {
            b.validate()?;
        }
        if let Some(h) = &self.hp {
            h.validate()?;
        }
        let t = &self.tank;
        if !(t.volume > 0.0) || t.layers < 2 || !(self.demand_tau > 0.0) || !(self.soc_tau > 0.0) {
            return Err(Error::InvalidParameter("center store and controller constants must be positive".into()));
        }
        Ok(())
    }

    /// Supply setpoint for the season.
    pub fn supply_setpoint(&self, season: Season) -> f64 {
        if self.variant == Variant::V4 && season == Season::Summer {
            self.t_supply_summer
        } else {
            self.t_supply
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterState {
    pub tank: StratifiedTank,
    /// Smoothed network demand [W].
    pub q_demand: f64,
    pub cycle: CycleState,
    pub primed: bool,
}

impl CenterState {
    /// Store charged to `soc_target` at the supply setpoint.
    pub fn new(params: &CenterParams, fluid: FluidProps, season: Season) -> Result<Self> {
        params.validate()?;
        let tp = &params.tank;
        let mut tank = StratifiedTank::new(fluid, tp.volume, tp.layers, tp.ua, params.soc_ref_temp)?;
        let hot = (params.soc_target * tp.layers as f64).round() as usize;
        let t_set = params.supply_setpoint(season);
        let temps: Vec<f64> = (0..tp.layers)
            .map(|i| if i < hot { t_set } else { params.soc_ref_temp })
            .collect();
        tank.set_temps(&temps);
        Ok(Self {
            tank,
            q_demand: 0.0,
            cycle: CycleState::default(),
            primed: false,
        })
    }

    pub fn soc(&self, params: &CenterParams, t_set: f64) -> f64 {
        let span = (t_set - params.soc_ref_temp).max(1.0);
        let temps = self.tank.temps();
        temps
            .iter()
            .map(|&t| ((t - params.soc_ref_temp) / span).clamp(0.0, 1.0))
            .sum::<f64>()
            / temps.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterInputs {
    pub mdot_return: f64,
    pub t_return: f64,
    pub t_ambient: f64,
}

/// Mean powers over the step [W] unless noted.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CenterOutputs {
    pub t_supply: f64,
    pub mdot: f64,
    pub q_chp: f64,
    pub q_boiler: f64,
    pub q_hp: f64,
    pub fuel_ng: f64,
    pub fuel_bm: f64,
    pub fuel_h2: f64,
    pub elec_gen: f64,
    pub elec_cons: f64,
    pub elec_sold: f64,
    pub elec_bought: f64,
    /// Heat-pump heat whose electricity the CHP covered in this step.
    pub hp_heat_covered: f64,
    /// Demand estimate used by dispatch.
    pub q_demand: f64,
    /// Heat handed to the network (supply minus return enthalpy).
    pub q_network: f64,
    pub standing_loss: f64,
    pub soc: f64,
    pub capacity_exceeded: bool,
    pub setpoints: Setpoints,
    /// First-law residual of the store [J].
    pub tank_residual: f64,
}

impl CenterOutputs {
    pub fn heat(&self) -> f64 {
        self.q_chp + self.q_boiler + self.q_hp
    }
}

pub fn step_center(
    params: &CenterParams,
    fluid: FluidProps,
    state: &mut CenterState,
    inputs: &CenterInputs,
    t: f64,
    dt: f64,
) -> Result<CenterOutputs> {
    let cp = fluid.cp;
    let season = Season::of_month(month_of(t));
    let t_set = params.supply_setpoint(season);
    let mdot = inputs.mdot_return.max(0.0);
    let q_now = (mdot * cp * (t_set - inputs.t_return)).max(0.0);
    if !state.primed {
        state.q_demand = q_now;
        state.primed = true;
    }

    let soc = state.soc(params, t_set);
    let full = state.tank.total_mass() * cp * (t_set - params.soc_ref_temp).max(1.0);
    let q_est = state.q_demand;
    let q_cmd = (q_est + (params.soc_target - soc) * full / params.soc_tau).max(0.0);
    let sensors = TankSensors {
        upper: state.tank.sensor(params.tank.sensor_upper),
        lower: state.tank.sensor(params.tank.sensor_lower),
    };
    let t_bottom = state.tank.bottom();

    let hp_source = params.hp.map(|h| h.source_temp(inputs.t_ambient));
    let hp_nominal_sink = match (params.variant, season) {
        (Variant::V4, Season::Winter) => params.hp_stage_temp,
        _ => t_set,
    };
    let hp_capacity = match (&params.hp, hp_source) {
        (Some(h), Some(src)) => h.capacity(hp_cop(src, hp_nominal_sink.max(src + 1.0), h.carnot_eta)?),
        _ => 0.0,
    };
    // the peak unit only joins when the estimate itself exceeds the base unit
    let limit = |base_max: f64| if q_est <= base_max { q_cmd.min(base_max) } else { q_cmd };

    let sp = match params.variant {
        Variant::V1 | Variant::V2 => {
            let chp = params.chp.as_ref().expect("validated");
            let boiler = params.boiler.as_ref().expect("validated");
            dispatch_v1(limit(chp.q_max), chp, boiler, t_set, &params.cycle, &sensors, &mut state.cycle)
        }
        Variant::V3 => {
            let hp = params.hp.as_ref().expect("validated");
            let boiler = params.boiler.as_ref().expect("validated");
            dispatch_v3(limit(hp_capacity), hp_capacity, hp.q_min(), boiler, t_set, &params.cycle, &sensors, &mut state.cycle)
        }
        Variant::V4 => {
            let chp = params.chp.as_ref().expect("validated");
            let hp = params.hp.as_ref().expect("validated");
            let q = match season {
                Season::Summer => limit(hp_capacity),
                Season::Winter => q_cmd,
            };
            dispatch_v4(
                q,
                season,
                t_bottom,
                chp,
                hp_capacity,
                hp.q_min(),
                params.hp_stage_temp,
                t_set,
                &params.cycle,
                &sensors,
                &mut state.cycle,
            )
        }
    };

    // Generators heat water from the store bottom into the top; never hotter
    // water than the top already holds so the charge loop cannot cool it.
    let target = sp.total();
    let charge_temp = sp.t_out.max(state.tank.top());
    let charge_flow = if target > 0.0 {
        (target / (cp * (charge_temp - t_bottom).max(3.0))).min(params.max_charge_flow)
    } else {
        0.0
    };
    let bal = state.tank.step(
        &TankPorts {
            charge_flow,
            charge_temp,
            discharge_flow: mdot,
            discharge_return_temp: inputs.t_return,
            top_draw: 0.0,
            draw_floor: 0.0,
            ambient: params.tank.ambient,
        },
        dt,
    );
    let produced = bal.charge_in.max(0.0) / dt;
    let scale = if target > 0.0 { produced / target } else { 0.0 };

    let mut out = CenterOutputs {
        t_supply: if mdot > 0.0 { bal.top_outlet_temp } else { state.tank.top() },
        mdot,
        q_chp: sp.chp * scale,
        q_boiler: sp.boiler * scale,
        q_hp: sp.hp * scale,
        q_demand: q_est,
        q_network: bal.discharge_out / dt,
        standing_loss: bal.standing_loss / dt,
        soc,
        capacity_exceeded: sp.capacity_exceeded,
        setpoints: sp,
        tank_residual: bal.residual(),
        ..Default::default()
    };
    let mut add_fuel = |fuel: Fuel, amount: f64| match fuel {
        Fuel::Ng => out.fuel_ng += amount,
        Fuel::Bm => out.fuel_bm += amount,
        Fuel::H2 => out.fuel_h2 += amount,
    };
    if let Some(chp) = &params.chp {
        add_fuel(chp.fuel, chp.fuel_for(out.q_chp));
    }
    if let Some(b) = &params.boiler {
        add_fuel(b.fuel, b.fuel_for(out.q_boiler));
    }
    if let (Some(hp), Some(src)) = (&params.hp, hp_source) {
        if out.q_hp > 0.0 {
            let cop = hp_cop(src, sp.hp_sink.max(src + 1.0), hp.carnot_eta)?;
            out.elec_cons = out.q_hp / cop;
        }
    }
    out.elec_gen = params.chp.as_ref().map_or(0.0, |c: &ChpUnit| c.electricity(out.q_chp));
    out.elec_sold = (out.elec_gen - out.elec_cons).max(0.0);
    out.elec_bought = (out.elec_cons - out.elec_gen).max(0.0);
    if out.q_chp > 0.0 && out.elec_gen >= out.elec_cons {
        out.hp_heat_covered = out.q_hp;
    }

    let alpha = 1.0 - (-dt / params.demand_tau).exp();
    state.q_demand += alpha * (q_now - state.q_demand);

    let mut check = vec![out.t_supply, out.heat(), state.q_demand];
    check.extend_from_slice(state.tank.temps());
    ensure_finite("center", t, &check)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::common::epoch;

    fn run(variant: Variant, t0: f64, mdot: f64, t_ret: f64, t_amb: f64, hours: usize) -> (CenterState, Vec<CenterOutputs>) {
        let p = CenterParams::for_variant(variant);
        let fluid = FluidProps::default();
        let mut s = CenterState::new(&p, fluid, Season::of_month(month_of(t0))).unwrap();
        let inp = CenterInputs { mdot_return: mdot, t_return: t_ret, t_ambient: t_amb };
        let outs = (0..hours * 60)
            .map(|k| step_center(&p, fluid, &mut s, &inp, t0 + k as f64 * 60.0, 60.0).unwrap())
            .collect();
        (s, outs)
    }

    #[test]
    fn steady_load_is_met_at_setpoint() {
        // 0.8 kg/s returning at 55 degC: 83.7 kW at 80 degC supply
        let (s, outs) = run(Variant::V1, epoch(2021, 1, 4), 0.8, 55.0, 0.0, 24);
        let last = outs.last().unwrap();
        assert!((last.t_supply - 80.0).abs() < 2.0, "supply {}", last.t_supply);
        assert_eq!(last.q_boiler, 0.0);
        assert!(s.tank.is_stratified());
        let day: f64 = outs[outs.len() - 720..].iter().map(|o| o.heat()).sum::<f64>() / 720.0;
        assert!((day - 0.8 * 4186.0 * 25.0).abs() < 0.05 * 83.7e3, "mean heat {day}");
        for o in &outs {
            assert!(o.tank_residual.abs() < 1e-6 * s.tank.stored_energy());
            let chp = ChpUnit::default();
            assert!(o.q_chp == 0.0 || o.setpoints.chp >= chp.q_min());
        }
    }

    #[test]
    fn peak_load_uses_boiler() {
        let (_, outs) = run(Variant::V1, epoch(2021, 1, 4), 2.5, 50.0, -10.0, 12);
        let last = outs.last().unwrap();
        assert!(last.q_boiler > 0.0 && last.setpoints.chp == 108e3);
        assert!((last.t_supply - 80.0).abs() < 2.0);
    }

    #[test]
    fn zero_demand_only_covers_standing_loss() {
        let (_, outs) = run(Variant::V1, epoch(2021, 8, 2), 0.0, 55.0, 18.0, 48);
        let heat: f64 = outs.iter().map(|o| o.heat()).sum();
        let loss: f64 = outs.iter().map(|o| o.standing_loss).sum();
        assert!(heat <= loss * 1.5 + 54e3 * 60.0, "heat {heat} loss {loss}");
    }

    #[test]
    fn v4_summer_runs_heat_pump_alone_at_70() {
        let (_, outs) = run(Variant::V4, epoch(2021, 8, 2), 0.6, 50.0, 20.0, 24);
        let last = outs.last().unwrap();
        assert!((last.t_supply - 70.0).abs() < 2.0, "supply {}", last.t_supply);
        assert!(outs.iter().all(|o| o.q_chp == 0.0));
        assert!(outs.iter().map(|o| o.elec_bought).sum::<f64>() > 0.0);
    }

    #[test]
    fn v4_winter_chp_covers_heat_pump() {
        let (_, outs) = run(Variant::V4, epoch(2021, 1, 4), 1.0, 55.0, 0.0, 24);
        let gen: f64 = outs.iter().map(|o| o.elec_gen).sum();
        let cons: f64 = outs.iter().map(|o| o.elec_cons).sum();
        assert!(cons > 0.0 && cons <= gen, "gen {gen} cons {cons}");
    }

    #[test]
    fn fuel_accounting() {
        let (_, outs) = run(Variant::V2, epoch(2021, 1, 4), 1.5, 50.0, 0.0, 6);
        for o in &outs {
            assert_eq!(o.fuel_ng, 0.0);
            let chp = ChpUnit::default();
            let expect = chp.fuel_for(o.q_chp) + o.q_boiler / 0.95;
            assert!((o.fuel_bm - expect).abs() <= 1e-9 * expect.max(1.0));
        }
    }
}
