//! Scenario assembly: boundary data, load calibration, the coupled graph of
//! center, supply tree, buildings and return tree, and monthly runs.

mod blocks;

pub use blocks::{BuildingBlock, CenterBlock, NetworkBlock};

use std::collections::BTreeSet;
use std::sync::Arc;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::building::BuildingParams;
use crate::center::{Season, Variant};
use crate::common::{days_in_month, epoch, month_of, FluidProps, J_PER_KWH, SECONDS_PER_DAY, SECONDS_PER_HOUR};
use crate::cosim::{Archive, CouplingGraph, Recorder, RunStats};
use crate::error::{Error, Result};
use crate::kpi::{columns, EnergyLedger};
use crate::loads::{import_profiles, reference_weather, synthesize_profile, DemandProfile, Weather};
use crate::network::{load_pipe_catalog, GroundTemp, Topology};
use crate::scenario::{Calibration, HeatingMode, Month, Scenario};

/// Periodic hourly (or any uniform) boundary data for one year.
#[derive(Debug, Clone)]
pub struct Boundary {
    t0: f64,
    dt: f64,
    t_ambient: Vec<f64>,
    solar: Vec<f64>,
    space: Vec<Vec<f64>>,
    dhw: Vec<Vec<f64>>,
}

impl Boundary {
    fn index(&self, t: f64) -> usize {
        (((t - self.t0) / self.dt).floor() as i64).rem_euclid(self.t_ambient.len() as i64) as usize
    }

    /// (ambient temperature, solar irradiance) held over the sample.
    pub fn weather_at(&self, t: f64) -> (f64, f64) {
        let i = self.index(t);
        (self.t_ambient[i], self.solar[i])
    }

    /// (space heat, hot water) of building `b` [W].
    pub fn load_at(&self, b: usize, t: f64) -> (f64, f64) {
        let i = self.index(t);
        (self.space[b][i], self.dhw[b][i])
    }

    fn month_indices(&self, month: u32) -> Vec<usize> {
        (0..self.t_ambient.len())
            .filter(|&i| month_of(self.t0 + i as f64 * self.dt) == month)
            .collect()
    }

    /// Space heat and hot water of all buildings in `month` [MWh].
    pub fn month_energy(&self, month: u32) -> (f64, f64) {
        let idx = self.month_indices(month);
        let sum = |series: &[Vec<f64>]| {
            series.iter().map(|s| idx.iter().map(|&i| s[i]).sum::<f64>()).sum::<f64>() * self.dt / J_PER_KWH / 1e3
        };
        (sum(&self.space), sum(&self.dhw))
    }
}

/// Outcome of rescaling one month of space heat.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationEntry {
    pub month: Month,
    pub target_mwh: f64,
    pub loss_mwh: f64,
    pub dhw_mwh: f64,
    pub shape_mwh: f64,
    pub shape_gain: f64,
    /// Flat load added across all buildings [W].
    pub base_load: f64,
    /// Reference-variant heat before the correction [MWh].
    pub simulated_mwh: Option<f64>,
}

/// A scenario with its data loaded and ready to run.
pub struct Model {
    pub scenario: Scenario,
    pub fluid: FluidProps,
    pub topology: Arc<Topology>,
    pub buildings: Vec<BuildingParams>,
    pub boundary: Arc<Boundary>,
    pub calibration: Vec<CalibrationEntry>,
}

/// One simulated month of one variant.
#[derive(Debug, Clone)]
pub struct MonthRun {
    pub variant: Variant,
    pub month: Month,
    pub archive: Archive,
    pub ledger: EnergyLedger,
    pub stats: RunStats,
}

impl Model {
    pub fn prepare(scenario: &Scenario) -> Result<Self> {
        let sc = scenario.clone();
        let fluid = FluidProps::new(sc.fluid.cp, sc.fluid.rho)?;
        let catalog = load_pipe_catalog(&sc.grid.pipe_catalog)?;
        let topology = Topology::build(
            &sc.grid.root,
            &sc.grid.segments,
            &catalog,
            sc.grid.max_cell_length,
            GroundTemp::Constant(sc.grid.ground_temp),
        )?;
        let ids: BTreeSet<&str> = sc.buildings.records.iter().map(|r| r.id.as_str()).collect();
        let leaves: BTreeSet<&str> = topology.leaf_names().into_iter().collect();
        if let Some(id) = ids.iter().find(|id| !id.starts_with("b_")) {
            return Err(Error::Schema(format!("building id `{id}` must start with `b_`")));
        }
        if ids != leaves {
            let missing: Vec<_> = ids.symmetric_difference(&leaves).collect();
            return Err(Error::Schema(format!("buildings and network leaves differ: {missing:?}")));
        }
        // network order decides building order
        let order: Vec<String> = topology.leaf_names().iter().map(|s| s.to_string()).collect();
        let mut buildings = Vec::with_capacity(order.len());
        let mut archetypes = Vec::with_capacity(order.len());
        for id in &order {
            let r = sc.buildings.records.iter().find(|r| &r.id == id).expect("checked above");
            buildings.push(sc.building_params(r)?);
            archetypes.push(sc.archetype(r)?);
        }

        let weather = match &sc.loads.weather {
            Some(p) => Weather::read(p)?,
            None => reference_weather(sc.loads.year, sc.loads.seed),
        };
        let grid = *weather.grid();
        let profiles: Vec<DemandProfile> = match &sc.loads.profiles {
            Some(p) => {
                let all = import_profiles(p, &grid)?;
                order
                    .iter()
                    .map(|id| {
                        all.iter()
                            .find(|d| &d.id == id)
                            .cloned()
                            .ok_or_else(|| Error::Schema(format!("profile file has no columns for `{id}`")))
                    })
                    .collect::<Result<_>>()?
            }
            None => order
                .iter()
                .zip(&archetypes)
                .enumerate()
                .map(|(i, (id, a))| synthesize_profile(id, a, &weather, &sc.loads.synth, sc.loads.seed.wrapping_add(1 + i as u64)))
                .collect::<Result<_>>()?,
        };
        let boundary = Boundary {
            t0: grid.t0,
            dt: grid.dt,
            t_ambient: weather.t_ambient.values().to_vec(),
            solar: weather.solar.values().to_vec(),
            space: profiles.iter().map(|p| p.space_heat.values().to_vec()).collect(),
            dhw: profiles.iter().map(|p| p.dhw.values().to_vec()).collect(),
        };

        let mut model = Self {
            fluid,
            topology: Arc::new(topology),
            buildings,
            boundary: Arc::new(boundary),
            calibration: Vec::new(),
            scenario: sc,
        };
        if let Some(cal) = model.scenario.loads.calibration.clone() {
            if model.scenario.loads.mode == HeatingMode::Envelope {
                warn!("load calibration ignored: buildings run their envelope model");
            } else {
                let areas: Vec<f64> = archetypes.iter().map(|a| a.area).collect();
                model.calibration = calibrate(&mut model, &cal, &areas)?;
            }
        }
        Ok(model)
    }

    /// Steady heat losses of network, building buffers and center store for
    /// the given supply temperature [W].
    pub fn loss_estimate(&self, t_supply: f64) -> f64 {
        let t_ret = self.buildings.first().map_or(55.0, |b| b.hiu.t_return_set);
        let ground = self.scenario.grid.ground_temp;
        let net = self.topology.total_ua() * ((t_supply - ground) + (t_ret - ground));
        let mean = 0.5 * (t_supply + t_ret);
        let buffers: f64 = self.buildings.iter().map(|b| b.hiu.buffer_ua * (mean - 20.0)).sum();
        let tank = &self.scenario.center.tank;
        net + buffers + tank.ua * (mean - tank.ambient)
    }

    /// (spin-up start, recording start, end) of a month run.
    pub fn window(&self, month: Month) -> (f64, f64, f64) {
        let year = self.scenario.loads.year;
        let start = epoch(year, month.number(), 1);
        let days = self.scenario.run.days.unwrap_or(u32::MAX).min(days_in_month(year, month.number()));
        let dt = self.scenario.master.dt;
        let spin = (self.scenario.run.spin_up_hours * SECONDS_PER_HOUR / dt).round() * dt;
        (start - spin, start, start + days as f64 * SECONDS_PER_DAY)
    }

    pub fn recorder(&self) -> Recorder {
        let mut cols: Vec<String> = columns::ALL.iter().map(|s| s.to_string()).collect();
        cols.extend(
            [
                "center.t_supply",
                "center.mdot",
                "center.q_demand",
                "center.q_network",
                "center.standing_loss",
                "center.soc",
                "center.capacity_exceeded",
                "center.tank_top",
                "center.tank_bottom",
                "return.t_out",
                "sum(b_*.unmet)",
                "mean(b_*.t_room)",
            ]
            .map(String::from),
        );
        if self.scenario.loads.mode == HeatingMode::Envelope {
            cols.push("b_*.t_room".into());
            cols.push("b_*.t_set".into());
            cols.push("b_*.q_rad".into());
        }
        Recorder::new(cols)
    }

    /// Center, supply tree, buildings, return tree, in that order, with the
    /// return values fed back to the center.
    pub fn graph(&self, variant: Variant, t0: f64) -> Result<CouplingGraph> {
        let params = self.scenario.center.params(variant)?;
        let t_set = params.supply_setpoint(Season::of_month(month_of(t0)));
        let htc = self.scenario.grid.fluid_wall_htc;
        let t_ret = self.buildings.first().map_or(55.0, |b| b.hiu.t_return_set);
        let profile_mode = self.scenario.loads.mode == HeatingMode::Profile;
        let room = self.scenario.buildings.initial_room_temp;

        let mut g = CouplingGraph::new();
        g.add_block(Box::new(CenterBlock::new(params, self.fluid, self.boundary.clone())))?;
        g.add_block(Box::new(NetworkBlock::supply(self.topology.clone(), self.fluid, htc, t_set)))?;
        for (i, b) in self.buildings.iter().enumerate() {
            g.add_block(Box::new(BuildingBlock::new(
                b.clone(),
                self.fluid,
                self.boundary.clone(),
                i,
                profile_mode,
                (room, t_set.min(65.0)),
            )?))?;
        }
        g.add_block(Box::new(NetworkBlock::ret(self.topology.clone(), self.fluid, htc, t_ret)))?;

        g.connect("center.t_supply", "supply.t_inlet")?;
        for b in &self.buildings {
            let id = &b.id;
            g.connect(&format!("supply.t_{id}"), &format!("{id}.t_primary_in"))?;
            g.connect(&format!("{id}.mdot"), &format!("supply.mdot_{id}"))?;
            g.connect(&format!("{id}.mdot"), &format!("return.mdot_{id}"))?;
            g.connect(&format!("{id}.t_return"), &format!("return.t_{id}"))?;
        }
        g.connect("return.t_out", "center.t_return")?;
        g.connect("return.mdot", "center.mdot_return")?;
        Ok(g)
    }

    pub fn run_month(&self, variant: Variant, month: Month) -> Result<MonthRun> {
        let (t0, start, end) = self.window(month);
        let mut run = self.run_window(variant, t0, start, end)?;
        run.month = month;
        Ok(run)
    }

    /// Runs `[t0, end)` and keeps the ledger from `start` on.
    pub fn run_window(&self, variant: Variant, t0: f64, start: f64, end: f64) -> Result<MonthRun> {
        let month = Month::ALL[(month_of(start) - 1) as usize];
        let mut graph = self.graph(variant, t0)?;
        let (archive, stats) = graph.run(&self.scenario.master, t0, end, start, &self.recorder())?;
        let ledger = EnergyLedger::from_archive(&archive)?;
        info!(
            "{variant} {month}: {} steps, {} iterations, {} not converged, heat {:.2} MWh",
            stats.steps,
            stats.iterations,
            stats.nonconverged_steps,
            ledger.heat_produced() / 1e3
        );
        Ok(MonthRun {
            variant,
            month,
            archive,
            ledger,
            stats,
        })
    }
}

/// Rescales the space-heat series of each target month so that loads plus
/// losses meet the target. The synthesized shape is amplified by at most
/// `max_shape_gain`; any remainder becomes a flat load split by area. Losses
/// come from a steady estimate, optionally corrected by one simulated month
/// of the reference variant.
fn calibrate(model: &mut Model, cal: &Calibration, areas: &[f64]) -> Result<Vec<CalibrationEntry>> {
    let original = (*model.boundary).clone();
    let loss_w = model.loss_estimate(cal.supply_temp);
    let mut plan = Vec::new();
    for (&month, &target) in &cal.targets_mwh {
        let idx = original.month_indices(month.number());
        if idx.is_empty() {
            return Err(Error::Schema(format!("calibration month {month} is not covered by the weather data")));
        }
        let hours = idx.len() as f64 * original.dt / SECONDS_PER_HOUR;
        let (shape, dhw) = original.month_energy(month.number());
        plan.push(CalibrationEntry {
            month,
            target_mwh: target,
            loss_mwh: loss_w * hours / 1e6,
            dhw_mwh: dhw,
            shape_mwh: shape,
            shape_gain: 0.0,
            base_load: 0.0,
            simulated_mwh: None,
        });
    }
    let mut boundary = original.clone();
    apply_plan(&mut boundary, &original, &mut plan, cal, areas);
    model.boundary = Arc::new(boundary);

    if cal.refine {
        let runs: Vec<Result<f64>> = plan
            .iter()
            .map(|e| {
                let (t0, start, _) = model.window(e.month);
                let end = start + days_in_month(model.scenario.loads.year, e.month.number()) as f64 * SECONDS_PER_DAY;
                model.run_window(cal.reference, t0, start, end).map(|r| r.ledger.heat_produced() / 1e3)
            })
            .collect();
        for (e, heat) in plan.iter_mut().zip(runs) {
            let heat = heat?;
            e.loss_mwh += heat - e.target_mwh;
            e.simulated_mwh = Some(heat);
        }
        let mut boundary = original.clone();
        apply_plan(&mut boundary, &original, &mut plan, cal, areas);
        model.boundary = Arc::new(boundary);
    }
    for e in &plan {
        info!(
            "{}: shape gain {:.3}, base load {:.0} W, losses {:.2} MWh",
            e.month, e.shape_gain, e.base_load, e.loss_mwh
        );
    }
    Ok(plan)
}

fn apply_plan(boundary: &mut Boundary, original: &Boundary, plan: &mut [CalibrationEntry], cal: &Calibration, areas: &[f64]) {
    let total_area: f64 = areas.iter().sum();
    for e in plan.iter_mut() {
        let idx = original.month_indices(e.month.number());
        let hours = idx.len() as f64 * original.dt / SECONDS_PER_HOUR;
        let rest = e.target_mwh - e.loss_mwh - e.dhw_mwh;
        if rest < 0.0 {
            warn!("{}: losses and hot water exceed the {} MWh target", e.month, e.target_mwh);
        }
        let rest = rest.max(0.0);
        e.shape_gain = if e.shape_mwh > 0.0 { (rest / e.shape_mwh).min(cal.max_shape_gain) } else { 0.0 };
        e.base_load = (rest - e.shape_gain * e.shape_mwh).max(0.0) * 1e6 / hours;
        for (b, series) in boundary.space.iter_mut().enumerate() {
            let share = e.base_load * areas[b] / total_area;
            for &i in &idx {
                series[i] = e.shape_gain * original.space[b][i] + share;
            }
        }
    }
}
