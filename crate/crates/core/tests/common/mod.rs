//! Fixtures shared by the integration tests and the acceptance harness.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use heatgrid::building::{step_building, BuildingInputs, BuildingState};
use heatgrid::cosim::{Block, CouplingGraph, PortSpec, Recorder, Unit};
use heatgrid::network::{advance_thermal, segment_flows, Direction, Inlet, NetworkState};
use heatgrid::scenario::Scenario;
use heatgrid::sim::{BuildingBlock, Model, NetworkBlock};

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

pub fn scenario(name: &str) -> Scenario {
    Scenario::load(&repo_root().join("scenarios").join(name)).unwrap()
}

/// Two envelope-model houses on a short branch.
pub fn two_building_scenario() -> Scenario {
    let text = r#"
name = "pair"

[grid]
pipe_catalog = "../data/pipe_catalog.csv"
segments = [
  { from = "center", to = "j1", dn = "DN40", length_m = 40.0 },
  { from = "j1", to = "b_1", dn = "DN25", length_m = 10.0 },
  { from = "j1", to = "b_2", dn = "DN25", length_m = 25.0 },
]

[buildings]
records = [
  { id = "b_1", A_C_m2 = 186.8 },
  { id = "b_2", A_C_m2 = 140.0 },
]

[loads]
mode = "envelope"
year = 2021
seed = 3
"#;
    Scenario::from_toml(text, &repo_root().join("scenarios")).unwrap()
}

/// Fixed-temperature plant stand-in.
struct Source {
    t: f64,
    outputs: Vec<PortSpec>,
}

impl Block for Source {
    fn id(&self) -> &str {
        "source"
    }
    fn inputs(&self) -> &[PortSpec] {
        &[]
    }
    fn outputs(&self) -> &[PortSpec] {
        &self.outputs
    }
    fn init(&mut self, _t0: f64) -> heatgrid::Result<()> {
        Ok(())
    }
    fn set_input(&mut self, _port: usize, _value: f64) {}
    fn do_step(&mut self, _t: f64, _dt: f64) -> heatgrid::Result<()> {
        Ok(())
    }
    fn output(&self, _port: usize) -> f64 {
        self.t
    }
    fn save(&mut self) {}
    fn restore(&mut self) {}
}

const ROOM: f64 = 21.0;

fn initial_buffer(t_supply: f64) -> f64 {
    t_supply.min(65.0)
}

/// Room temperatures per step and building from the co-simulation master.
pub fn cosim_rooms(model: &Model, t_supply: f64, t0: f64, steps: usize) -> Vec<Vec<f64>> {
    let fluid = model.fluid;
    let htc = model.scenario.grid.fluid_wall_htc;
    let mut g = CouplingGraph::new();
    g.add_block(Box::new(Source {
        t: t_supply,
        outputs: vec![PortSpec::new("t_supply", Unit::Celsius)],
    }))
    .unwrap();
    g.add_block(Box::new(NetworkBlock::supply(model.topology.clone(), fluid, htc, t_supply))).unwrap();
    for (i, b) in model.buildings.iter().enumerate() {
        let block = BuildingBlock::new(b.clone(), fluid, model.boundary.clone(), i, false, (ROOM, initial_buffer(t_supply))).unwrap();
        g.add_block(Box::new(block)).unwrap();
    }
    g.connect("source.t_supply", "supply.t_inlet").unwrap();
    for b in &model.buildings {
        g.connect(&format!("supply.t_{}", b.id), &format!("{}.t_primary_in", b.id)).unwrap();
        g.connect(&format!("{}.mdot", b.id), &format!("supply.mdot_{}", b.id)).unwrap();
    }
    let cfg = model.scenario.master;
    let end = t0 + steps as f64 * cfg.dt;
    let (archive, _) = g.run(&cfg, t0, end, t0, &Recorder::new(["b_*.t_room"])).unwrap();
    model
        .buildings
        .iter()
        .map(|b| archive.column(&format!("{}.t_room", b.id)).unwrap().to_vec())
        .collect()
}

/// The same network and houses solved as one system: every step iterates
/// network and buildings together until the leaf flows stop changing.
pub fn monolithic_rooms(model: &Model, t_supply: f64, t0: f64, steps: usize) -> Vec<Vec<f64>> {
    let fluid = model.fluid;
    let htc = model.scenario.grid.fluid_wall_htc;
    let dt = model.scenario.master.dt;
    let topo = &*model.topology;
    let mut net = NetworkState::uniform(topo, t_supply);
    let mut houses: Vec<BuildingState> = model
        .buildings
        .iter()
        .map(|b| BuildingState::new(b, fluid, ROOM, initial_buffer(t_supply)).unwrap())
        .collect();
    let mut flows = vec![0.0; houses.len()];
    let mut rooms = vec![Vec::with_capacity(steps); houses.len()];
    for k in 0..steps {
        let t = t0 + k as f64 * dt;
        let (t_amb, solar) = model.boundary.weather_at(t);
        let mut result = None;
        for _ in 0..200 {
            let mut n = net.clone();
            let mut h = houses.clone();
            n.flows = segment_flows(topo, &flows);
            let step = advance_thermal(&mut n, topo, Direction::Supply, Inlet::Root(t_supply), t, dt, &fluid, htc).unwrap();
            let mut new_flows = Vec::with_capacity(h.len());
            for (i, (p, s)) in model.buildings.iter().zip(h.iter_mut()).enumerate() {
                let inputs = BuildingInputs {
                    t_primary_in: step.leaf_temps[i],
                    t_ambient: t_amb,
                    solar,
                    internal_gains: None,
                    dhw_draw: model.boundary.load_at(i, t).1,
                    space_heat: None,
                };
                new_flows.push(step_building(p, fluid, s, &inputs, t, dt).unwrap().primary_flow);
            }
            let change = flows.iter().zip(&new_flows).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            flows = new_flows;
            result = Some((n, h));
            if change < 1e-12 {
                break;
            }
        }
        let (n, h) = result.unwrap();
        net = n;
        houses = h;
        for (r, s) in rooms.iter_mut().zip(&houses) {
            r.push(s.t_room);
        }
    }
    rooms
}

pub fn rms_difference(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for (x, y) in a.iter().zip(b) {
        for (p, q) in x.iter().zip(y) {
            sum += (p - q).powi(2);
            n += 1;
        }
    }
    (sum / n as f64).sqrt()
}
