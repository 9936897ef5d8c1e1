use std::sync::Arc;

use super::Boundary;
use crate::building::{step_building, BuildingInputs, BuildingOutputs, BuildingParams, BuildingState};
use crate::center::{step_center, CenterInputs, CenterOutputs, CenterParams, CenterState, Season};
use crate::common::{month_of, FluidProps};
use crate::cosim::{Block, PortSpec, Unit};
use crate::error::Result;
use crate::network::{advance_thermal, segment_flows, Direction, Inlet, NetworkState, Topology};

const CENTER_OUTPUTS: [(&str, Unit); 20] = [
    ("t_supply", Unit::Celsius),
    ("mdot", Unit::KgPerS),
    ("q_chp", Unit::Watt),
    ("q_boiler", Unit::Watt),
    ("q_hp", Unit::Watt),
    ("fuel_ng", Unit::Watt),
    ("fuel_bm", Unit::Watt),
    ("fuel_h2", Unit::Watt),
    ("elec_gen", Unit::Watt),
    ("elec_cons", Unit::Watt),
    ("elec_sold", Unit::Watt),
    ("elec_bought", Unit::Watt),
    ("hp_heat_covered", Unit::Watt),
    ("q_demand", Unit::Watt),
    ("q_network", Unit::Watt),
    ("standing_loss", Unit::Watt),
    ("soc", Unit::Dimensionless),
    ("capacity_exceeded", Unit::Dimensionless),
    ("tank_top", Unit::Celsius),
    ("tank_bottom", Unit::Celsius),
];

pub struct CenterBlock {
    params: CenterParams,
    fluid: FluidProps,
    boundary: Arc<Boundary>,
    state: Option<CenterState>,
    saved: Option<CenterState>,
    mdot_return: f64,
    t_return: f64,
    out: CenterOutputs,
    inputs: Vec<PortSpec>,
    outputs: Vec<PortSpec>,
}

impl CenterBlock {
    pub fn new(params: CenterParams, fluid: FluidProps, boundary: Arc<Boundary>) -> Self {
        Self {
            params,
            fluid,
            boundary,
            state: None,
            saved: None,
            mdot_return: 0.0,
            t_return: 55.0,
            out: CenterOutputs::default(),
            inputs: vec![
                PortSpec::new("mdot_return", Unit::KgPerS),
                PortSpec::new("t_return", Unit::Celsius),
            ],
            outputs: CENTER_OUTPUTS.iter().map(|&(n, u)| PortSpec::new(n, u)).collect(),
        }
    }
}

impl Block for CenterBlock {
    fn id(&self) -> &str {
        "center"
    }
    fn inputs(&self) -> &[PortSpec] {
        &self.inputs
    }
    fn outputs(&self) -> &[PortSpec] {
        &self.outputs
    }

    fn init(&mut self, t0: f64) -> Result<()> {
        let season = Season::of_month(month_of(t0));
        let state = CenterState::new(&self.params, self.fluid, season)?;
        self.out = CenterOutputs {
            t_supply: state.tank.top(),
            ..CenterOutputs::default()
        };
        self.state = Some(state);
        Ok(())
    }

    fn set_input(&mut self, port: usize, value: f64) {
        match port {
            0 => self.mdot_return = value,
            _ => self.t_return = value,
        }
    }

    fn do_step(&mut self, t: f64, dt: f64) -> Result<()> {
        let state = self.state.as_mut().expect("initialised");
        let (t_ambient, _) = self.boundary.weather_at(t);
        let inputs = CenterInputs {
            mdot_return: self.mdot_return,
            t_return: self.t_return,
            t_ambient,
        };
        self.out = step_center(&self.params, self.fluid, state, &inputs, t, dt)?;
        Ok(())
    }

    fn output(&self, port: usize) -> f64 {
        let o = &self.out;
        let tank = self.state.as_ref().map(|s| (s.tank.top(), s.tank.bottom())).unwrap_or_default();
        match port {
            0 => o.t_supply,
            1 => o.mdot,
            2 => o.q_chp,
            3 => o.q_boiler,
            4 => o.q_hp,
            5 => o.fuel_ng,
            6 => o.fuel_bm,
            7 => o.fuel_h2,
            8 => o.elec_gen,
            9 => o.elec_cons,
            10 => o.elec_sold,
            11 => o.elec_bought,
            12 => o.hp_heat_covered,
            13 => o.q_demand,
            14 => o.q_network,
            15 => o.standing_loss,
            16 => o.soc,
            17 => f64::from(u8::from(o.capacity_exceeded)),
            18 => tank.0,
            _ => tank.1,
        }
    }

    fn save(&mut self) {
        self.saved.clone_from(&self.state);
    }

    fn restore(&mut self) {
        self.state.clone_from(&self.saved);
    }
}

/// One pipe tree. The supply side takes the center temperature and the leaf
/// flows; the return side takes leaf flows and leaf return temperatures.
pub struct NetworkBlock {
    id: String,
    direction: Direction,
    topo: Arc<Topology>,
    fluid: FluidProps,
    htc: f64,
    initial_temp: f64,
    state: NetworkState,
    saved: NetworkState,
    t_inlet: f64,
    leaf_flows: Vec<f64>,
    leaf_temps: Vec<f64>,
    out_leaf_temps: Vec<f64>,
    out_root: f64,
    out_loss: f64,
    inputs: Vec<PortSpec>,
    outputs: Vec<PortSpec>,
}

impl NetworkBlock {
    pub fn supply(topo: Arc<Topology>, fluid: FluidProps, htc: f64, initial_temp: f64) -> Self {
        let leaves: Vec<String> = topo.leaf_names().iter().map(|s| s.to_string()).collect();
        let mut inputs = vec![PortSpec::new("t_inlet", Unit::Celsius)];
        inputs.extend(leaves.iter().map(|l| PortSpec::new(format!("mdot_{l}"), Unit::KgPerS)));
        let mut outputs: Vec<PortSpec> = leaves.iter().map(|l| PortSpec::new(format!("t_{l}"), Unit::Celsius)).collect();
        outputs.push(PortSpec::new("q_loss", Unit::Watt));
        Self::build("supply", Direction::Supply, topo, fluid, htc, initial_temp, inputs, outputs)
    }

    pub fn ret(topo: Arc<Topology>, fluid: FluidProps, htc: f64, initial_temp: f64) -> Self {
        let leaves: Vec<String> = topo.leaf_names().iter().map(|s| s.to_string()).collect();
        let mut inputs: Vec<PortSpec> = leaves.iter().map(|l| PortSpec::new(format!("mdot_{l}"), Unit::KgPerS)).collect();
        inputs.extend(leaves.iter().map(|l| PortSpec::new(format!("t_{l}"), Unit::Celsius)));
        let outputs = vec![
            PortSpec::new("t_out", Unit::Celsius),
            PortSpec::new("mdot", Unit::KgPerS),
            PortSpec::new("q_loss", Unit::Watt),
        ];
        Self::build("return", Direction::Return, topo, fluid, htc, initial_temp, inputs, outputs)
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        id: &str,
        direction: Direction,
        topo: Arc<Topology>,
        fluid: FluidProps,
        htc: f64,
        initial_temp: f64,
        inputs: Vec<PortSpec>,
        outputs: Vec<PortSpec>,
    ) -> Self {
        let n = topo.leaves().len();
        let state = NetworkState::uniform(&topo, initial_temp);
        Self {
            id: id.to_string(),
            direction,
            saved: state.clone(),
            state,
            topo,
            fluid,
            htc,
            initial_temp,
            t_inlet: initial_temp,
            leaf_flows: vec![0.0; n],
            leaf_temps: vec![initial_temp; n],
            out_leaf_temps: vec![initial_temp; n],
            out_root: initial_temp,
            out_loss: 0.0,
            inputs,
            outputs,
        }
    }
}

impl Block for NetworkBlock {
    fn id(&self) -> &str {
        &self.id
    }
    fn inputs(&self) -> &[PortSpec] {
        &self.inputs
    }
    fn outputs(&self) -> &[PortSpec] {
        &self.outputs
    }

    fn init(&mut self, _t0: f64) -> Result<()> {
        self.state = NetworkState::uniform(&self.topo, self.initial_temp);
        let n = self.leaf_flows.len();
        self.out_leaf_temps = vec![self.initial_temp; n];
        self.out_root = self.initial_temp;
        self.out_loss = 0.0;
        Ok(())
    }

    fn set_input(&mut self, port: usize, value: f64) {
        let n = self.leaf_flows.len();
        match self.direction {
            Direction::Supply => match port {
                0 => self.t_inlet = value,
                p => self.leaf_flows[p - 1] = value.max(0.0),
            },
            Direction::Return => {
                if port < n {
                    self.leaf_flows[port] = value.max(0.0);
                } else {
                    self.leaf_temps[port - n] = value;
                }
            }
        }
    }

    fn do_step(&mut self, t: f64, dt: f64) -> Result<()> {
        self.state.flows = segment_flows(&self.topo, &self.leaf_flows);
        let inlet = match self.direction {
            Direction::Supply => Inlet::Root(self.t_inlet),
            Direction::Return => Inlet::Leaves(&self.leaf_temps),
        };
        let step = advance_thermal(&mut self.state, &self.topo, self.direction, inlet, t, dt, &self.fluid, self.htc)?;
        if self.direction == Direction::Supply {
            self.out_leaf_temps = step.leaf_temps;
        }
        self.out_root = step.root_temp;
        self.out_loss = step.q_loss;
        Ok(())
    }

    fn output(&self, port: usize) -> f64 {
        match self.direction {
            Direction::Supply => self.out_leaf_temps.get(port).copied().unwrap_or(self.out_loss),
            Direction::Return => match port {
                0 => self.out_root,
                1 => self.leaf_flows.iter().sum(),
                _ => self.out_loss,
            },
        }
    }

    fn save(&mut self) {
        self.saved.clone_from(&self.state);
    }

    fn restore(&mut self) {
        self.state.clone_from(&self.saved);
    }
}

const BUILDING_OUTPUTS: [(&str, Unit); 9] = [
    ("mdot", Unit::KgPerS),
    ("t_return", Unit::Celsius),
    ("q_hiu", Unit::Watt),
    ("q_rad", Unit::Watt),
    ("q_dhw", Unit::Watt),
    ("unmet", Unit::Watt),
    ("t_room", Unit::Celsius),
    ("t_set", Unit::Celsius),
    ("t_buffer_top", Unit::Celsius),
];

pub struct BuildingBlock {
    params: BuildingParams,
    fluid: FluidProps,
    boundary: Arc<Boundary>,
    index: usize,
    profile_mode: bool,
    initial: (f64, f64),
    state: BuildingState,
    saved: BuildingState,
    t_primary_in: f64,
    out: BuildingOutputs,
    inputs: Vec<PortSpec>,
    outputs: Vec<PortSpec>,
}

impl BuildingBlock {
    /// `initial` is (room, buffer) temperature.
    pub fn new(
        params: BuildingParams,
        fluid: FluidProps,
        boundary: Arc<Boundary>,
        index: usize,
        profile_mode: bool,
        initial: (f64, f64),
    ) -> Result<Self> {
        let state = BuildingState::new(&params, fluid, initial.0, initial.1)?;
        Ok(Self {
            fluid,
            boundary,
            index,
            profile_mode,
            initial,
            saved: state.clone(),
            state,
            t_primary_in: initial.1,
            out: BuildingOutputs::default(),
            inputs: vec![PortSpec::new("t_primary_in", Unit::Celsius)],
            outputs: BUILDING_OUTPUTS.iter().map(|&(n, u)| PortSpec::new(n, u)).collect(),
            params,
        })
    }
}

impl Block for BuildingBlock {
    fn id(&self) -> &str {
        &self.params.id
    }
    fn inputs(&self) -> &[PortSpec] {
        &self.inputs
    }
    fn outputs(&self) -> &[PortSpec] {
        &self.outputs
    }

    fn init(&mut self, t0: f64) -> Result<()> {
        self.state = BuildingState::new(&self.params, self.fluid, self.initial.0, self.initial.1)?;
        self.out = BuildingOutputs {
            t_primary_out: self.params.hiu.t_return_set,
            t_room: self.initial.0,
            t_set: crate::building::setpoint_schedule(t0),
            ..BuildingOutputs::default()
        };
        Ok(())
    }

    fn set_input(&mut self, _port: usize, value: f64) {
        self.t_primary_in = value;
    }

    fn do_step(&mut self, t: f64, dt: f64) -> Result<()> {
        let (t_ambient, solar) = self.boundary.weather_at(t);
        let (space, dhw) = self.boundary.load_at(self.index, t);
        let inputs = BuildingInputs {
            t_primary_in: self.t_primary_in,
            t_ambient,
            solar,
            internal_gains: None,
            dhw_draw: dhw,
            space_heat: self.profile_mode.then_some(space),
        };
        self.out = step_building(&self.params, self.fluid, &mut self.state, &inputs, t, dt)?;
        Ok(())
    }

    fn output(&self, port: usize) -> f64 {
        let o = &self.out;
        match port {
            0 => o.primary_flow,
            1 => o.t_primary_out,
            2 => o.q_hiu,
            3 => o.q_rad,
            4 => o.q_dhw,
            5 => o.unmet,
            6 => o.t_room,
            7 => o.t_set,
            _ => self.state.buffer.top(),
        }
    }

    fn save(&mut self) {
        self.saved.clone_from(&self.state);
    }

    fn restore(&mut self) {
        self.state.clone_from(&self.saved);
    }
}
