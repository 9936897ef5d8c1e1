use serde::Serialize;

use super::topology::Topology;
use crate::common::FluidProps;
use crate::error::{ensure_finite, Error, Result};

/// Which tree a state belongs to. Return cells are ordered in the return
/// flow direction (leaf end first).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Supply,
    Return,
}

/// Demand seen at one building leaf.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeafDemand {
    pub q_demand: f64,
    pub t_supply: f64,
    pub t_return: f64,
}

/// Leaf mass flows from demand, `m = Q / (cp (Ts - Tr))`, summed up the tree.
pub fn allocate_mass_flows(topo: &Topology, demands: &[LeafDemand], fluid: &FluidProps) -> Result<Vec<f64>> {
    let names = topo.leaf_names();
    assert_eq!(demands.len(), names.len(), "one demand per leaf");
    let mut leaf_flows = Vec::with_capacity(demands.len());
    for (d, name) in demands.iter().zip(names) {
        if d.q_demand < 0.0 {
            return Err(Error::InvalidParameter(format!("negative demand at `{name}`")));
        }
        if d.q_demand == 0.0 {
            leaf_flows.push(0.0);
            continue;
        }
        let dt = d.t_supply - d.t_return;
        if dt < 0.5 {
            return Err(Error::DegenerateDeltaT {
                leaf: name.to_string(),
                delta_t: dt,
                demand: d.q_demand,
            });
        }
        leaf_flows.push(d.q_demand / (fluid.cp * dt));
    }
    Ok(segment_flows(topo, &leaf_flows))
}

/// Per-segment flows given per-leaf flows: every segment carries the sum of
/// the leaves downstream of it.
pub fn segment_flows(topo: &Topology, leaf_flows: &[f64]) -> Vec<f64> {
    let mut node_flow = vec![0.0; topo.nodes().len()];
    for (&leaf, &f) in topo.leaves().iter().zip(leaf_flows) {
        node_flow[leaf] = f.max(0.0);
    }
    let mut flows = vec![0.0; topo.segments().len()];
    for si in (0..flows.len()).rev() {
        let (from, to) = topo.ends()[si];
        flows[si] = node_flow[to];
        node_flow[from] += node_flow[to];
    }
    flows
}

/// Cell temperatures of one tree.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub fluid: Vec<Vec<f64>>,
    pub wall: Vec<Vec<f64>>,
    pub flows: Vec<f64>,
    /// Last mixed temperature at each node, used when a node carries no flow.
    pub node_temp: Vec<f64>,
}

impl NetworkState {
    pub fn uniform(topo: &Topology, temp: f64) -> Self {
        Self {
            fluid: topo.segments().iter().map(|s| vec![temp; s.n_cells]).collect(),
            wall: topo.segments().iter().map(|s| vec![temp; s.n_cells]).collect(),
            flows: vec![0.0; topo.segments().len()],
            node_temp: vec![temp; topo.nodes().len()],
        }
    }

    /// Fluid + wall enthalpy relative to 0 degC [J].
    pub fn stored_energy(&self, topo: &Topology, fluid: &FluidProps) -> f64 {
        topo.segments()
            .iter()
            .enumerate()
            .map(|(si, s)| {
                let dx = s.cell_length();
                let cf = fluid.rho * s.area() * dx * fluid.cp;
                let cw = s.wall_cap_per_m * dx;
                self.fluid[si].iter().sum::<f64>() * cf + self.wall[si].iter().sum::<f64>() * cw
            })
            .sum()
    }
}

/// Boundary condition at the inflow end(s) of a tree.
#[derive(Debug, Clone, Copy)]
pub enum Inlet<'a> {
    /// Supply tree: temperature entering at the heating center.
    Root(f64),
    /// Return tree: per-leaf return temperatures (flows come from the state).
    Leaves(&'a [f64]),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ThermalStep {
    /// Supply: flow-weighted arrival temperature per leaf. Return: empty.
    pub leaf_temps: Vec<f64>,
    /// Return: flow-weighted temperature arriving at the center. Supply: the
    /// inlet temperature.
    pub root_temp: f64,
    /// Mean heat loss to ground over the step [W].
    pub q_loss: f64,
    pub enthalpy_in: f64,
    pub enthalpy_out: f64,
    pub loss: f64,
    pub stored_before: f64,
    pub stored_after: f64,
}

impl ThermalStep {
    pub fn residual(&self) -> f64 {
        (self.enthalpy_in - self.enthalpy_out) - self.loss - (self.stored_after - self.stored_before)
    }
}

/// Per-segment constants that only depend on the step length.
struct SegmentCoeffs {
    cell_fluid_mass: f64,
    cell_fluid_cap: f64,
    cell_wall_cap: f64,
    exchange_decay: f64,
    loss_decay: f64,
}

/// Advances cell temperatures of one tree by `dt`.
///
/// Explicit upwind advection with global sub-stepping (Courant <= 1), then
/// exact exponential fluid-wall exchange and wall-to-ground loss in each
/// sub-step. Every sub-operation conserves energy, so the balance in the
/// returned [`ThermalStep`] closes to rounding.
#[allow(clippy::too_many_arguments)]
pub fn advance_thermal(
    state: &mut NetworkState,
    topo: &Topology,
    direction: Direction,
    inlet: Inlet<'_>,
    t: f64,
    dt: f64,
    fluid: &FluidProps,
    fluid_wall_htc: f64,
) -> Result<ThermalStep> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter("time step must be positive".into()));
    }
    let segs = topo.segments();
    let t_ground = topo.ground().at(t)?;
    let stored_before = state.stored_energy(topo, fluid);

    let mut n_sub = 1usize;
    for (si, s) in segs.iter().enumerate() {
        let m_cell = fluid.rho * s.area() * s.cell_length();
        n_sub = n_sub.max((state.flows[si] * dt / m_cell).ceil() as usize);
    }
    let h = dt / n_sub as f64;

    let coeffs: Vec<SegmentCoeffs> = segs
        .iter()
        .map(|s| {
            let dx = s.cell_length();
            let m = fluid.rho * s.area() * dx;
            let cf = m * fluid.cp;
            let cw = s.wall_cap_per_m * dx;
            let hfw = fluid_wall_htc * std::f64::consts::PI * s.inner_diameter * dx;
            SegmentCoeffs {
                cell_fluid_mass: m,
                cell_fluid_cap: cf,
                cell_wall_cap: cw,
                exchange_decay: (-hfw * (1.0 / cf + 1.0 / cw) * h).exp(),
                loss_decay: (-s.u_per_m * dx * h / cw).exp(),
            }
        })
        .collect();

    let n_leaves = topo.leaves().len();
    let mut leaf_out_sum = vec![0.0; n_leaves];
    let mut root_out_sum = 0.0;
    let mut seg_inlet = vec![0.0; segs.len()];
    let (mut e_in, mut e_out, mut loss) = (0.0, 0.0, 0.0);
    let cp = fluid.cp;
    let mut leaf_of_node = vec![None; topo.nodes().len()];
    for (li, &leaf) in topo.leaves().iter().enumerate() {
        leaf_of_node[leaf] = Some(li);
    }

    for _ in 0..n_sub {
        // Inflow temperature of every segment from the pre-sub-step state.
        match direction {
            Direction::Supply => {
                let Inlet::Root(t_in) = inlet else {
                    panic!("supply tree needs a root inlet");
                };
                state.node_temp[Topology::ROOT] = t_in;
                for (si, &(from, to)) in topo.ends().iter().enumerate() {
                    seg_inlet[si] = match topo.feeder(from) {
                        None => t_in,
                        Some(p) => *state.fluid[p].last().unwrap(),
                    };
                    if state.flows[si] > 0.0 {
                        state.node_temp[to] = *state.fluid[si].last().unwrap();
                    }
                }
                for (si, &(from, _)) in topo.ends().iter().enumerate() {
                    if from == Topology::ROOT {
                        e_in += state.flows[si] * cp * t_in * h;
                    }
                }
                for (li, &leaf) in topo.leaves().iter().enumerate() {
                    let si = topo.feeder(leaf).unwrap();
                    let out = *state.fluid[si].last().unwrap();
                    e_out += state.flows[si] * cp * out * h;
                    leaf_out_sum[li] += state.flows[si] * out * h;
                }
            }
            Direction::Return => {
                let Inlet::Leaves(leaf_temps) = inlet else {
                    panic!("return tree needs leaf inlets");
                };
                // Node mixing, children before parents.
                for si in (0..segs.len()).rev() {
                    let (_, to) = topo.ends()[si];
                    let t_node = if let Some(li) = leaf_of_node[to] {
                        e_in += state.flows[si] * cp * leaf_temps[li] * h;
                        leaf_temps[li]
                    } else {
                        mix_children(state, topo, to)
                    };
                    state.node_temp[to] = t_node;
                    seg_inlet[si] = t_node;
                }
                let root_flow: f64 = topo.children(Topology::ROOT).iter().map(|&si| state.flows[si]).sum();
                let t_root = mix_children(state, topo, Topology::ROOT);
                state.node_temp[Topology::ROOT] = t_root;
                e_out += root_flow * cp * t_root * h;
                root_out_sum += root_flow * t_root * h;
            }
        }

        for (si, c) in coeffs.iter().enumerate() {
            let flow = state.flows[si];
            let courant = flow * h / c.cell_fluid_mass;
            let cells = &mut state.fluid[si];
            let walls = &mut state.wall[si];
            let mut upstream = seg_inlet[si];
            for (tf, tw) in cells.iter_mut().zip(walls.iter_mut()) {
                let old = *tf;
                let mut f = old + courant * (upstream - old);
                upstream = old;
                // fluid <-> wall, exact two-node relaxation
                let eq = (c.cell_fluid_cap * f + c.cell_wall_cap * *tw) / (c.cell_fluid_cap + c.cell_wall_cap);
                let diff = (f - *tw) * c.exchange_decay;
                f = eq + diff * c.cell_wall_cap / (c.cell_fluid_cap + c.cell_wall_cap);
                let w = eq - diff * c.cell_fluid_cap / (c.cell_fluid_cap + c.cell_wall_cap);
                // wall -> ground
                let w_new = t_ground + (w - t_ground) * c.loss_decay;
                loss += c.cell_wall_cap * (w - w_new);
                *tf = f;
                *tw = w_new;
            }
        }
    }

    let mut step = ThermalStep {
        q_loss: loss / dt,
        enthalpy_in: e_in,
        enthalpy_out: e_out,
        loss,
        stored_before,
        stored_after: state.stored_energy(topo, fluid),
        ..Default::default()
    };
    match direction {
        Direction::Supply => {
            step.root_temp = match inlet {
                Inlet::Root(t) => t,
                Inlet::Leaves(_) => unreachable!(),
            };
            step.leaf_temps = topo
                .leaves()
                .iter()
                .enumerate()
                .map(|(li, &leaf)| {
                    let si = topo.feeder(leaf).unwrap();
                    let f = state.flows[si];
                    if f > 0.0 {
                        leaf_out_sum[li] / (f * dt)
                    } else {
                        *state.fluid[si].last().unwrap()
                    }
                })
                .collect();
        }
        Direction::Return => {
            let root_flow: f64 = topo.children(Topology::ROOT).iter().map(|&si| state.flows[si]).sum();
            step.root_temp = if root_flow > 0.0 {
                root_out_sum / (root_flow * dt)
            } else {
                mix_children(state, topo, Topology::ROOT)
            };
        }
    }

    for (f, w) in state.fluid.iter().zip(&state.wall) {
        ensure_finite("network", t, f)?;
        ensure_finite("network", t, w)?;
    }
    Ok(step)
}

/// Flow-weighted mix of the return segments arriving at `node`; keeps the
/// previous node temperature when nothing flows.
fn mix_children(state: &NetworkState, topo: &Topology, node: usize) -> f64 {
    let (mut flow, mut acc) = (0.0, 0.0);
    for &si in topo.children(node) {
        let f = state.flows[si];
        flow += f;
        acc += f * state.fluid[si].last().unwrap();
    }
    if flow > 0.0 {
        acc / flow
    } else {
        state.node_temp[node]
    }
}

/// Time integral of a loss trace [kWh], from per-step mean powers [W].
pub fn total_heat_loss(q_loss: &[f64], dt: f64) -> f64 {
    crate::common::kwh_from_joule(q_loss.iter().map(|q| q.max(0.0)).sum::<f64>() * dt)
}
