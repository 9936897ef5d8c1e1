//! Thermal transport in the supply and return pipe trees.
//!
//! Flows are imposed by building demand on the tree (no pressure solve).
//! Each pipe is split into finite-volume cells carrying a fluid node and a
//! lumped wall/insulation node that loses heat to the ground.

mod catalog;
mod thermal;
mod topology;

pub use catalog::{load_pipe_catalog, PipeCatalog, PipeType};
pub use thermal::{
    advance_thermal, allocate_mass_flows, segment_flows, total_heat_loss, Direction, Inlet, LeafDemand,
    NetworkState, ThermalStep,
};
pub use topology::{GroundTemp, PipeSegment, SegmentSpec, Topology};

/// Default fluid-to-wall film coefficient [W/(m2 K)].
pub const DEFAULT_FLUID_WALL_HTC: f64 = 500.0;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::common::FluidProps;

    const CP: f64 = 4186.0;

    fn dn50(length: f64, n_cells: usize, u: f64) -> PipeSegment {
        PipeSegment {
            id: "p".into(),
            length,
            inner_diameter: 0.0545,
            u_per_m: u,
            wall_cap_per_m: 950.0,
            n_cells,
        }
    }

    fn single_pipe(n_cells: usize, u: f64, ground: f64) -> Topology {
        Topology::from_segments(
            "center",
            vec![dn50(100.0, n_cells, u)],
            &[("center".into(), "b1".into())],
            GroundTemp::Constant(ground),
        )
        .unwrap()
    }

    fn two_leaf() -> Topology {
        let seg = |id: &str, l: f64| PipeSegment {
            id: id.into(),
            ..dn50(l, 3, 0.17)
        };
        Topology::from_segments(
            "center",
            vec![seg("trunk", 30.0), seg("a", 10.0), seg("b", 12.0)],
            &[
                ("center".into(), "j".into()),
                ("j".into(), "a".into()),
                ("j".into(), "b".into()),
            ],
            GroundTemp::Constant(10.0),
        )
        .unwrap()
    }

    fn run_to_steady(topo: &Topology, flow: f64, t_in: f64, steps: usize) -> (NetworkState, ThermalStep) {
        let fluid = FluidProps::default();
        let mut st = NetworkState::uniform(topo, t_in);
        st.flows = segment_flows(topo, &vec![flow; topo.leaves().len()]);
        let mut last = ThermalStep::default();
        for k in 0..steps {
            last = advance_thermal(
                &mut st,
                topo,
                Direction::Supply,
                Inlet::Root(t_in),
                k as f64 * 60.0,
                60.0,
                &fluid,
                DEFAULT_FLUID_WALL_HTC,
            )
            .unwrap();
        }
        (st, last)
    }

    /// Closed-form steady outlet of a pipe with uniform loss coefficient.
    fn analytic_outlet(t_in: f64, t_g: f64, u: f64, l: f64, flow: f64) -> f64 {
        t_g + (t_in - t_g) * (-u * l / (flow * CP)).exp()
    }

    #[test]
    fn leaf_flow_from_demand() {
        let topo = single_pipe(10, 0.17, 10.0);
        let flows = allocate_mass_flows(
            &topo,
            &[LeafDemand {
                q_demand: 10_000.0,
                t_supply: 80.0,
                t_return: 55.0,
            }],
            &FluidProps::default(),
        )
        .unwrap();
        assert!((flows[0] - 0.09556).abs() < 1e-5);
    }

    #[test]
    fn zero_demand_zero_flow_and_degenerate_delta_t() {
        let topo = two_leaf();
        let d = LeafDemand {
            q_demand: 0.0,
            t_supply: 80.0,
            t_return: 55.0,
        };
        let flows = allocate_mass_flows(&topo, &[d, d], &FluidProps::default()).unwrap();
        assert!(flows.iter().all(|&f| f == 0.0));
        let bad = LeafDemand {
            q_demand: 1.0,
            t_supply: 55.2,
            t_return: 55.0,
        };
        assert!(matches!(
            allocate_mass_flows(&topo, &[d, bad], &FluidProps::default()),
            Err(crate::Error::DegenerateDeltaT { .. })
        ));
    }

    #[test]
    fn junction_sums_leaf_flows() {
        let topo = two_leaf();
        let flows = segment_flows(&topo, &[0.05, 0.07]);
        assert!((flows[0] - 0.12).abs() < 1e-15);
        assert_eq!(&flows[1..], &[0.05, 0.07]);
    }

    #[test]
    fn lossless_transport_reaches_inlet() {
        let topo = single_pipe(10, 0.0, 10.0);
        let fluid = FluidProps::default();
        let mut st = NetworkState::uniform(&topo, 50.0);
        st.flows = vec![1.0];
        let residence = fluid.rho * topo.segments()[0].area() * 100.0 / 1.0;
        let steps = (residence / 60.0).ceil() as usize * 40;
        let mut out = 0.0;
        for k in 0..steps {
            let s = advance_thermal(&mut st, &topo, Direction::Supply, Inlet::Root(80.0), k as f64 * 60.0, 60.0, &fluid, 500.0)
                .unwrap();
            out = s.leaf_temps[0];
        }
        assert!((out - 80.0).abs() < 1e-9, "outlet {out}");
    }

    #[test]
    fn zero_flow_decays_monotonically_to_ground() {
        let topo = single_pipe(5, 0.17, 10.0);
        let fluid = FluidProps::default();
        let mut st = NetworkState::uniform(&topo, 80.0);
        let mut prev = st.fluid[0].clone();
        for k in 0..2000 {
            advance_thermal(&mut st, &topo, Direction::Supply, Inlet::Root(80.0), k as f64 * 600.0, 600.0, &fluid, 500.0)
                .unwrap();
            for (a, b) in st.fluid[0].iter().zip(&prev) {
                assert!(*a <= *b + 1e-12 && *a >= 10.0 - 1e-12);
            }
            prev = st.fluid[0].clone();
        }
        assert!(prev.iter().all(|&t| t < 11.0));
    }

    #[test]
    fn steady_outlet_matches_exponential_oracle() {
        let topo = single_pipe(10, 0.17, 10.0);
        let (_, step) = run_to_steady(&topo, 1.0, 80.0, 3000);
        let exact = analytic_outlet(80.0, 10.0, 0.17, 100.0, 1.0);
        let drop_sim = 80.0 - step.leaf_temps[0];
        let drop_exact = 80.0 - exact;
        assert!(
            ((drop_sim - drop_exact) / drop_exact).abs() < 0.01,
            "sim drop {drop_sim}, exact {drop_exact}"
        );
    }

    #[test]
    fn grid_convergence_of_steady_outlet() {
        let coarse = run_to_steady(&single_pipe(10, 0.17, 10.0), 1.0, 80.0, 3000).1.leaf_temps[0];
        let fine = run_to_steady(&single_pipe(20, 0.17, 10.0), 1.0, 80.0, 3000).1.leaf_temps[0];
        assert!((coarse - fine).abs() < 0.2);
    }

    #[test]
    fn return_tree_mixes_and_balances() {
        let topo = two_leaf();
        let fluid = FluidProps::default();
        let mut st = NetworkState::uniform(&topo, 55.0);
        st.flows = segment_flows(&topo, &[0.05, 0.15]);
        let mut s = ThermalStep::default();
        for k in 0..500 {
            s = advance_thermal(&mut st, &topo, Direction::Return, Inlet::Leaves(&[50.0, 60.0]), k as f64 * 60.0, 60.0, &fluid, 500.0)
                .unwrap();
            let throughput = s.enthalpy_in.abs().max(1.0);
            assert!(s.residual().abs() <= 1e-9 * throughput);
        }
        // mixed 57.5 degC minus a small loss
        assert!(s.root_temp < 57.5 && s.root_temp > 57.0, "{}", s.root_temp);
    }

    #[test]
    fn loss_integral() {
        assert_eq!(total_heat_loss(&[0.0; 10], 60.0), 0.0);
        assert!((total_heat_loss(&[5000.0; 120], 60.0) - 10.0).abs() < 1e-12);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]

        #[test]
        fn balance_closes_and_outlet_bounded(flows in proptest::collection::vec(0.0f64..1.5, 40),
                                             inlets in proptest::collection::vec(40.0f64..90.0, 40)) {
            let topo = two_leaf();
            let fluid = FluidProps::default();
            let mut st = NetworkState::uniform(&topo, 40.0);
            let mut max_in: f64 = 40.0;
            for (k, (f, tin)) in flows.iter().zip(&inlets).enumerate() {
                st.flows = segment_flows(&topo, &[*f, 0.5 * f]);
                max_in = max_in.max(*tin);
                let s = advance_thermal(&mut st, &topo, Direction::Supply, Inlet::Root(*tin), k as f64 * 60.0, 60.0, &fluid, 500.0).unwrap();
                let scale = (s.enthalpy_in.abs() + s.stored_before.abs() * 1e-6).max(1.0);
                proptest::prop_assert!(s.residual().abs() <= 5e-3 * scale);
                for t in &s.leaf_temps {
                    proptest::prop_assert!(*t >= 10.0 - 1e-9 && *t <= max_in + 1e-9);
                }
            }
        }
    }
}
