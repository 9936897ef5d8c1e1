mod common;

use heatgrid::common::{epoch, SECONDS_PER_DAY};
use heatgrid::scenario::Month;
use heatgrid::sim::Model;

#[test]
fn master_matches_monolithic_solution() {
    let model = Model::prepare(&common::two_building_scenario()).unwrap();
    let t0 = epoch(2021, 1, 12);
    let steps = (SECONDS_PER_DAY / model.scenario.master.dt) as usize;
    let co = common::cosim_rooms(&model, 75.0, t0, steps);
    let mono = common::monolithic_rooms(&model, 75.0, t0, steps);
    assert_eq!(co[0].len(), steps);
    let rms = common::rms_difference(&co, &mono);
    assert!(rms <= 0.1, "room temperature RMS {rms} K");
}

#[test]
fn halving_the_macro_step_keeps_delivered_heat() {
    let delivered = |dt: f64| {
        let mut sc = common::scenario("validation.toml");
        sc.master.dt = dt;
        sc.run.days = Some(2);
        let run = Model::prepare(&sc).unwrap().run_month(heatgrid::center::Variant::V1, Month::Jan).unwrap();
        run.ledger.heat_delivered
    };
    let (coarse, fine) = (delivered(60.0), delivered(30.0));
    assert!(((coarse - fine) / fine).abs() < 0.005, "{coarse} vs {fine} kWh");
}
