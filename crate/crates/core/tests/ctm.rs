mod common;

use approx::assert_relative_eq;
use common::{highway, spec};
use drvsl_core::ctm::{average_flow, plant_rollout, plant_step, planner_step, propagate};
use drvsl_core::scenario::{rng_for, ScenarioSample};
use drvsl_core::SpeedSchedule;
use proptest::prelude::*;

#[test]
fn planner_step_by_hand() {
    let cfg = highway(2, 1, vec![60.0, 120.0]);
    let mut s = ScenarioSample::zeros(2, 1);
    s.omega = vec![20000.0];
    s.rho0 = vec![200.0, 150.0];
    s.r_in[1][0] = 0.04;
    s.r_out[0][0] = 0.02;
    let u = SpeedSchedule { idx: vec![vec![1], vec![0]] };
    let tr = propagate(&cfg, &u, &s).unwrap();
    let h = 1.0 / 240.0;
    let e0 = 200.0 + h * 20000.0 - h * 120.0 * 200.0;
    let kappa = 0.98 / 0.96;
    let e1 = 150.0 + h * kappa * 120.0 * 200.0 - h * 60.0 * 150.0;
    assert_relative_eq!(tr.rho[0][1], e0, max_relative = 1e-12);
    assert_relative_eq!(tr.rho[1][1], e1, max_relative = 1e-12);
    assert!(tr.admissible);
    // H = (1/T) Σ ρ u over t < T
    assert_relative_eq!(average_flow(&cfg, &u, &tr.rho), 200.0 * 120.0 + 150.0 * 60.0, max_relative = 1e-12);
}

#[test]
fn propagate_iterates_planner_step() {
    let cfg = highway(3, 5, vec![60.0, 80.0, 100.0]);
    let s = spec(1).draw(&cfg, &mut rng_for(1, 0));
    let u = SpeedSchedule { idx: vec![vec![0, 1, 2, 1, 0], vec![2, 2, 1, 1, 0], vec![1, 0, 1, 2, 2]] };
    let tr = propagate(&cfg, &u, &s).unwrap();
    let mut state = s.rho0.clone();
    for t in 0..cfg.horizon {
        state = planner_step(&cfg, &u.column(&cfg, t), &state, &s.slice(t));
        for e in 0..cfg.n() {
            assert_relative_eq!(tr.rho[e][t + 1], state[e], max_relative = 1e-12);
        }
    }
}

#[test]
fn plant_agrees_with_planner_when_uncongested() {
    // light traffic: every edge stays below ρᶜ and well below capacity
    let cfg = highway(3, 4, vec![60.0, 100.0]);
    let mut s = ScenarioSample::zeros(3, 4);
    s.omega = vec![8000.0; 4];
    s.rho0 = vec![80.0, 90.0, 70.0];
    let u = SpeedSchedule::constant(&cfg, 1);
    let planned = propagate(&cfg, &u, &s).unwrap();
    let plant = plant_rollout(&cfg, &u, &s);
    for e in 0..3 {
        for t in 0..=4 {
            assert_relative_eq!(plant[e][t], planned.rho[e][t], max_relative = 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn plant_stays_in_physical_range(
        rho in proptest::collection::vec(0.0f64..1050.0, 3),
        omega in 0.0f64..60000.0,
        ui in proptest::collection::vec(0usize..3, 3),
        r_in in 0.0f64..0.5,
        r_out in 0.0f64..0.5,
    ) {
        let cfg = highway(3, 1, vec![60.0, 80.0, 100.0]);
        let u: Vec<f64> = ui.iter().map(|&i| cfg.gamma[i]).collect();
        let dist = drvsl_core::scenario::Disturbance { omega, r_in: vec![r_in; 3], r_out: vec![r_out; 3] };
        let next = plant_step(&cfg, &u, &rho, &dist);
        for (e, &x) in next.iter().enumerate() {
            prop_assert!(x >= 0.0 && x <= cfg.edges[e].rho_jam, "edge {e}: {x}");
        }
    }
}
