mod common;

use approx::assert_relative_eq;
use common::{edge, highway, load};
use drvsl_core::highway::{critical_density, fd_flow, tau, EdgeEvent, HighwayError};
use proptest::prelude::*;

#[test]
fn critical_density_matches_closed_form() {
    let e = edge(1, 2.0);
    // τρ̄ū/(τū + u) with τ = f̄/(ūρ̄ − f̄)
    let t = tau(&e).unwrap();
    for u in [40.0, 60.0, 80.0, 100.0, 120.0, 140.0] {
        let direct = t * e.rho_jam * e.u_free / (t * e.u_free + u);
        assert_relative_eq!(critical_density(&e, u), direct, max_relative = 1e-12);
    }
    // at free flow the critical density is f̄/ū
    assert_relative_eq!(critical_density(&e, 140.0), 3.1e4 / 140.0, max_relative = 1e-12);
}

#[test]
fn events_apply_only_inside_their_window() {
    let cfg = highway(3, 4, vec![60.0, 100.0]);
    let ev = EdgeEvent { edge: 2, start: 1, end: 3, f_cap: Some(2.0e4), rho_jam: None, u_free: None };
    let evs = [ev];
    assert_eq!(cfg.at_slot(&evs, 0), cfg);
    assert_eq!(cfg.at_slot(&evs, 1).edges[1].f_cap, 2.0e4);
    assert_eq!(cfg.at_slot(&evs, 2).edges[0].f_cap, 3.1e4);
    assert_eq!(cfg.at_slot(&evs, 3), cfg);
}

#[test]
fn stability_depends_on_top_speed_and_cell_length() {
    let mut cfg = highway(2, 3, vec![60.0, 120.0]);
    assert!(cfg.check_stability().is_ok());
    // h = δ/len = 1/120 sits exactly on the limit for γ_m = 120
    cfg.edges[0].len = 1.0;
    assert!(cfg.check_stability().is_ok());
    cfg.edges[0].len = 0.5;
    assert_eq!(cfg.check_stability().unwrap_err().len(), 1);
    cfg.gamma = vec![60.0];
    assert!(cfg.check_stability().is_ok());
}

#[test]
fn shipped_configs_are_valid() {
    for name in ["paper_sec7.json", "tiny.json", "sec7_scaled.json", "capacity_drop.json"] {
        let c = load(name);
        c.highway.validate().unwrap();
    }
}

#[test]
fn fd_rejects_out_of_range_inputs() {
    let e = edge(1, 2.0);
    assert!(matches!(fd_flow(&e, -1.0, 60.0), Err(HighwayError::DensityOutOfRange { .. })));
    assert!(matches!(fd_flow(&e, 100.0, 150.0), Err(HighwayError::SpeedOutOfRange { .. })));
}

proptest! {
    #[test]
    fn critical_density_decreases_with_speed(u in 1.0f64..139.0, du in 0.1f64..1.0) {
        let e = edge(1, 2.0);
        prop_assert!(critical_density(&e, u + du) < critical_density(&e, u));
        prop_assert!(critical_density(&e, u) < e.rho_jam);
    }

    #[test]
    fn fd_is_continuous_and_bounded(u in 20.0f64..140.0, frac in 0.0f64..1.0) {
        let e = edge(1, 2.0);
        let rc = critical_density(&e, u);
        // both branches meet at ρᶜ(u)
        assert_relative_eq!(u * rc, e.supply(rc), max_relative = 1e-9);
        let q = fd_flow(&e, frac * e.rho_jam, u).unwrap();
        prop_assert!(q >= 0.0 && q <= e.f_cap * (1.0 + 1e-12));
        prop_assert!(q <= u * rc * (1.0 + 1e-12));
    }
}
