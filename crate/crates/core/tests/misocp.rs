mod common;

use drvsl_core::misocp::{build_p5, gated_tangent, nearest_boundary, LevelGrid, Cone};
use proptest::prelude::*;

fn cone() -> Cone {
    Cone { l: 0, e: 0, t: 0, nu: 0, rho: 1, q: vec![2, 3] }
}

/// Value of the row's left side at (ν, ρ, q).
fn lhs(row: &drvsl_solver::Row<f64>, x: &[f64]) -> f64 {
    row.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
}

#[test]
fn level_grids_nest_when_refined() {
    let coarse = LevelGrid::uniform(3, 8.0);
    let fine = LevelGrid::uniform(5, 8.0);
    assert!(coarse.points.iter().all(|p| fine.points.contains(p)));
    assert_eq!(LevelGrid::uniform(1, 8.0).points, vec![0.0]);
}

#[test]
fn p5_adds_one_selector_set_per_cone() {
    let cfg = common::load("tiny.json");
    let inst = cfg.instance(cfg.training_samples().unwrap(), 0.5);
    let p5 = build_p5(&inst, &LevelGrid::uniform(4, 100.0));
    assert_eq!(p5.cones.len(), inst.n_samples() * inst.cfg.n() * inst.cfg.horizon);
    assert!(p5.cones.iter().all(|c| c.q.len() == 4));
}

proptest! {
    /// A gated cut never removes a point of the hyperbolic region, whichever level is active.
    #[test]
    fn gated_cut_is_valid(nu0 in 0.01f64..50.0, rho0 in 0.01f64..50.0, c in 0.5f64..400.0,
                          nu in 0.0f64..60.0, rho in 0.0f64..60.0, active in any::<bool>()) {
        let row = gated_tangent(&cone(), 1, c, nu0, rho0);
        let q = if active { [0.0, 1.0] } else { [1.0, 0.0] };
        let x = [nu, rho, q[0], q[1]];
        if !active || nu * rho >= c {
            prop_assert!(lhs(&row, &x) >= row.rhs - 1e-7 * c);
        }
    }

    #[test]
    fn nearest_boundary_is_on_the_hyperbola(nu0 in 0.0f64..50.0, rho0 in 0.01f64..50.0, c in 0.5f64..400.0) {
        let (s, r) = nearest_boundary(nu0, rho0, c);
        prop_assert!((s * r - c).abs() <= 1e-8 * c);
        prop_assert!(s > 0.0 && r > 0.0);
    }
}
