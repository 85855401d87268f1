//! Random mixed-binary programs checked against exhaustive enumeration.

mod support;

use drvsl_solver::{solve_milp, LpProblem, MilpOptions, MilpProblem, Row, Sense, Status};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::RandomMilp;

#[test]
fn random_milps_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut feasible = 0;
    for case in 0..150 {
        let inst = RandomMilp::random(&mut rng);
        let p = inst.build();
        let s = solve_milp(&p, &MilpOptions { gap_tol: 0.0, ..MilpOptions::default() });
        match inst.enumerate() {
            Some(v) => {
                feasible += 1;
                assert_eq!(s.status, Status::Optimal, "case {case}");
                let obj = s.objective.unwrap();
                assert!((obj - v).abs() <= 1e-7 * v.abs().max(1.0), "case {case}: {obj} vs {v}");
                assert!(p.is_integral(&s.x));
                assert!(p.lp.max_violation(&s.x) <= 1e-6);
            }
            None => assert_eq!(s.status, Status::Infeasible, "case {case}"),
        }
        let tr = &s.stats.bound_trace;
        assert!(tr.windows(2).all(|w| w[1] <= w[0]), "case {case}: bound increased {tr:?}");
    }
    assert!(feasible >= 100, "only {feasible} feasible cases");
}

#[test]
fn enumerated_knapsack_example() {
    let mut lp = LpProblem::new(Sense::Maximize);
    let a = lp.add_var(5.0, 0.0, 1.0);
    let b = lp.add_var(4.0, 0.0, 1.0);
    lp.add_row(Row::le(vec![(a, 6.0), (b, 4.0)], 9.0));
    let mut p = MilpProblem::new(lp);
    p.mark_binary(a);
    p.mark_binary(b);
    let s = solve_milp(&p, &MilpOptions::default());
    assert_eq!((s.x[0], s.x[1]), (1.0, 0.0));
    assert_eq!(s.objective, Some(5.0));
}

#[test]
fn node_limit_reports_budget_with_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // 10-item knapsack with fractional relaxation
    let mut lp = LpProblem::new(Sense::Maximize);
    let w: Vec<f64> = (0..10).map(|_| rng.gen_range(3.0..9.0)).collect();
    for _ in 0..10 {
        lp.add_var(rng.gen_range(1.0..10.0), 0.0, 1.0);
    }
    lp.add_row(Row::le(w.iter().enumerate().map(|(j, &a)| (j, a)).collect(), 17.5));
    let mut p = MilpProblem::new(lp);
    for j in 0..10 {
        p.mark_binary(j);
    }
    let full = solve_milp(&p, &MilpOptions::default());
    let cut = solve_milp(&p, &MilpOptions { node_limit: Some(2), ..MilpOptions::default() });
    assert!(matches!(
        cut.status,
        Status::BudgetNoIncumbent | Status::BudgetWithIncumbent | Status::Optimal
    ));
    let bound = cut.best_bound.unwrap();
    assert!(bound >= full.objective.unwrap() - 1e-9);
    if let Some(obj) = cut.objective {
        assert!(obj <= bound + 1e-9);
    }
}
