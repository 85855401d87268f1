use drvsl_solver::{solve_with_lazy_cuts, LazyOptions, LpProblem, MilpProblem, Row, Sense, Status};

/// Tangent cut of `t ≤ 2√(xy)` at `(x0, y0)`, returned when violated.
fn hyperbolic_oracle(x: &[f64]) -> Vec<Row<f64>> {
    let (t, a, b) = (x[0], x[1], x[2]);
    let g = 2.0 * (a * b).sqrt();
    if t <= g + 1e-6 {
        return Vec::new();
    }
    let ga = (b / a).sqrt();
    let gb = (a / b).sqrt();
    // t ≤ g + ga (x − a) + gb (y − b)
    vec![Row::le(vec![(0, 1.0), (1, -ga), (2, -gb)], g - ga * a - gb * b)]
}

#[test]
fn converges_to_closed_form() {
    let mut lp = LpProblem::new(Sense::Maximize);
    lp.add_var(1.0, f64::NEG_INFINITY, 10.0);
    lp.add_var(0.0, 2.0, 2.0);
    lp.add_var(0.0, 2.0, 2.0);
    let mut p = MilpProblem::new(lp);
    let s = solve_with_lazy_cuts(&mut p, hyperbolic_oracle, &LazyOptions::default());
    assert_eq!(s.status, Status::Optimal);
    assert!((s.x[0] - 4.0).abs() < 1e-4);
}

#[test]
fn cuts_on_a_free_box_converge() {
    // x, y free in [1, 4] with x + y ≤ 5: optimum at x = y = 2.5, t = 5
    let mut lp = LpProblem::new(Sense::Maximize);
    lp.add_var(1.0, 0.0, 10.0);
    lp.add_var(0.0, 1.0, 4.0);
    lp.add_var(0.0, 1.0, 4.0);
    lp.add_row(Row::le(vec![(1, 1.0), (2, 1.0)], 5.0));
    let mut p = MilpProblem::new(lp);
    let s = solve_with_lazy_cuts(&mut p, hyperbolic_oracle, &LazyOptions::default());
    assert_eq!(s.status, Status::Optimal);
    assert!((s.x[0] - 5.0).abs() < 1e-4, "{:?}", s.x);
    assert!(p.lp.num_rows() > 1);
}

#[test]
fn infeasibility_after_cuts_is_reported() {
    // t ≥ 5 but the oracle eventually caps t at 4
    let mut lp = LpProblem::new(Sense::Maximize);
    lp.add_var(1.0, 5.0, 10.0);
    lp.add_var(0.0, 2.0, 2.0);
    lp.add_var(0.0, 2.0, 2.0);
    let mut p = MilpProblem::new(lp);
    let s = solve_with_lazy_cuts(&mut p, hyperbolic_oracle, &LazyOptions::default());
    assert_eq!(s.status, Status::Infeasible);
}
