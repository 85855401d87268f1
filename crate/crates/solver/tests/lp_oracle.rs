//! Random small LPs checked against brute-force vertex enumeration.

mod support;

use drvsl_solver::{solve_lp, LpProblem, Row, Sense, Status};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::{random_lp, vertex_oracle};

#[test]
fn random_lps_match_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut feasible, mut infeasible) = (0, 0);
    for case in 0..200 {
        let p = random_lp(&mut rng);
        let s = solve_lp(&p);
        match vertex_oracle(&p) {
            Some(v) => {
                feasible += 1;
                assert_eq!(s.status, Status::Optimal, "case {case}: {p:?}");
                let obj = s.objective.unwrap();
                assert!((obj - v).abs() <= 1e-6 * v.abs().max(1.0), "case {case}: {obj} vs {v}");
                assert!(p.max_violation(&s.x) <= 1e-6, "case {case}");
            }
            None => {
                infeasible += 1;
                assert_eq!(s.status, Status::Infeasible, "case {case}: {p:?}");
            }
        }
    }
    assert!(feasible >= 100, "only {feasible} feasible cases");
    assert!(infeasible > 0);
}

#[test]
fn textbook_examples() {
    let mut p = LpProblem::new(Sense::Maximize);
    let x = p.add_var(1.0, 0.0, f64::INFINITY);
    p.add_row(Row::le(vec![(x, 1.0)], 1.0));
    let s = solve_lp(&p);
    assert_eq!(s.status, Status::Optimal);
    assert!((s.x[0] - 1.0).abs() < 1e-12);

    let mut p = LpProblem::new(Sense::Maximize);
    let x = p.add_var(1.0, 0.0, f64::INFINITY);
    let y = p.add_var(1.0, 0.0, f64::INFINITY);
    p.add_row(Row::le(vec![(x, 1.0), (y, 2.0)], 4.0));
    p.add_row(Row::le(vec![(x, 3.0), (y, 1.0)], 6.0));
    let s = solve_lp(&p);
    assert!((s.x[0] - 1.6).abs() < 1e-9 && (s.x[1] - 1.2).abs() < 1e-9);
    assert!((s.objective.unwrap() - 2.8).abs() < 1e-9);

    let mut p = LpProblem::new(Sense::Maximize);
    let x = p.add_var(1.0, f64::NEG_INFINITY, f64::INFINITY);
    p.add_row(Row::ge(vec![(x, 1.0)], 2.0));
    p.add_row(Row::le(vec![(x, 1.0)], 1.0));
    assert_eq!(solve_lp(&p).status, Status::Infeasible);
}

#[test]
fn degenerate_transportation_problem() {
    // 4x4 assignment polytope: highly degenerate, integral optimum
    let cost = [
        [4.0, 1.0, 3.0, 2.0],
        [2.0, 0.0, 5.0, 3.0],
        [3.0, 2.0, 2.0, 1.0],
        [1.0, 3.0, 4.0, 2.0],
    ];
    let mut p = LpProblem::new(Sense::Minimize);
    let mut v = [[0usize; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            v[i][j] = p.add_var(cost[i][j], 0.0, f64::INFINITY);
        }
    }
    for i in 0..4 {
        p.add_row(Row::eq((0..4).map(|j| (v[i][j], 1.0)).collect(), 1.0));
        p.add_row(Row::eq((0..4).map(|j| (v[j][i], 1.0)).collect(), 1.0));
    }
    let s = solve_lp(&p);
    assert_eq!(s.status, Status::Optimal);
    // brute force over permutations
    let mut best = f64::INFINITY;
    let perms = permutations(4);
    for perm in perms {
        best = best.min((0..4).map(|i| cost[i][perm[i]]).sum());
    }
    assert!((s.objective.unwrap() - best).abs() < 1e-9);
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..n {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

    /// Scaling the objective by k > 0 scales the optimum by k and keeps feasibility status.
    #[test]
    fn objective_scaling(seed in 0u64..10_000, k in 0.1f64..20.0) {
        let p = random_lp(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut q = p.clone();
        for c in q.objective.iter_mut() {
            *c *= k;
        }
        let (a, b) = (solve_lp(&p), solve_lp(&q));
        proptest::prop_assert_eq!(a.status, b.status);
        if let (Some(x), Some(y)) = (a.objective, b.objective) {
            approx::assert_relative_eq!(k * x, y, epsilon = 1e-6, max_relative = 1e-8);
        }
    }
}
