mod common;

use common::{brute_force_best, load, random_tiny};
use drvsl_core::issa::{self, update_pool, IssaOptions, Pool, Termination};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn exact() -> IssaOptions {
    IssaOptions { gap_tol: 0.0, budget_s: 60.0, ..IssaOptions::default() }
}

#[test]
fn finds_the_brute_force_optimum_on_random_tiny_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for case in 0..8 {
        let inst = random_tiny(&mut rng);
        let rep = issa::run(&inst, &exact(), &Pool::new(0));
        let best = brute_force_best(&inst).map(|b| b.1);
        match (rep.lb, best) {
            (Some(lb), Some(b)) => assert!((lb - b).abs() <= 1e-9 * b.abs().max(1.0), "case {case}: {lb} vs {b}"),
            (None, None) => assert!(rep.u_best.is_none()),
            other => panic!("case {case}: {other:?}"),
        }
        assert!(matches!(rep.termination, Termination::GapClosed | Termination::Exhausted), "case {case}");
        assert_eq!(rep.feasible, rep.candidates.len());
    }
}

#[test]
fn bounds_are_monotone_along_the_log() {
    let cfg = load("tiny.json");
    let inst = cfg.instance(cfg.training_samples().unwrap(), 0.5);
    let rep = issa::run(&inst, &exact(), &Pool::new(0));
    for w in rep.log.windows(2) {
        assert!(w[1].ub <= w[0].ub + 1e-9);
        if let (Some(a), Some(b)) = (w[0].lb, w[1].lb) {
            assert!(b >= a);
        }
    }
}

#[test]
fn runs_are_deterministic_and_pool_warm_start_agrees() {
    let cfg = load("tiny.json");
    let inst = cfg.instance(cfg.training_samples().unwrap(), 0.5);
    let a = issa::run(&inst, &exact(), &Pool::new(0));
    let b = issa::run(&inst, &exact(), &Pool::new(0));
    assert_eq!(a.u_best, b.u_best);
    assert_eq!(a.lb, b.lb);
    let pool = update_pool(&Pool::new(4), &a);
    assert!(pool.entries.len() <= 4 && !pool.entries.is_empty());
    let c = issa::run(&inst, &exact(), &pool);
    assert_eq!(c.lb, a.lb);
}

#[test]
fn iteration_limit_is_honoured() {
    let cfg = load("tiny.json");
    let inst = cfg.instance(cfg.training_samples().unwrap(), 0.5);
    let opts = IssaOptions { max_iterations: Some(1), seed_uniform: false, ..exact() };
    let rep = issa::run(&inst, &opts, &Pool::new(0));
    assert_eq!(rep.termination, Termination::IterationLimit);
    assert_eq!(rep.iterations, 1);
}

#[test]
fn iteration_csv_has_a_row_per_iteration() {
    let cfg = load("tiny.json");
    let inst = cfg.instance(cfg.training_samples().unwrap(), 0.5);
    let rep = issa::run(&inst, &exact(), &Pool::new(0));
    let mut buf = Vec::new();
    issa::write_iterations_csv(&rep.log, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), rep.log.len() + 1);
    assert!(text.starts_with("k,ub,obj,lb,feasible,seconds"));
}
