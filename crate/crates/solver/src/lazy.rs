use std::time::{Duration, Instant};

use crate::milp::{solve_milp, MilpOptions};
use crate::problem::{MilpProblem, Row, Solution, Status};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct LazyOptions<T> {
    pub milp: MilpOptions<T>,
    /// Total wall-clock budget across all rounds.
    pub time_limit: Option<Duration>,
    pub max_rounds: usize,
}

impl<T> Default for LazyOptions<T> {
    fn default() -> Self {
        LazyOptions {
            milp: MilpOptions::default(),
            time_limit: None,
            max_rounds: 1000,
        }
    }
}

/// Repeatedly solves `p`, asks `oracle` for rows violated by the incumbent and
/// appends them, until the oracle is satisfied. Added rows stay in `p`.
pub fn solve_with_lazy_cuts<T, F>(p: &mut MilpProblem<T>, mut oracle: F, opts: &LazyOptions<T>) -> Solution<T>
where
    T: Scalar,
    F: FnMut(&[T]) -> Vec<Row<T>>,
{
    let started = Instant::now();
    let deadline = match (opts.milp.deadline, opts.time_limit.map(|d| started + d)) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    let mut milp_opts = opts.milp.clone();
    milp_opts.deadline = deadline;
    let mut iterations = 0;
    let mut nodes = 0;
    for round in 0.. {
        let mut sol = solve_milp(p, &milp_opts);
        iterations += sol.stats.iterations;
        nodes += sol.stats.nodes;
        sol.stats.iterations = iterations;
        sol.stats.nodes = nodes;
        sol.stats.elapsed = started.elapsed();
        if !sol.status.has_solution() {
            return sol;
        }
        let cuts = oracle(&sol.x);
        if cuts.is_empty() {
            return sol;
        }
        if round + 1 >= opts.max_rounds || deadline.is_some_and(|d| Instant::now() >= d) {
            let mut out = Solution::without_point(Status::BudgetNoIncumbent);
            out.best_bound = sol.best_bound;
            out.stats = sol.stats;
            return out;
        }
        log::trace!("lazy round {round}: {} cuts", cuts.len());
        p.lp.rows.extend(cuts);
        milp_opts.root_basis = sol.basis.take();
        milp_opts.start = None;
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{LpProblem, Sense};

    #[test]
    fn silent_oracle_is_plain_milp() {
        let mut lp: LpProblem<f64> = LpProblem::new(Sense::Maximize);
        let a = lp.add_var(5.0, 0.0, 1.0);
        let b = lp.add_var(4.0, 0.0, 1.0);
        lp.add_row(Row::le(vec![(a, 6.0), (b, 4.0)], 9.0));
        let mut p = MilpProblem::new(lp);
        p.mark_binary(a);
        p.mark_binary(b);
        let plain = solve_milp(&p, &MilpOptions::default());
        let lazy = solve_with_lazy_cuts(&mut p, |_| Vec::new(), &LazyOptions::default());
        assert_eq!(plain.x, lazy.x);
        assert_eq!(plain.objective, lazy.objective);
    }
}
