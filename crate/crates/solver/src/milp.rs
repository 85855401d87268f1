//! Best-first branch-and-bound with plunging.
//!
//! Each node carries its binary fixings and the basis of its parent, so a node
//! popped from the queue is re-solved with the dual simplex from a nearby
//! basis. SOS1 groups (exactly one member equal to one) are branched on as a
//! whole, one child per still-free member.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::{Duration, Instant};

use crate::problem::{Basis, MilpProblem, Sense, SolveStats, Solution, Status};
use crate::scalar::Scalar;
use crate::simplex::{LpOptions, LpStatus, Simplex};

#[derive(Debug, Clone)]
pub struct MilpOptions<T> {
    pub time_limit: Option<Duration>,
    /// Absolute deadline; the earlier of this and `time_limit` applies.
    pub deadline: Option<Instant>,
    /// Relative gap `(bound − incumbent) / max(1, |incumbent|)` at which to stop.
    pub gap_tol: f64,
    pub node_limit: Option<usize>,
    /// Basis to start the root relaxation from.
    pub root_basis: Option<Basis>,
    /// Values for some binaries; evaluated as a first incumbent when feasible.
    pub start: Option<Vec<(usize, T)>>,
}

impl<T> Default for MilpOptions<T> {
    fn default() -> Self {
        MilpOptions {
            time_limit: None,
            deadline: None,
            gap_tol: 1e-9,
            node_limit: None,
            root_basis: None,
            start: None,
        }
    }
}

struct Node<T> {
    bound: T,
    seq: usize,
    fixes: Vec<(usize, bool)>,
    basis: Option<Rc<Basis>>,
}

impl<T: Scalar> PartialEq for Node<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Scalar> Eq for Node<T> {}
impl<T: Scalar> PartialOrd for Node<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Scalar> Ord for Node<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .partial_cmp(&other.bound)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Search<'a, T> {
    p: &'a MilpProblem<T>,
    lp: Simplex<T>,
    root_bounds: Vec<(T, T)>,
    lp_opts: LpOptions,
    sgn: T,
}

impl<T: Scalar> Search<'_, T> {
    fn apply(&mut self, fixes: &[(usize, bool)]) {
        for (k, &j) in self.p.binaries.iter().enumerate() {
            let (lo, hi) = self.root_bounds[k];
            if self.lp.col_bounds(j) != (lo, hi) {
                self.lp.set_col_bounds(j, lo, hi);
            }
        }
        for &(j, one) in fixes {
            let v = if one { T::one() } else { T::zero() };
            self.lp.set_col_bounds(j, v, v);
        }
    }

    /// Solves the current relaxation; returns the objective in maximization sense.
    fn relax(&mut self) -> Result<Option<T>, LpStatus> {
        match self.lp.solve(&self.lp_opts) {
            LpStatus::Optimal => Ok(Some(self.sgn * self.lp.objective())),
            LpStatus::Infeasible => Ok(None),
            other => Err(other),
        }
    }
}

fn frac<T: Scalar>(v: T) -> T {
    v.min(T::one() - v).max(T::zero())
}

/// Solves a mixed-binary program by branch-and-bound.
pub fn solve_milp<T: Scalar>(p: &MilpProblem<T>, opts: &MilpOptions<T>) -> Solution<T> {
    let started = Instant::now();
    if let Err(e) = p.validate() {
        log::warn!("rejecting malformed MILP: {e}");
        return Solution::without_point(Status::NumericalFailure);
    }
    let deadline = match (opts.deadline, opts.time_limit.map(|d| started + d)) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    let sgn = match p.lp.sense {
        Sense::Maximize => T::one(),
        Sense::Minimize => -T::one(),
    };
    let mut search = Search {
        p,
        lp: Simplex::new(&p.lp),
        root_bounds: p.binaries.iter().map(|&j| (p.lp.lower[j], p.lp.upper[j])).collect(),
        lp_opts: LpOptions {
            deadline,
            ..LpOptions::default()
        },
        sgn,
    };
    if let Some(b) = &opts.root_basis {
        search.lp.set_basis(b);
    }
    let gap_tol = T::of(opts.gap_tol.max(0.0));
    let mut stats = SolveStats::default();
    let mut incumbent: Option<(Vec<T>, T)> = None;
    let mut numerical_trouble = false;

    let finish = |status: Status,
                  incumbent: Option<(Vec<T>, T)>,
                  bound: Option<T>,
                  basis: Option<Basis>,
                  mut stats: SolveStats,
                  iterations: usize| {
        stats.iterations = iterations;
        stats.elapsed = started.elapsed();
        let mut sol = Solution::without_point(status);
        if let Some((mut x, score)) = incumbent {
            for &j in &p.binaries {
                x[j] = x[j].round();
            }
            sol.x = x;
            sol.objective = Some(sgn * score);
        }
        sol.best_bound = bound.map(|b| sgn * b);
        sol.basis = basis;
        sol.stats = stats;
        sol
    };

    let int_ok = |x: &[T]| p.is_integral(x);
    let close_enough = |bound: T, inc: T| bound - inc <= gap_tol.max(T::of(1e-9)) * inc.abs().max(T::one());

    if let Some(start) = &opts.start {
        let fixes: Vec<(usize, bool)> = start.iter().map(|&(j, v)| (j, v > T::of(0.5))).collect();
        search.apply(&fixes);
        if let Ok(Some(score)) = search.relax() {
            let x = search.lp.values();
            if int_ok(&x) {
                incumbent = Some((x, score));
            }
        }
        search.apply(&[]);
        if let Some(b) = &opts.root_basis {
            search.lp.set_basis(b);
        }
    }

    let mut heap: BinaryHeap<Node<T>> = BinaryHeap::new();
    // Depth-first siblings, used until the first incumbent exists.
    let mut stack: Vec<Node<T>> = Vec::new();
    let mut seq = 0usize;
    let mut dive: Option<Node<T>> = Some(Node {
        bound: T::infinity(),
        seq,
        fixes: Vec::new(),
        basis: None,
    });
    let mut root_basis: Option<Basis> = None;
    let mut last_bound = T::infinity();
    let mut budget_hit = false;

    loop {
        let (node, continuing) = match dive.take() {
            Some(n) => (n, true),
            None => match stack.pop().or_else(|| heap.pop()) {
                Some(n) => (n, false),
                None => break,
            },
        };
        if let Some((_, inc)) = &incumbent {
            if close_enough(node.bound, *inc) {
                continue;
            }
        }
        if deadline.is_some_and(|d| Instant::now() >= d)
            || opts.node_limit.is_some_and(|l| stats.nodes >= l)
        {
            heap.push(node);
            budget_hit = true;
            break;
        }
        search.apply(&node.fixes);
        if !continuing {
            if let Some(b) = &node.basis {
                search.lp.set_basis(b);
            }
        }
        stats.nodes += 1;
        let is_root = stats.nodes == 1;
        let relaxed = search.relax();
        if is_root {
            root_basis = Some(search.lp.basis());
        }
        let score = match relaxed {
            Ok(Some(s)) => s,
            Ok(None) => {
                record_bound(&mut stats, (&heap, &stack), None, &incumbent, &mut last_bound, sgn);
                continue;
            }
            Err(LpStatus::Budget) => {
                heap.push(node);
                budget_hit = true;
                break;
            }
            Err(LpStatus::Unbounded) if is_root => {
                return finish(Status::Unbounded, None, None, root_basis, stats, search.lp.iterations);
            }
            Err(other) => {
                log::warn!("node relaxation ended with {other:?}; dropping node");
                numerical_trouble = true;
                if is_root {
                    return finish(Status::NumericalFailure, None, None, root_basis, stats, search.lp.iterations);
                }
                continue;
            }
        };
        let score = score.min(node.bound);
        if let Some((_, inc)) = &incumbent {
            if close_enough(score, *inc) {
                record_bound(&mut stats, (&heap, &stack), None, &incumbent, &mut last_bound, sgn);
                continue;
            }
        }
        let x = search.lp.values();
        if int_ok(&x) {
            log::trace!("incumbent {} at node {}", sgn * score, stats.nodes);
            incumbent = Some((x, score));
            heap.extend(stack.drain(..));
            record_bound(&mut stats, (&heap, &stack), None, &incumbent, &mut last_bound, sgn);
            if let Some((_, inc)) = &incumbent {
                let gb = global_bound((&heap, &stack), None, &incumbent);
                if close_enough(gb, *inc) {
                    break;
                }
            }
            continue;
        }

        let children = branch(p, &x, &node.fixes);
        let basis = Rc::new(search.lp.basis());
        let mut kids = children.into_iter().map(|fixes| {
            seq += 1;
            Node {
                bound: score,
                seq,
                fixes,
                basis: Some(basis.clone()),
            }
        });
        dive = kids.next();
        if incumbent.is_none() {
            let mut rest: Vec<_> = kids.collect();
            rest.reverse();
            stack.extend(rest);
        } else {
            heap.extend(kids);
        }
        record_bound(&mut stats, (&heap, &stack), dive.as_ref(), &incumbent, &mut last_bound, sgn);
        if let Some((_, inc)) = &incumbent {
            let gb = global_bound((&heap, &stack), dive.as_ref(), &incumbent);
            if close_enough(gb, *inc) {
                break;
            }
        }
    }

    let iterations = search.lp.iterations;
    if budget_hit {
        let gb = global_bound((&heap, &stack), dive.as_ref(), &incumbent).min(last_bound);
        let status = if incumbent.is_some() {
            Status::BudgetWithIncumbent
        } else {
            Status::BudgetNoIncumbent
        };
        let bound = if gb.is_finite() { Some(gb) } else { None };
        return finish(status, incumbent, bound, root_basis, stats, iterations);
    }
    if numerical_trouble {
        log::warn!("branch-and-bound dropped nodes after numerical failures");
    }
    match incumbent {
        Some((x, score)) => {
            let gb = global_bound((&heap, &stack), dive.as_ref(), &Some((Vec::new(), score)))
                .min(last_bound)
                .max(score);
            finish(Status::Optimal, Some((x, score)), Some(gb), root_basis, stats, iterations)
        }
        None => finish(Status::Infeasible, None, None, root_basis, stats, iterations),
    }
}

type Open<'a, T> = (&'a BinaryHeap<Node<T>>, &'a Vec<Node<T>>);

fn global_bound<T: Scalar>(open: Open<'_, T>, dive: Option<&Node<T>>, inc: &Option<(Vec<T>, T)>) -> T {
    let (heap, stack) = open;
    let mut b = T::neg_infinity();
    if let Some(top) = heap.peek() {
        b = b.max(top.bound);
    }
    for n in stack {
        b = b.max(n.bound);
    }
    if let Some(d) = dive {
        b = b.max(d.bound);
    }
    if let Some((_, s)) = inc {
        b = b.max(*s);
    }
    b
}

fn record_bound<T: Scalar>(
    stats: &mut SolveStats,
    open: Open<'_, T>,
    dive: Option<&Node<T>>,
    inc: &Option<(Vec<T>, T)>,
    last: &mut T,
    sgn: T,
) {
    let gb = global_bound(open, dive, inc).min(*last);
    *last = gb;
    stats.bound_trace.push((sgn * gb).to_f64_lossy());
}

/// Child fixings for the most fractional SOS1 group, else the most fractional binary.
fn branch<T: Scalar>(p: &MilpProblem<T>, x: &[T], fixes: &[(usize, bool)]) -> Vec<Vec<(usize, bool)>> {
    let tol = T::int_tol();
    let fixed_zero = |j: usize| fixes.iter().any(|&(k, one)| k == j && !one);
    let mut best_group = None;
    let mut best_score = tol;
    for (g, members) in p.sos1.iter().enumerate() {
        let mx = members.iter().map(|&j| x[j]).fold(T::zero(), T::max);
        let any_frac = members.iter().any(|&j| frac(x[j]) > tol);
        let score = T::one() - mx;
        if any_frac && score > best_score {
            best_score = score;
            best_group = Some(g);
        }
    }
    if let Some(g) = best_group {
        let members = &p.sos1[g];
        let mut order: Vec<usize> = members.iter().copied().filter(|&j| !fixed_zero(j)).collect();
        order.sort_by(|&a, &b| x[b].partial_cmp(&x[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
        return order
            .into_iter()
            .map(|j| {
                let mut f = fixes.to_vec();
                for &k in members {
                    if !f.iter().any(|e| e.0 == k) {
                        f.push((k, k == j));
                    } else if k == j {
                        for e in f.iter_mut() {
                            if e.0 == k {
                                e.1 = true;
                            }
                        }
                    }
                }
                f
            })
            .collect();
    }
    let mut pick = None;
    let mut best = tol;
    for &j in &p.binaries {
        let f = frac(x[j]);
        if f > best {
            best = f;
            pick = Some(j);
        }
    }
    let j = pick.expect("branch called on an integral point");
    let up_first = x[j] >= T::of(0.5);
    let mut one = fixes.to_vec();
    one.push((j, true));
    let mut zero = fixes.to_vec();
    zero.push((j, false));
    if up_first {
        vec![one, zero]
    } else {
        vec![zero, one]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{LpProblem, Row};

    #[test]
    fn knapsack_pair() {
        let mut lp: LpProblem<f64> = LpProblem::new(Sense::Maximize);
        let a = lp.add_var(5.0, 0.0, 1.0);
        let b = lp.add_var(4.0, 0.0, 1.0);
        lp.add_row(Row::le(vec![(a, 6.0), (b, 4.0)], 9.0));
        let mut p = MilpProblem::new(lp);
        p.mark_binary(a);
        p.mark_binary(b);
        let s = solve_milp(&p, &MilpOptions::default());
        assert_eq!(s.status, Status::Optimal);
        assert_eq!(s.x, vec![1.0, 0.0]);
        assert!((s.objective.unwrap() - 5.0).abs() < 1e-9);
    }

    #[test]
    fn no_integral_point() {
        let mut lp: LpProblem<f64> = LpProblem::new(Sense::Maximize);
        let x = lp.add_var(1.0, 0.0, 1.0);
        lp.add_row(Row::ge(vec![(x, 1.0)], 0.5));
        lp.add_row(Row::le(vec![(x, 1.0)], 0.5));
        let mut p = MilpProblem::new(lp);
        p.mark_binary(x);
        assert_eq!(solve_milp(&p, &MilpOptions::default()).status, Status::Infeasible);
    }

    #[test]
    fn integral_relaxation_needs_one_node() {
        let mut lp: LpProblem<f64> = LpProblem::new(Sense::Maximize);
        let x = lp.add_var(1.0, 0.0, 1.0);
        let y = lp.add_var(2.0, 0.0, 1.0);
        lp.add_row(Row::le(vec![(x, 1.0), (y, 1.0)], 2.0));
        let mut p = MilpProblem::new(lp);
        p.mark_binary(x);
        p.mark_binary(y);
        let s = solve_milp(&p, &MilpOptions::default());
        assert_eq!(s.status, Status::Optimal);
        assert_eq!(s.stats.nodes, 1);
    }

    #[test]
    fn sos_branching_picks_best_member() {
        // choose one of three items with a fractional-inducing side row
        let mut lp: LpProblem<f64> = LpProblem::new(Sense::Maximize);
        let xs: Vec<usize> = [3.0, 5.0, 4.0].iter().map(|&c| lp.add_var(c, 0.0, 1.0)).collect();
        let t = lp.add_var(0.0, 0.0, 10.0);
        lp.add_row(Row::eq(xs.iter().map(|&j| (j, 1.0)).collect(), 1.0));
        // weight row: 2 x0 + 7 x1 + 3 x2 <= 4 + t, t <= 1
        lp.add_row(Row::le(vec![(xs[0], 2.0), (xs[1], 7.0), (xs[2], 3.0), (t, -1.0)], 4.0));
        lp.set_bounds(t, 0.0, 1.0);
        let mut p = MilpProblem::new(lp);
        for &j in &xs {
            p.mark_binary(j);
        }
        p.add_sos1(xs.clone());
        let s = solve_milp(&p, &MilpOptions::default());
        assert_eq!(s.status, Status::Optimal);
        assert!((s.objective.unwrap() - 4.0).abs() < 1e-9);
        let tr = &s.stats.bound_trace;
        assert!(tr.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }
}
