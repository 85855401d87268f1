//! Integer solution search: alternate between the upper-bounding MILP, which
//! proposes a schedule, and the certificate LP, which scores it, cutting off
//! each examined schedule until the bounds meet.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use drvsl_solver::{solve_milp, Basis, MilpOptions, Status};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ctm::SpeedSchedule;
use crate::dro::{evaluate, Certificate};
use crate::formulation::{build_ubp, cut_row, CutSet, InstanceData, VarIndex};
use crate::real::{to_f64, Real};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IssaOptions {
    /// Wall-clock budget in seconds.
    pub budget_s: f64,
    /// Stop once UB − LB ≤ gap_tol (veh/h).
    pub gap_tol: f64,
    #[serde(default)]
    pub max_iterations: Option<usize>,
    /// Relative gap handed to each UBP solve.
    #[serde(default = "default_milp_gap")]
    pub milp_gap: f64,
    /// Certify the m uniform schedules (one menu speed everywhere) alongside
    /// the pool before the first UBP.
    #[serde(default = "yes")]
    pub seed_uniform: bool,
    /// Branch-and-bound node cap per UBP solve. A capped solve still yields
    /// its best schedule and a valid bound.
    #[serde(default)]
    pub ubp_node_limit: Option<usize>,
}

fn default_milp_gap() -> f64 {
    1e-9
}

fn yes() -> bool {
    true
}

impl Default for IssaOptions {
    fn default() -> Self {
        IssaOptions {
            budget_s: 60.0,
            gap_tol: 0.0,
            max_iterations: None,
            milp_gap: default_milp_gap(),
            seed_uniform: true,
            ubp_node_limit: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GapClosed,
    /// Every schedule in the decision space has been examined.
    Exhausted,
    Budget,
    IterationLimit,
    SolverFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub ub: f64,
    /// Certificate of the candidate, when finite.
    pub obj: Option<f64>,
    pub lb: Option<f64>,
    pub feasible: bool,
    /// Wall-clock time; kept out of JSON so reports are reproducible.
    #[serde(skip)]
    pub seconds: f64,
    pub schedule: SpeedSchedule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IssaReport<T> {
    pub u_best: Option<SpeedSchedule>,
    pub certificate: Option<T>,
    pub iterations: usize,
    pub feasible: usize,
    pub infeasible: usize,
    pub ub: Option<T>,
    pub lb: Option<T>,
    pub gap: Option<T>,
    pub termination: Termination,
    pub log: Vec<IterationRecord>,
    /// Feasible candidates in the order found, with their certificates.
    pub candidates: Vec<(SpeedSchedule, T)>,
}

/// Warm-start pool of previously feasible schedules, FIFO-capped.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Pool {
    pub cap: usize,
    pub entries: VecDeque<SpeedSchedule>,
}

impl Pool {
    pub fn new(cap: usize) -> Self {
        Pool { cap, entries: VecDeque::new() }
    }

    pub fn push(&mut self, u: SpeedSchedule) {
        if self.cap == 0 {
            return;
        }
        if let Some(pos) = self.entries.iter().position(|v| v == &u) {
            self.entries.remove(pos);
        }
        while self.entries.len() >= self.cap {
            self.entries.pop_front();
        }
        self.entries.push_back(u);
    }
}

/// Appends the report's feasible candidates, evicting the oldest past the cap.
pub fn update_pool<T: Real>(pool: &Pool, report: &IssaReport<T>) -> Pool {
    let mut out = pool.clone();
    for (u, _) in &report.candidates {
        out.push(u.clone());
    }
    out
}

struct Tracker<T> {
    ub: Option<T>,
    lb: Option<T>,
    best: Option<(SpeedSchedule, T)>,
    feasible: usize,
    infeasible: usize,
    candidates: Vec<(SpeedSchedule, T)>,
}

impl<T: Real> Tracker<T> {
    fn record(&mut self, u: &SpeedSchedule, cert: &Certificate<T>) {
        match cert.value {
            Some(v) if cert.is_finite() => {
                self.feasible += 1;
                self.candidates.push((u.clone(), v));
                // Strict improvement only: first found wins ties.
                if self.best.as_ref().map_or(true, |(_, b)| v > *b) {
                    self.best = Some((u.clone(), v));
                }
                self.lb = Some(self.lb.map_or(v, |l| l.max(v)));
            }
            _ => self.infeasible += 1,
        }
    }

    fn gap(&self) -> Option<T> {
        match (self.ub, self.lb) {
            (Some(u), Some(l)) => Some((u - l).max(T::zero())),
            _ => None,
        }
    }
}

pub fn run<T: Real>(inst: &InstanceData<T>, opts: &IssaOptions, pool: &Pool) -> IssaReport<T> {
    let started = Instant::now();
    let deadline = started + Duration::from_secs_f64(opts.budget_s.max(0.0));
    let idx = VarIndex::new(inst);
    let mut tr = Tracker { ub: None, lb: None, best: None, feasible: 0, infeasible: 0, candidates: Vec::new() };
    let mut log = Vec::new();

    // Pool candidates: evaluate concurrently, cut them all before iteration 1.
    let mut cuts = CutSet::new();
    let mut seen = Vec::new();
    let uniform = (0..inst.cfg.m())
        .filter(|_| opts.seed_uniform)
        .map(|i| SpeedSchedule::constant(&inst.cfg, i));
    for u in pool.entries.iter().cloned().chain(uniform) {
        if u.check(&inst.cfg).is_ok() && inst.respects_hold(&u) && !seen.contains(&u) {
            seen.push(u);
        }
    }
    let pre: Vec<Certificate<T>> = seen.par_iter().map(|u| evaluate(inst, u).certificate).collect();
    for (u, c) in seen.into_iter().zip(pre) {
        tr.record(&u, &c);
        cuts.push(u);
    }

    let mut ubp = build_ubp(inst, &cuts);
    let mut basis: Option<Basis> = None;
    let mut k = 0;
    let termination = loop {
        if let Some(limit) = opts.max_iterations {
            if k >= limit {
                break Termination::IterationLimit;
            }
        }
        if Instant::now() >= deadline {
            break Termination::Budget;
        }
        let milp_opts = MilpOptions {
            deadline: Some(deadline),
            gap_tol: opts.milp_gap,
            root_basis: basis.take(),
            node_limit: opts.ubp_node_limit,
            ..MilpOptions::default()
        };
        let sol = solve_milp(&ubp, &milp_opts);
        basis = sol.basis.clone();
        let out_of_time = Instant::now() >= deadline;
        let bound = match sol.status {
            Status::Infeasible => {
                // No schedule left: the incumbent is optimal.
                tr.ub = tr.lb;
                break Termination::Exhausted;
            }
            Status::Optimal => sol.best_bound.or(sol.objective),
            Status::BudgetWithIncumbent => sol.best_bound,
            Status::BudgetNoIncumbent => {
                // The proven bound still covers every unexamined schedule.
                if let Some(b) = sol.best_bound {
                    let global = tr.lb.map_or(b, |l| b.max(l));
                    tr.ub = Some(tr.ub.map_or(global, |old| old.min(global)));
                }
                break Termination::Budget;
            }
            Status::Unbounded | Status::NumericalFailure => break Termination::SolverFailure,
        };
        let Some(bound) = bound else {
            break Termination::SolverFailure;
        };
        k += 1;
        let u = idx.schedule(&sol.x);
        let eval = evaluate(inst, &u);
        // Remaining schedules are bounded by the UBP, examined ones by LB.
        let global = tr.lb.map_or(bound, |l| bound.max(l));
        tr.ub = Some(tr.ub.map_or(global, |old| old.min(global)));
        tr.record(&u, &eval.certificate);
        if let (Some(ub), Some(lb)) = (tr.ub, tr.lb) {
            if ub < lb {
                tr.ub = Some(lb);
            }
        }
        log.push(IterationRecord {
            k,
            ub: to_f64(tr.ub.expect("set above")),
            obj: eval.certificate.value.map(to_f64),
            lb: tr.lb.map(to_f64),
            feasible: eval.certificate.is_finite(),
            seconds: started.elapsed().as_secs_f64(),
            schedule: u.clone(),
        });
        log::debug!(
            "iteration {k}: ub {:?} obj {:?} lb {:?}",
            tr.ub.map(to_f64),
            eval.certificate.value.map(to_f64),
            tr.lb.map(to_f64)
        );
        ubp.lp.add_named_row(format!("cut_{}", cuts.len()), cut_row(&idx, &u));
        cuts.push(u);
        if tr.gap().is_some_and(|g| to_f64(g) <= opts.gap_tol) {
            break Termination::GapClosed;
        }
        if out_of_time {
            break Termination::Budget;
        }
    };

    let (u_best, certificate) = match tr.best.clone() {
        Some((u, v)) => (Some(u), Some(v)),
        None => (None, None),
    };
    IssaReport {
        u_best,
        certificate,
        iterations: k,
        feasible: tr.feasible,
        infeasible: tr.infeasible,
        ub: tr.ub,
        lb: tr.lb,
        gap: tr.gap(),
        termination,
        log,
        candidates: tr.candidates,
    }
}

/// Iteration log CSV: k, UB, obj, LB, feasible, seconds.
pub fn write_iterations_csv<W: std::io::Write>(log: &[IterationRecord], w: W) -> csv::Result<()> {
    use crate::io::fmt_sig_f64;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["k", "ub", "obj", "lb", "feasible", "seconds"])?;
    let opt = |v: Option<f64>| v.map(fmt_sig_f64).unwrap_or_default();
    for r in log {
        out.write_record([
            r.k.to_string(),
            fmt_sig_f64(r.ub),
            opt(r.obj),
            opt(r.lb),
            r.feasible.to_string(),
            format!("{:.3}", r.seconds),
        ])?;
    }
    out.flush()?;
    Ok(())
}
