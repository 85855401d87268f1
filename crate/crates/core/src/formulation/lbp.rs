use drvsl_solver::{solve_lp, LpProblem, Row, Sense, Status};

use super::InstanceData;
use crate::ctm::{DensityTrajectory, SpeedSchedule};
use crate::real::{lit, Real};

/// Columns of the fixed-schedule LPs. Primal: λ then (μ, ν, η) per
/// (sample, slot, edge). Dual: (ρ, d) per (sample, slot, edge).
#[derive(Debug, Clone, Copy)]
pub struct LbpIndex {
    pub n: usize,
    pub horizon: usize,
}

impl LbpIndex {
    fn cell(&self, l: usize, e: usize, t: usize) -> usize {
        (l * self.horizon + t) * self.n + e
    }

    pub fn lambda(&self) -> usize {
        0
    }

    pub fn mu(&self, l: usize, e: usize, t: usize) -> usize {
        1 + 3 * self.cell(l, e, t)
    }

    pub fn nu(&self, l: usize, e: usize, t: usize) -> usize {
        2 + 3 * self.cell(l, e, t)
    }

    pub fn eta(&self, l: usize, e: usize, t: usize) -> usize {
        3 + 3 * self.cell(l, e, t)
    }

    pub fn rho(&self, l: usize, e: usize, t: usize) -> usize {
        2 * self.cell(l, e, t)
    }

    pub fn dev(&self, l: usize, e: usize, t: usize) -> usize {
        2 * self.cell(l, e, t) + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LbpOutcome<T> {
    /// Optimal value of the fixed-schedule problem.
    Value(T),
    /// A trajectory violates a demand row.
    Inadmissible { sample: usize },
    /// Σ_l dist₁(ρ̂, [0, ρᶜ(u)]) exceeds Nε; the primal is unbounded.
    OverBudget { excess: T },
    /// The LP solver did not return an optimum.
    Failed(Status),
}

impl<T: Copy> LbpOutcome<T> {
    pub fn value(&self) -> Option<T> {
        match self {
            LbpOutcome::Value(v) => Some(*v),
            _ => None,
        }
    }
}

fn check_trajs<T: Real>(inst: &InstanceData<T>, trajs: &[DensityTrajectory<T>]) -> Result<(), LbpOutcome<T>> {
    assert_eq!(trajs.len(), inst.n_samples(), "one trajectory per sample");
    match trajs.iter().position(|tr| !tr.admissible) {
        Some(sample) => Err(LbpOutcome::Inadmissible { sample }),
        None => Ok(()),
    }
}

/// LBP in primal form with z eliminated (z_i = η when u = γ_i):
/// max −λε − (1/N)Σ(f̄ρ̄η − νρ̂) s.t. c(u)η ≥ μ, ν = μ + u/T, |ν| ≤ λ, 0 ≤ η ≤ η̄.
pub fn build_lbp<T: Real>(
    inst: &InstanceData<T>,
    u: &SpeedSchedule,
    trajs: &[DensityTrajectory<T>],
) -> Result<(LpProblem<T>, LbpIndex), LbpOutcome<T>> {
    check_trajs(inst, trajs)?;
    let cfg = &inst.cfg;
    let ix = LbpIndex { n: cfg.n(), horizon: cfg.horizon };
    let inv_n = T::one() / lit::<T>(inst.n_samples() as f64);
    let inv_t = T::one() / lit::<T>(cfg.horizon as f64);
    let inf = T::infinity();
    let mut lp = LpProblem::new(Sense::Maximize);
    lp.add_named_var("lambda", -inst.epsilon, T::zero(), inf);
    for (l, tr) in trajs.iter().enumerate() {
        for t in 0..cfg.horizon {
            for e in 0..cfg.n() {
                let edge = &cfg.edges[e];
                let tag = format!("{l}_{}_{t}", e + 1);
                lp.add_named_var(format!("mu_{tag}"), T::zero(), -inf, inf);
                lp.add_named_var(format!("nu_{tag}"), inv_n * tr.rho[e][t], -inf, inf);
                lp.add_named_var(format!("eta_{tag}"), -inv_n * edge.f_cap * edge.rho_jam, T::zero(), inst.eta_bar);
                let speed = u.speed(cfg, e, t);
                let (mu, nu, eta) = (ix.mu(l, e, t), ix.nu(l, e, t), ix.eta(l, e, t));
                lp.add_named_row(
                    format!("d_cong_{tag}"),
                    Row::ge(vec![(eta, edge.congestion_coeff(speed)), (mu, -T::one())], T::zero()),
                );
                lp.add_named_row(format!("d_nu_{tag}"), Row::eq(vec![(nu, T::one()), (mu, -T::one())], speed * inv_t));
                lp.add_named_row(format!("d_up_{tag}"), Row::le(vec![(nu, T::one()), (0, -T::one())], T::zero()));
                lp.add_named_row(format!("d_lo_{tag}"), Row::le(vec![(nu, -T::one()), (0, -T::one())], T::zero()));
            }
        }
    }
    Ok((lp, ix))
}

/// LBP dual: min (1/(NT))Σ uρ over 0 ≤ ρ ≤ ρᶜ(u), d ≥ |ρ − ρ̂|, Σ d ≤ Nε.
pub fn build_lbp_dual<T: Real>(
    inst: &InstanceData<T>,
    u: &SpeedSchedule,
    trajs: &[DensityTrajectory<T>],
) -> Result<(LpProblem<T>, LbpIndex), LbpOutcome<T>> {
    check_trajs(inst, trajs)?;
    let cfg = &inst.cfg;
    let ix = LbpIndex { n: cfg.n(), horizon: cfg.horizon };
    let scale = T::one() / lit::<T>((inst.n_samples() * cfg.horizon) as f64);
    let mut lp = LpProblem::new(Sense::Minimize);
    let mut budget = Vec::new();
    for (l, tr) in trajs.iter().enumerate() {
        for t in 0..cfg.horizon {
            for e in 0..cfg.n() {
                let speed = u.speed(cfg, e, t);
                let tag = format!("{l}_{}_{t}", e + 1);
                let rc = cfg.edges[e].critical_density(speed);
                let rho = lp.add_named_var(format!("rho_{tag}"), scale * speed, T::zero(), rc);
                let d = lp.add_named_var(format!("d_{tag}"), T::zero(), T::zero(), T::infinity());
                debug_assert_eq!((rho, d), (ix.rho(l, e, t), ix.dev(l, e, t)));
                let hat = tr.rho[e][t];
                lp.add_named_row(format!("dev_hi_{tag}"), Row::ge(vec![(d, T::one()), (rho, -T::one())], -hat));
                lp.add_named_row(format!("dev_lo_{tag}"), Row::ge(vec![(d, T::one()), (rho, T::one())], hat));
                budget.push((d, T::one()));
            }
        }
    }
    lp.add_named_row("budget", Row::le(budget, lit::<T>(inst.n_samples() as f64) * inst.epsilon));
    Ok((lp, ix))
}

/// Total 1-norm distance of the sample trajectories to the no-congestion box.
pub fn total_excess<T: Real>(inst: &InstanceData<T>, u: &SpeedSchedule, trajs: &[DensityTrajectory<T>]) -> T {
    trajs
        .iter()
        .map(|tr| tr.congestion_excess(&inst.cfg, u))
        .fold(T::zero(), |a, b| a + b)
}

fn budget<T: Real>(inst: &InstanceData<T>) -> T {
    lit::<T>(inst.n_samples() as f64) * inst.epsilon
}

/// Solves the LBP through its dual, after the distance-to-box pre-check.
pub fn solve_lbp_dual<T: Real>(inst: &InstanceData<T>, u: &SpeedSchedule, trajs: &[DensityTrajectory<T>]) -> LbpOutcome<T> {
    if let Err(o) = check_trajs(inst, trajs) {
        return o;
    }
    let excess = total_excess(inst, u, trajs);
    let b = budget(inst);
    if excess > b + T::feas_tol() * (T::one() + b) {
        return LbpOutcome::OverBudget { excess };
    }
    let (lp, _) = match build_lbp_dual(inst, u, trajs) {
        Ok(p) => p,
        Err(o) => return o,
    };
    let sol = solve_lp(&lp);
    match (sol.status, sol.objective) {
        (Status::Optimal, Some(v)) => LbpOutcome::Value(v),
        (Status::Infeasible, _) => LbpOutcome::OverBudget { excess },
        (s, _) => LbpOutcome::Failed(s),
    }
}

/// Solves the LBP in primal form, doubling η̄ while some η sits at its bound.
/// Returns the outcome and the η̄ finally used.
pub fn solve_lbp_primal<T: Real>(
    inst: &InstanceData<T>,
    u: &SpeedSchedule,
    trajs: &[DensityTrajectory<T>],
) -> (LbpOutcome<T>, T) {
    const MAX_DOUBLINGS: usize = 40;
    let mut work = inst.clone();
    let mut prev: Option<T> = None;
    for _ in 0..=MAX_DOUBLINGS {
        let (lp, ix) = match build_lbp(&work, u, trajs) {
            Ok(p) => p,
            Err(o) => return (o, work.eta_bar),
        };
        let sol = solve_lp(&lp);
        let Some(v) = sol.objective.filter(|_| sol.status == Status::Optimal) else {
            return (LbpOutcome::Failed(sol.status), work.eta_bar);
        };
        let mut max_eta = T::zero();
        for l in 0..inst.n_samples() {
            for t in 0..ix.horizon {
                for e in 0..ix.n {
                    max_eta = max_eta.max(sol.x[ix.eta(l, e, t)]);
                }
            }
        }
        // A doubling that leaves the value unchanged means η sat on an optimal face.
        let stalled = prev.is_some_and(|p| (v - p).abs() <= T::opt_tol() * (T::one() + v.abs()));
        if max_eta < lit::<T>(0.99) * work.eta_bar || stalled {
            return (LbpOutcome::Value(v), work.eta_bar);
        }
        prev = Some(v);
        work.eta_bar = work.eta_bar * lit(2.0);
    }
    let excess = total_excess(inst, u, trajs);
    (LbpOutcome::OverBudget { excess }, work.eta_bar)
}
