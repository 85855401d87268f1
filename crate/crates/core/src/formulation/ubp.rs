use drvsl_solver::{LpProblem, MilpProblem, Row, Sense};

use super::rows::{budget_rows, dual_rows, glover_rows, mccormick_rows, speed_rows, trajectory_rows};
use super::{InstanceData, VarIndex};
use crate::ctm::SpeedSchedule;
use crate::real::{lit, Real};

/// Examined binary supports, each excluded by one canonical integer cut.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CutSet {
    pub examined: Vec<SpeedSchedule>,
}

impl CutSet {
    pub fn new() -> Self {
        CutSet::default()
    }

    pub fn len(&self) -> usize {
        self.examined.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examined.is_empty()
    }

    pub fn contains(&self, u: &SpeedSchedule) -> bool {
        self.examined.contains(u)
    }

    pub fn push(&mut self, u: SpeedSchedule) {
        self.examined.push(u);
    }
}

/// Σ_Ω x − Σ_Ω̄ x ≤ |Ω| − 1 for the support Ω of `u` (read on the first slot of each block).
pub fn cut_row<T: Real>(idx: &VarIndex, u: &SpeedSchedule) -> Row<T> {
    let mut coeffs = Vec::with_capacity(idx.num_x());
    for b in 0..idx.blocks {
        for e in 0..idx.n {
            let chosen = u.idx[e][b * idx.hold];
            for i in 0..idx.m {
                let c = if i == chosen { T::one() } else { -T::one() };
                coeffs.push((idx.x_block(e, i, b), c));
            }
        }
    }
    let card = lit::<T>((idx.blocks * idx.n) as f64);
    Row::le(coeffs, card - T::one())
}

/// Variable bounds shared by the UBP and P5.
pub fn apply_bounds<T: Real>(lp: &mut LpProblem<T>, inst: &InstanceData<T>, idx: &VarIndex) {
    let inf = T::infinity();
    for j in 0..idx.num_x() {
        lp.set_bounds(j, T::zero(), T::one());
    }
    lp.set_bounds(idx.lambda(), T::zero(), inf);
    for (l, smp) in inst.samples.iter().enumerate() {
        for t in 0..idx.horizon {
            for e in 0..idx.n {
                let rj = inst.cfg.edges[e].rho_jam;
                let rho = idx.rho(l, e, t);
                if t == 0 {
                    lp.set_bounds(rho, smp.rho0[e], smp.rho0[e]);
                } else {
                    lp.set_bounds(rho, T::zero(), rj);
                }
                lp.set_bounds(idx.mu(l, e, t), -inf, inf);
                lp.set_bounds(idx.nu(l, e, t), T::zero(), inst.nu_bar(e));
                lp.set_bounds(idx.eta(l, e, t), T::zero(), inst.eta_bar);
                lp.set_bounds(idx.s(l, e, t), T::zero(), inf);
                for i in 0..idx.m {
                    lp.set_bounds(idx.y(l, e, i, t), T::zero(), rj);
                    lp.set_bounds(idx.z(l, e, i, t), T::zero(), inst.eta_bar);
                }
                if idx.budget {
                    lp.set_bounds(idx.excess(l, e, t), T::zero(), inf);
                }
            }
        }
    }
}

/// Columns, bounds, binaries and every structural block except the
/// McCormick rows and the s-dependent objective terms.
pub(crate) fn build_core<T: Real>(inst: &InstanceData<T>, idx: &VarIndex, with_s: bool) -> MilpProblem<T> {
    let mut lp = LpProblem::new(Sense::Maximize);
    for j in 0..idx.num_vars() {
        lp.add_named_var(idx.name(j), T::zero(), T::zero(), T::zero());
    }
    apply_bounds(&mut lp, inst, idx);
    let inv_n = T::one() / lit::<T>(idx.n_samples as f64);
    lp.objective[idx.lambda()] = -inst.epsilon;
    for l in 0..idx.n_samples {
        for t in 0..idx.horizon {
            for e in 0..idx.n {
                let edge = &inst.cfg.edges[e];
                lp.objective[idx.eta(l, e, t)] = -inv_n * edge.f_cap * edge.rho_jam;
                if with_s {
                    lp.objective[idx.s(l, e, t)] = inv_n;
                } else {
                    lp.set_bounds(idx.s(l, e, t), T::zero(), T::zero());
                }
            }
        }
    }
    let mut blocks = vec![speed_rows(idx), glover_rows(inst, idx), trajectory_rows(inst, idx), dual_rows(inst, idx)];
    if inst.budget_rows {
        blocks.push(budget_rows(inst, idx));
    }
    for (name, row) in blocks.into_iter().flatten() {
        lp.add_named_row(name, row);
    }
    let mut p = MilpProblem::new(lp);
    for j in 0..idx.num_x() {
        p.mark_binary(j);
    }
    for b in 0..idx.blocks {
        for e in 0..idx.n {
            p.add_sos1((0..idx.m).map(|i| idx.x_block(e, i, b)).collect());
        }
    }
    p
}

/// UBP: maximize −λε − (1/N)Σ(f̄ρ̄η − s) over the McCormick relaxation, with
/// one canonical cut per examined candidate.
pub fn build_ubp<T: Real>(inst: &InstanceData<T>, cuts: &CutSet) -> MilpProblem<T> {
    let idx = VarIndex::new(inst);
    let mut p = build_core(inst, &idx, true);
    for (name, row) in mccormick_rows(inst, &idx) {
        p.lp.add_named_row(name, row);
    }
    for (k, u) in cuts.examined.iter().enumerate() {
        p.lp.add_named_row(format!("cut_{k}"), cut_row(&idx, u));
    }
    p
}

/// Structural core of P5: every block of the UBP except the McCormick rows,
/// with s pinned to 0.
pub(crate) fn build_core_for_p5<T: Real>(inst: &InstanceData<T>, idx: &VarIndex) -> MilpProblem<T> {
    build_core(inst, idx, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn indicator(idx: &VarIndex, u: &SpeedSchedule) -> Vec<f64> {
        let mut x = vec![0.0; idx.num_vars()];
        for b in 0..idx.blocks {
            for e in 0..idx.n {
                x[idx.x_block(e, u.idx[e][b * idx.hold], b)] = 1.0;
            }
        }
        x
    }

    #[test]
    fn cut_removes_exactly_its_schedule() {
        let idx = VarIndex { n: 2, horizon: 2, m: 3, n_samples: 1, hold: 1, blocks: 2, budget: false };
        let u = SpeedSchedule { idx: vec![vec![0, 2], vec![1, 1]] };
        let row: Row<f64> = cut_row(&idx, &u);
        assert!(row.violation(&indicator(&idx, &u)) > 0.5);
        for v in [vec![vec![1, 2], vec![1, 1]], vec![vec![0, 2], vec![1, 0]], vec![vec![2, 0], vec![0, 0]]] {
            let v = SpeedSchedule { idx: v };
            assert_eq!(row.violation(&indicator(&idx, &v)), 0.0);
        }
    }
}
