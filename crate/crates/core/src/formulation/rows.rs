//! Structural row blocks. Every builder takes the instance and its column
//! layout and returns named rows; `build_ubp` concatenates them.

use drvsl_solver::Row;

use super::{GloverMode, InstanceData, VarIndex};
use crate::real::{lit, Real};

pub type NamedRow<T> = (String, Row<T>);

/// Linearization of z = x∘η and y = x∘ρ for every (l, e, i, t).
pub fn glover_rows<T: Real>(inst: &InstanceData<T>, idx: &VarIndex) -> Vec<NamedRow<T>> {
    let mut out = Vec::new();
    let eb = inst.eta_bar;
    for l in 0..idx.n_samples {
        for t in 0..idx.horizon {
            for e in 0..idx.n {
                let rj = inst.cfg.edges[e].rho_jam;
                let (rho, eta) = (idx.rho(l, e, t), idx.eta(l, e, t));
                for i in 0..idx.m {
                    let (x, y, z) = (idx.x(e, i, t), idx.y(l, e, i, t), idx.z(l, e, i, t));
                    let tag = format!("{l}_{}_{}_{t}", e + 1, i + 1);
                    out.push((format!("gz_up_{tag}"), Row::le(vec![(z, T::one()), (x, -eb)], T::zero())));
                    out.push((format!("gy_up_{tag}"), Row::le(vec![(y, T::one()), (x, -rj)], T::zero())));
                    if inst.glover == GloverMode::Full {
                        // η − η̄(1 − x) ≤ z ≤ η
                        out.push((
                            format!("gz_lo_{tag}"),
                            Row::ge(vec![(z, T::one()), (eta, -T::one()), (x, -eb)], -eb),
                        ));
                        out.push((format!("gz_eta_{tag}"), Row::le(vec![(z, T::one()), (eta, -T::one())], T::zero())));
                        out.push((
                            format!("gy_lo_{tag}"),
                            Row::ge(vec![(y, T::one()), (rho, -T::one()), (x, -rj)], -rj),
                        ));
                        out.push((format!("gy_rho_{tag}"), Row::le(vec![(y, T::one()), (rho, -T::one())], T::zero())));
                    }
                }
                let tag = format!("{l}_{}_{t}", e + 1);
                let mut zs: Vec<(usize, T)> = (0..idx.m).map(|i| (idx.z(l, e, i, t), T::one())).collect();
                zs.push((eta, -T::one()));
                out.push((format!("gz_sum_{tag}"), Row::eq(zs, T::zero())));
                let mut ys: Vec<(usize, T)> = (0..idx.m).map(|i| (idx.y(l, e, i, t), T::one())).collect();
                ys.push((rho, -T::one()));
                out.push((format!("gy_sum_{tag}"), Row::eq(ys, T::zero())));
            }
        }
    }
    out
}

/// Σ_i γ_i y_{e,i}(t), the linearized outflow u_e(t) ρ_e(t).
fn flow_terms<T: Real>(inst: &InstanceData<T>, idx: &VarIndex, l: usize, e: usize, t: usize, scale: T) -> Vec<(usize, T)> {
    (0..idx.m)
        .map(|i| (idx.y(l, e, i, t), scale * inst.cfg.gamma[i]))
        .collect()
}

/// Density recursion for t = 0..T−2 (ρ(T) is never used) and the two demand
/// rows per interior link and slot. ρ(0) is pinned by bounds.
pub fn trajectory_rows<T: Real>(inst: &InstanceData<T>, idx: &VarIndex) -> Vec<NamedRow<T>> {
    let mut out = Vec::new();
    for (l, smp) in inst.samples.iter().enumerate() {
        for t in 0..idx.horizon {
            for e in 0..idx.n {
                let h = inst.cfg.h(e);
                if t + 1 < idx.horizon {
                    let mut c = vec![(idx.rho(l, e, t + 1), T::one()), (idx.rho(l, e, t), -T::one())];
                    c.extend(flow_terms(inst, idx, l, e, t, h));
                    let rhs = if e == 0 {
                        h * smp.omega[t]
                    } else {
                        c.extend(flow_terms(inst, idx, l, e - 1, t, -h * smp.kappa(e, t)));
                        T::zero()
                    };
                    out.push((format!("traj_{l}_{}_{t}", e + 1), Row::eq(c, rhs)));
                }
                if e > 0 {
                    let edge = &inst.cfg.edges[e];
                    let demand = flow_terms(inst, idx, l, e - 1, t, smp.kappa(e, t));
                    out.push((format!("cap_{l}_{}_{t}", e + 1), Row::le(demand.clone(), edge.f_cap)));
                    let tu = edge.f_cap / (edge.u_free * edge.rho_jam - edge.f_cap) * edge.u_free;
                    let mut c = demand;
                    c.push((idx.rho(l, e, t), tu));
                    out.push((format!("sup_{l}_{}_{t}", e + 1), Row::le(c, tu * edge.rho_jam)));
                }
            }
        }
    }
    out
}

/// Dual feasibility: the congestion row, ν = μ + u/T and |ν| ≤ λ.
pub fn dual_rows<T: Real>(inst: &InstanceData<T>, idx: &VarIndex) -> Vec<NamedRow<T>> {
    let mut out = Vec::new();
    let inv_t = T::one() / lit::<T>(idx.horizon as f64);
    let lam = idx.lambda();
    for l in 0..idx.n_samples {
        for t in 0..idx.horizon {
            for e in 0..idx.n {
                let edge = &inst.cfg.edges[e];
                let tag = format!("{l}_{}_{t}", e + 1);
                let (mu, nu, eta) = (idx.mu(l, e, t), idx.nu(l, e, t), idx.eta(l, e, t));
                // ρ̄ − ρᶜ(ū) with ρᶜ(ū) = f̄/ū
                let gap = edge.rho_jam - edge.f_cap / edge.u_free;
                let mut c: Vec<(usize, T)> = (0..idx.m)
                    .map(|i| (idx.z(l, e, i, t), inst.cfg.gamma[i] * gap))
                    .collect();
                c.push((mu, -T::one()));
                c.push((eta, edge.f_cap));
                out.push((format!("d_cong_{tag}"), Row::ge(c, T::zero())));
                let mut c = vec![(nu, T::one()), (mu, -T::one())];
                c.extend((0..idx.m).map(|i| (idx.x(e, i, t), -inst.cfg.gamma[i] * inv_t)));
                out.push((format!("d_nu_{tag}"), Row::eq(c, T::zero())));
                out.push((format!("d_up_{tag}"), Row::le(vec![(nu, T::one()), (lam, -T::one())], T::zero())));
                out.push((format!("d_lo_{tag}"), Row::le(vec![(nu, -T::one()), (lam, -T::one())], T::zero())));
            }
        }
    }
    out
}

/// McCormick envelope of s ≈ νρ over [0, ν̄] × [0, ρ̄]; s ≥ 0 is a bound.
pub fn mccormick_rows<T: Real>(inst: &InstanceData<T>, idx: &VarIndex) -> Vec<NamedRow<T>> {
    let mut out = Vec::new();
    for l in 0..idx.n_samples {
        for t in 0..idx.horizon {
            for e in 0..idx.n {
                let rj = inst.cfg.edges[e].rho_jam;
                let nb = inst.nu_bar(e);
                let (s, nu, rho) = (idx.s(l, e, t), idx.nu(l, e, t), idx.rho(l, e, t));
                let tag = format!("{l}_{}_{t}", e + 1);
                out.push((
                    format!("mc_lo_{tag}"),
                    Row::ge(vec![(s, T::one()), (rho, -nb), (nu, -rj)], -nb * rj),
                ));
                out.push((format!("mc_rho_{tag}"), Row::le(vec![(s, T::one()), (rho, -nb)], T::zero())));
                out.push((format!("mc_nu_{tag}"), Row::le(vec![(s, T::one()), (nu, -rj)], T::zero())));
            }
        }
    }
    out
}

/// One speed per (edge, hold block).
pub fn speed_rows<T: Real>(idx: &VarIndex) -> Vec<NamedRow<T>> {
    let mut out = Vec::new();
    for b in 0..idx.blocks {
        for e in 0..idx.n {
            let c = (0..idx.m).map(|i| (idx.x_block(e, i, b), T::one())).collect();
            out.push((format!("speed_{}_{b}", e + 1), Row::eq(c, T::one())));
        }
    }
    out
}

/// Optional rows v ≥ ρ − ρᶜ(u), Σ v ≤ Nε: exactly the condition under which
/// the fixed-schedule dual has a feasible point.
pub fn budget_rows<T: Real>(inst: &InstanceData<T>, idx: &VarIndex) -> Vec<NamedRow<T>> {
    let mut out = Vec::new();
    let mut total = Vec::new();
    for l in 0..idx.n_samples {
        for t in 0..idx.horizon {
            for e in 0..idx.n {
                let edge = &inst.cfg.edges[e];
                let v = idx.excess(l, e, t);
                let mut c = vec![(v, T::one()), (idx.rho(l, e, t), -T::one())];
                c.extend((0..idx.m).map(|i| (idx.x(e, i, t), edge.critical_density(inst.cfg.gamma[i]))));
                out.push((format!("excess_{l}_{}_{t}", e + 1), Row::ge(c, T::zero())));
                total.push((v, T::one()));
            }
        }
    }
    let budget = lit::<T>(idx.n_samples as f64) * inst.epsilon;
    out.push(("budget".into(), Row::le(total, budget)));
    out
}
