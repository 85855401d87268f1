//! Planner propagation of sample trajectories, the saturating CTM plant and
//! the average-flow objective H(u; ρ).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::highway::HighwayConfig;
use crate::real::{to_f64, Real};
use crate::scenario::{Disturbance, ScenarioSample};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("schedule is {rows}x{cols}, expected {n}x{horizon}")]
    Dimension { rows: usize, cols: usize, n: usize, horizon: usize },
    #[error("speed {u} at edge {edge}, slot {t} is not in the menu")]
    NotInMenu { edge: usize, t: usize, u: f64 },
    #[error("menu index {i} at edge {edge}, slot {t} out of range")]
    BadIndex { edge: usize, t: usize, i: usize },
}

/// u_e(t) ∈ Γ for every edge and slot, stored as menu indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpeedSchedule {
    /// idx[e][t] = i with u_e(t) = γ^(i).
    pub idx: Vec<Vec<usize>>,
}

impl SpeedSchedule {
    pub fn from_indices<T: Real>(cfg: &HighwayConfig<T>, idx: Vec<Vec<usize>>) -> Result<Self, ScheduleError> {
        let s = SpeedSchedule { idx };
        s.check(cfg)?;
        Ok(s)
    }

    pub fn from_speeds<T: Real>(cfg: &HighwayConfig<T>, u: &[Vec<T>]) -> Result<Self, ScheduleError> {
        let idx = u
            .iter()
            .enumerate()
            .map(|(e, row)| {
                row.iter()
                    .enumerate()
                    .map(|(t, &v)| {
                        cfg.gamma
                            .iter()
                            .position(|&g| (g - v).abs() <= T::epsilon() * g * T::of(16.0))
                            .ok_or(ScheduleError::NotInMenu { edge: e + 1, t, u: to_f64(v) })
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_indices(cfg, idx)
    }

    /// Same menu index on every edge and slot.
    pub fn constant<T: Real>(cfg: &HighwayConfig<T>, i: usize) -> Self {
        SpeedSchedule { idx: vec![vec![i; cfg.horizon]; cfg.n()] }
    }

    /// Per-edge constant indices.
    pub fn per_edge<T: Real>(cfg: &HighwayConfig<T>, idx: &[usize]) -> Self {
        SpeedSchedule { idx: idx.iter().map(|&i| vec![i; cfg.horizon]).collect() }
    }

    pub fn check<T: Real>(&self, cfg: &HighwayConfig<T>) -> Result<(), ScheduleError> {
        let (n, horizon) = (cfg.n(), cfg.horizon);
        let cols = self.idx.first().map_or(0, Vec::len);
        if self.idx.len() != n || self.idx.iter().any(|r| r.len() != horizon) {
            return Err(ScheduleError::Dimension { rows: self.idx.len(), cols, n, horizon });
        }
        for (e, row) in self.idx.iter().enumerate() {
            for (t, &i) in row.iter().enumerate() {
                if i >= cfg.m() {
                    return Err(ScheduleError::BadIndex { edge: e + 1, t, i });
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.idx.len()
    }

    pub fn horizon(&self) -> usize {
        self.idx.first().map_or(0, Vec::len)
    }

    pub fn speed<T: Real>(&self, cfg: &HighwayConfig<T>, e: usize, t: usize) -> T {
        cfg.gamma[self.idx[e][t]]
    }

    pub fn speeds<T: Real>(&self, cfg: &HighwayConfig<T>) -> Vec<Vec<T>> {
        self.idx.iter().map(|r| r.iter().map(|&i| cfg.gamma[i]).collect()).collect()
    }

    /// Speeds applied at slot `t`.
    pub fn column<T: Real>(&self, cfg: &HighwayConfig<T>, t: usize) -> Vec<T> {
        self.idx.iter().map(|r| cfg.gamma[r[t]]).collect()
    }

    /// Binary encoding x_{e,i}(t).
    pub fn x(&self, e: usize, i: usize, t: usize) -> bool {
        self.idx[e][t] == i
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// Inflow above the capacity f̄_e.
    Capacity,
    /// Inflow above the congested supply τ_e ū_e (ρ̄_e − ρ_e).
    Supply,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// 0-based edge index.
    pub edge: usize,
    pub t: usize,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityTrajectory<T> {
    /// rho[e][t], t = 0..=T.
    pub rho: Vec<Vec<T>>,
    pub admissible: bool,
    pub first_violation: Option<Violation>,
}

impl<T: Real> DensityTrajectory<T> {
    pub fn horizon(&self) -> usize {
        self.rho.first().map_or(0, |r| r.len() - 1)
    }

    /// Σ over entries t < T of the 1-norm distance to [0, ρᶜ(u)].
    pub fn congestion_excess(&self, cfg: &HighwayConfig<T>, u: &SpeedSchedule) -> T {
        let mut sum = T::zero();
        for (e, row) in self.rho.iter().enumerate() {
            for t in 0..cfg.horizon {
                let rc = cfg.edges[e].critical_density(u.speed(cfg, e, t));
                let r = row[t];
                if r > rc {
                    sum = sum + (r - rc);
                } else if r < T::zero() {
                    sum = sum - r;
                }
            }
        }
        sum
    }

    /// Whether some ρ_e(t) with t < T exceeds ρᶜ_e(u_e(t)).
    pub fn congested(&self, cfg: &HighwayConfig<T>, u: &SpeedSchedule) -> bool {
        self.rho.iter().enumerate().any(|(e, row)| {
            (0..cfg.horizon).any(|t| row[t] > cfg.edges[e].critical_density(u.speed(cfg, e, t)))
        })
    }
}

/// Planner propagation of one sample under `u`, with demand admissibility
/// checked on every interior link.
pub fn propagate<T: Real>(
    cfg: &HighwayConfig<T>,
    u: &SpeedSchedule,
    sample: &ScenarioSample<T>,
) -> Result<DensityTrajectory<T>, ScheduleError> {
    let (n, horizon) = (cfg.n(), cfg.horizon);
    u.check(cfg)?;
    if sample.omega.len() != horizon || sample.rho0.len() != n {
        return Err(ScheduleError::Dimension { rows: sample.rho0.len(), cols: sample.omega.len(), n, horizon });
    }
    let mut rho = vec![vec![T::zero(); horizon + 1]; n];
    for e in 0..n {
        rho[e][0] = sample.rho0[e];
    }
    let mut first_violation = None;
    for t in 0..horizon {
        for e in 0..n {
            let edge = &cfg.edges[e];
            let h = cfg.h(e);
            let ue = u.speed(cfg, e, t);
            let cur = rho[e][t];
            let inflow = if e == 0 {
                sample.omega[t]
            } else {
                let demand = sample.kappa(e, t) * u.speed(cfg, e - 1, t) * rho[e - 1][t];
                if first_violation.is_none() {
                    let kind = if demand > edge.f_cap * (T::one() + T::feas_tol()) {
                        Some(ViolationKind::Capacity)
                    } else if demand > edge.supply(cur) + T::feas_tol() * edge.f_cap {
                        Some(ViolationKind::Supply)
                    } else {
                        None
                    };
                    first_violation = kind.map(|kind| Violation { edge: e, t, kind });
                }
                demand
            };
            rho[e][t + 1] = cur + h * inflow - h * ue * cur;
        }
    }
    Ok(DensityTrajectory { rho, admissible: first_violation.is_none(), first_violation })
}

/// One step of the (unsaturated, unclamped) planner dynamics.
pub fn planner_step<T: Real>(cfg: &HighwayConfig<T>, u_now: &[T], state: &[T], dist: &Disturbance<T>) -> Vec<T> {
    (0..cfg.n())
        .map(|e| {
            let inflow = if e == 0 {
                dist.omega
            } else {
                let kappa = (T::one() - dist.r_out[e - 1]) / (T::one() - dist.r_in[e]);
                kappa * u_now[e - 1] * state[e - 1]
            };
            state[e] + cfg.h(e) * inflow - cfg.h(e) * u_now[e] * state[e]
        })
        .collect()
}

/// Realized sending flow u·min(ρ, ρᶜ(u)) per edge.
pub fn realized_flow<T: Real>(cfg: &HighwayConfig<T>, u_now: &[T], state: &[T]) -> Vec<T> {
    (0..cfg.n())
        .map(|e| u_now[e] * state[e].min(cfg.edges[e].critical_density(u_now[e])).max(T::zero()))
        .collect()
}

/// One step of the saturating CTM plant.
pub fn plant_step<T: Real>(cfg: &HighwayConfig<T>, u_now: &[T], state: &[T], dist: &Disturbance<T>) -> Vec<T> {
    let n = cfg.n();
    let demand: Vec<T> = (0..n)
        .map(|e| u_now[e] * state[e].min(cfg.edges[e].critical_density(u_now[e])).max(T::zero()))
        .collect();
    let receive: Vec<T> = (0..n)
        .map(|e| {
            let edge = &cfg.edges[e];
            edge.f_cap.min(edge.supply(state[e])).max(T::zero())
        })
        .collect();
    // inflow[e] enters edge e; outflow[e] is the realized mainline exit of e.
    let mut inflow = vec![T::zero(); n];
    let mut outflow = demand.clone();
    inflow[0] = dist.omega.min(receive[0]);
    for e in 1..n {
        let kappa = (T::one() - dist.r_out[e - 1]) / (T::one() - dist.r_in[e]);
        let g = (kappa * demand[e - 1]).min(receive[e]);
        inflow[e] = g;
        outflow[e - 1] = if kappa > T::zero() { g / kappa } else { demand[e - 1] };
    }
    (0..n)
        .map(|e| {
            let next = state[e] + cfg.h(e) * (inflow[e] - outflow[e]);
            next.max(T::zero()).min(cfg.edges[e].rho_jam)
        })
        .collect()
}

/// Plant rollout of a whole sample under a fixed schedule.
pub fn plant_rollout<T: Real>(cfg: &HighwayConfig<T>, u: &SpeedSchedule, sample: &ScenarioSample<T>) -> Vec<Vec<T>> {
    let (n, horizon) = (cfg.n(), cfg.horizon);
    let mut rho = vec![vec![T::zero(); horizon + 1]; n];
    let mut state: Vec<T> = sample.rho0.clone();
    for e in 0..n {
        rho[e][0] = state[e];
    }
    for t in 0..horizon {
        state = plant_step(cfg, &u.column(cfg, t), &state, &sample.slice(t));
        for e in 0..n {
            rho[e][t + 1] = state[e];
        }
    }
    rho
}

/// H(u; ρ) = (1/T) Σ_{e, t<T} ρ_e(t) u_e(t).
pub fn average_flow<T: Real>(cfg: &HighwayConfig<T>, u: &SpeedSchedule, rho: &[Vec<T>]) -> T {
    let horizon = u.horizon();
    if horizon == 0 {
        return T::zero();
    }
    let mut sum = T::zero();
    for (e, row) in rho.iter().enumerate() {
        for t in 0..horizon {
            sum = sum + row[t] * u.speed(cfg, e, t);
        }
    }
    sum / T::of(horizon as f64)
}

/// Trajectory CSV rows: (sample, edge, t, rho, u, rho_crit); `u` and `rho_crit` empty at t = T.
pub fn write_trajectories_csv<T: Real, W: std::io::Write>(
    cfg: &HighwayConfig<T>,
    u: &SpeedSchedule,
    trajs: &[Vec<Vec<T>>],
    w: W,
) -> csv::Result<()> {
    use crate::io::fmt_sig;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["sample", "edge", "t", "rho", "u", "rho_crit"])?;
    for (l, rho) in trajs.iter().enumerate() {
        for (e, row) in rho.iter().enumerate() {
            for (t, &r) in row.iter().enumerate() {
                let (us, rc) = if t < u.horizon() {
                    let s = u.speed(cfg, e, t);
                    (fmt_sig(s), fmt_sig(cfg.edges[e].critical_density(s)))
                } else {
                    (String::new(), String::new())
                };
                out.write_record([l.to_string(), (e + 1).to_string(), t.to_string(), fmt_sig(r), us, rc])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}
