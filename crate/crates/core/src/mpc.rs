//! Receding-horizon loop: sample with the measured state, solve, apply the
//! first columns of the schedule to the plant, repeat.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ctm::{plant_step, planner_step, propagate, realized_flow, SpeedSchedule};
use crate::formulation::InstanceData;
use crate::highway::{EdgeEvent, HighwayConfig};
use crate::issa::{self, IssaOptions, Pool, Termination};
use crate::real::{to_f64, Real};
use crate::scenario::{rng_for, stream, SampleSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantModel {
    /// Saturating cell transmission model.
    #[default]
    Ctm,
    /// The planner's own linear dynamics, for consistency checks.
    Planner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: serde::de::DeserializeOwned"))]
pub struct MpcConfig<T> {
    pub steps: usize,
    pub replan_every: usize,
    /// Per-solve budget, seconds.
    pub t_run: f64,
    /// Per-edge speeds applied when no schedule has a finite certificate.
    pub fallback_u: Vec<T>,
    #[serde(default)]
    pub plant: PlantModel,
    #[serde(default = "default_pool_cap")]
    pub pool_cap: usize,
    /// Plant disturbances; the training spec is used when absent.
    #[serde(default)]
    pub plant_spec: Option<SampleSpec<T>>,
    /// Initial plant state; drawn from the plant spec when absent.
    #[serde(default)]
    pub initial_state: Option<Vec<T>>,
}

fn default_pool_cap() -> usize {
    20
}

#[derive(Debug, Error)]
pub enum MpcError {
    #[error("replan_every must be in 1..=T")]
    ReplanEvery,
    #[error("fallback_u must have one menu speed per edge")]
    Fallback,
    #[error("initial_state must have one density in [0, rho_jam] per edge")]
    InitialState,
}

impl<T: Real> MpcConfig<T> {
    pub fn validate(&self, cfg: &HighwayConfig<T>) -> Result<(), MpcError> {
        if self.replan_every == 0 || self.replan_every > cfg.horizon {
            return Err(MpcError::ReplanEvery);
        }
        if self.fallback_u.len() != cfg.n() || self.fallback_u.iter().any(|u| !cfg.gamma.contains(u)) {
            return Err(MpcError::Fallback);
        }
        if let Some(s) = &self.initial_state {
            if s.len() != cfg.n()
                || s.iter().zip(&cfg.edges).any(|(&r, e)| !(r >= T::zero() && r <= e.rho_jam))
            {
                return Err(MpcError::InitialState);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord<T> {
    pub slot: usize,
    pub u: Vec<T>,
    pub rho: Vec<T>,
    pub rho_next: Vec<T>,
    /// Planner prediction of `rho_next` from the first training sample.
    pub planned_next: Option<Vec<T>>,
    pub flow: Vec<T>,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord<T> {
    pub slot: usize,
    pub certificate: Option<T>,
    pub schedule: Option<SpeedSchedule>,
    pub iterations: usize,
    pub feasible: usize,
    pub infeasible: usize,
    pub termination: Termination,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpcTrace<T> {
    pub slots: Vec<SlotRecord<T>>,
    pub solves: Vec<SolveRecord<T>>,
}

/// Everything the closed loop needs besides the plant.
#[derive(Debug, Clone)]
pub struct MpcSetup<'a, T> {
    pub cfg: &'a HighwayConfig<T>,
    pub events: &'a [EdgeEvent<T>],
    pub mpc: &'a MpcConfig<T>,
    pub training: &'a SampleSpec<T>,
    /// ε, η̄, hold and formulation flags; samples are replaced at each solve.
    pub template: &'a InstanceData<T>,
    pub n: usize,
    pub issa: &'a IssaOptions,
    pub seed: u64,
}

pub fn run_mpc<T: Real>(s: &MpcSetup<'_, T>) -> MpcTrace<T> {
    let plant_spec = s.mpc.plant_spec.as_ref().unwrap_or(s.training);
    let mut plant_rng = rng_for(s.seed, stream::PLANT);
    let mut train_rng = rng_for(s.seed, stream::TRAINING);
    let mut state: Vec<T> = match &s.mpc.initial_state {
        Some(x) => x.clone(),
        None => plant_spec.draw(s.cfg, &mut plant_rng).rho0,
    };
    let issa_opts = IssaOptions { budget_s: s.mpc.t_run, ..s.issa.clone() };
    let mut pool = Pool::new(s.mpc.pool_cap);
    let mut slots = Vec::with_capacity(s.mpc.steps);
    let mut solves = Vec::new();
    let mut plan: Option<(SpeedSchedule, Vec<Vec<T>>, HighwayConfig<T>)> = None;
    let mut plan_start = 0;
    for k in 0..s.mpc.steps {
        if k % s.mpc.replan_every == 0 {
            let plan_cfg = s.cfg.at_slot(s.events, k);
            let mut samples = s.training.draw_many(&plan_cfg, s.n, &mut train_rng);
            for smp in &mut samples {
                for (e, r) in smp.rho0.iter_mut().enumerate() {
                    *r = state[e].min(plan_cfg.edges[e].rho_jam);
                }
            }
            let mut inst = s.template.clone();
            inst.cfg = plan_cfg.clone();
            inst.samples = samples;
            let rep = issa::run(&inst, &issa_opts, &pool);
            pool = issa::update_pool(&pool, &rep);
            log::info!(
                "slot {k}: certificate {:?} after {} iterations",
                rep.certificate.map(to_f64),
                rep.iterations
            );
            plan = rep.u_best.as_ref().map(|u| {
                let pred = propagate(&plan_cfg, u, &inst.samples[0]).expect("validated").rho;
                (u.clone(), pred, plan_cfg.clone())
            });
            plan_start = k;
            solves.push(SolveRecord {
                slot: k,
                certificate: rep.certificate,
                schedule: rep.u_best.clone(),
                iterations: rep.iterations,
                feasible: rep.feasible,
                infeasible: rep.infeasible,
                termination: rep.termination,
                fallback: rep.u_best.is_none(),
            });
        }
        let offset = k - plan_start;
        let (u, planned_next, fallback) = match &plan {
            Some((sched, pred, pcfg)) => {
                let t = offset.min(sched.horizon() - 1);
                let next = (offset < sched.horizon()).then(|| pred.iter().map(|row| row[t + 1]).collect());
                (sched.column(pcfg, t), next, false)
            }
            None => (s.mpc.fallback_u.clone(), None, true),
        };
        let plant_cfg = s.cfg.at_slot(s.events, k);
        let dist = plant_spec.draw(&plant_cfg, &mut plant_rng).slice(0);
        let next = match s.mpc.plant {
            PlantModel::Ctm => plant_step(&plant_cfg, &u, &state, &dist),
            PlantModel::Planner => planner_step(&plant_cfg, &u, &state, &dist),
        };
        slots.push(SlotRecord {
            slot: k,
            flow: realized_flow(&plant_cfg, &u, &state),
            u,
            rho: state.clone(),
            rho_next: next.clone(),
            planned_next,
            fallback,
        });
        state = next;
    }
    MpcTrace { slots, solves }
}

/// Trace CSV: slot, edge, rho, u, flow, fallback.
pub fn write_trace_csv<T: Real, W: std::io::Write>(trace: &MpcTrace<T>, w: W) -> csv::Result<()> {
    use crate::io::fmt_sig;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["slot", "edge", "rho", "u", "flow", "fallback"])?;
    for r in &trace.slots {
        for e in 0..r.u.len() {
            out.write_record([
                r.slot.to_string(),
                (e + 1).to_string(),
                fmt_sig(r.rho[e]),
                fmt_sig(r.u[e]),
                fmt_sig(r.flow[e]),
                r.fallback.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::highway::EdgeParams;

    #[test]
    fn config_checks() {
        let edge = |id| EdgeParams {
            id,
            len: 2.0,
            lanes: 8,
            f_cap: 3.1e4,
            rho_jam: 1050.0,
            u_free: 140.0,
            has_onramp: false,
            has_offramp: false,
        };
        let cfg = HighwayConfig { edges: vec![edge(1), edge(2)], delta: 1.0 / 120.0, horizon: 4, gamma: vec![60.0, 120.0] };
        let ok = MpcConfig {
            steps: 8,
            replan_every: 2,
            t_run: 1.0,
            fallback_u: vec![60.0, 60.0],
            plant: PlantModel::Ctm,
            pool_cap: 20,
            plant_spec: None,
            initial_state: Some(vec![100.0, 1050.0]),
        };
        assert!(ok.validate(&cfg).is_ok());
        let bad = [
            MpcConfig { replan_every: 5, ..ok.clone() },
            MpcConfig { fallback_u: vec![60.0, 80.0], ..ok.clone() },
            MpcConfig { initial_state: Some(vec![100.0, 1051.0]), ..ok.clone() },
        ];
        for b in bad {
            assert!(b.validate(&cfg).is_err());
        }
    }
}
