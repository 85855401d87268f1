//! Wasserstein radius selection and tuning, and certificate evaluation J(u).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ctm::{propagate, DensityTrajectory, SpeedSchedule};
use crate::formulation::{solve_lbp_dual, InstanceData, LbpOutcome};
use crate::highway::HighwayConfig;
use crate::issa::{self, IssaOptions, Pool};
use crate::real::{lit, to_f64, Real};
use crate::scenario::{rng_for, stream, SampleSpec};
use crate::validate::validation_mean;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiusParams {
    pub beta: f64,
    pub n: usize,
    /// Dimension ℓ of the uncertain trajectory (n·T).
    pub ell: usize,
    #[serde(default = "default_a")]
    pub a: f64,
    #[serde(default = "one")]
    pub c1: f64,
    #[serde(default = "one")]
    pub c2: f64,
}

fn default_a() -> f64 {
    2.0
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RadiusError {
    #[error("beta must lie in (0, 1)")]
    Beta,
    #[error("a must exceed 1")]
    Exponent,
    #[error("c1, c2 must be positive and N, ell at least 1")]
    Constants,
    #[error("radius grid exhausted: best rate {best_rate:.3} at epsilon {epsilon}")]
    GridExhausted { best_rate: f64, epsilon: f64 },
    #[error("radius grid must be nonempty, positive and increasing")]
    BadGrid,
    #[error("no tuning trial produced a schedule")]
    NoCandidates,
}

impl RadiusParams {
    pub fn validate(&self) -> Result<(), RadiusError> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(RadiusError::Beta);
        }
        if !(self.a > 1.0) {
            return Err(RadiusError::Exponent);
        }
        if !(self.c1 > 0.0 && self.c2 > 0.0) || self.n == 0 || self.ell == 0 {
            return Err(RadiusError::Constants);
        }
        Ok(())
    }
}

/// ε(β) = (log(c1/β)/(c2 N))^{1/max(2,ℓ)} when N ≥ log(c1/β)/c2, else with exponent 1/a.
pub fn wasserstein_radius(p: &RadiusParams) -> Result<f64, RadiusError> {
    p.validate()?;
    let lg = (p.c1 / p.beta).ln();
    let ratio = lg / (p.c2 * p.n as f64);
    let exponent = if p.n as f64 >= lg / p.c2 {
        1.0 / (p.ell.max(2) as f64)
    } else {
        1.0 / p.a
    };
    Ok(ratio.max(0.0).powf(exponent))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum CertStatus {
    Finite,
    /// Some sample trajectory violates a demand row.
    Inadmissible { sample: usize },
    /// The sample trajectories are farther than Nε from the no-congestion box.
    OverBudget { excess: f64 },
    /// The LP solver failed; never reported as a finite value.
    SolverFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate<T> {
    pub value: Option<T>,
    pub epsilon: T,
    pub status: CertStatus,
}

impl<T: Real> Certificate<T> {
    pub fn is_finite(&self) -> bool {
        self.status == CertStatus::Finite
    }
}

/// Sample trajectories under `u` plus the certificate they yield.
#[derive(Debug, Clone)]
pub struct Evaluation<T> {
    pub trajs: Vec<DensityTrajectory<T>>,
    pub certificate: Certificate<T>,
}

pub fn propagate_all<T: Real>(inst: &InstanceData<T>, u: &SpeedSchedule) -> Vec<DensityTrajectory<T>> {
    inst.samples
        .iter()
        .map(|s| propagate(&inst.cfg, u, s).expect("schedule and samples validated against cfg"))
        .collect()
}

/// Certificate from already propagated trajectories.
pub fn certificate_from<T: Real>(inst: &InstanceData<T>, u: &SpeedSchedule, trajs: &[DensityTrajectory<T>]) -> Certificate<T> {
    let (value, status) = match solve_lbp_dual(inst, u, trajs) {
        LbpOutcome::Value(v) => (Some(v.max(T::zero())), CertStatus::Finite),
        LbpOutcome::Inadmissible { sample } => (None, CertStatus::Inadmissible { sample }),
        LbpOutcome::OverBudget { excess } => (None, CertStatus::OverBudget { excess: to_f64(excess) }),
        LbpOutcome::Failed(_) => (None, CertStatus::SolverFailure),
    };
    Certificate { value, epsilon: inst.epsilon, status }
}

pub fn evaluate<T: Real>(inst: &InstanceData<T>, u: &SpeedSchedule) -> Evaluation<T> {
    let trajs = propagate_all(inst, u);
    let certificate = certificate_from(inst, u, &trajs);
    Evaluation { trajs, certificate }
}

/// J(u): the worst expected average flow over the Wasserstein ball.
pub fn certificate<T: Real>(inst: &InstanceData<T>, u: &SpeedSchedule) -> Certificate<T> {
    evaluate(inst, u).certificate
}

/// How to search the radius grid during tuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuneMode {
    /// Schedules are computed once per trial at a pilot radius and then
    /// certified at every grid radius; repeated once with the selected radius
    /// as the new pilot.
    #[default]
    Pilot,
    /// A fresh schedule per trial and per grid radius.
    PerRadius,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneOptions {
    pub trials: usize,
    /// Validation samples per trial for the ground-truth mean.
    pub n_val: usize,
    /// Geometric grid: `min * ratio^k` for k = 0.. while ≤ max.
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_ratio: f64,
    #[serde(default)]
    pub mode: TuneMode,
    /// Radius used for the first pilot pass.
    pub pilot: f64,
}

impl TuneOptions {
    pub fn grid(&self) -> Result<Vec<f64>, RadiusError> {
        if !(self.grid_min > 0.0 && self.grid_max >= self.grid_min && self.grid_ratio > 1.0) {
            return Err(RadiusError::BadGrid);
        }
        let mut g = vec![0.0];
        let mut v = self.grid_min;
        while v <= self.grid_max * (1.0 + 1e-12) {
            g.push(v);
            v *= self.grid_ratio;
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub epsilon: f64,
    pub grid: Vec<f64>,
    /// Fraction of trials with truth ≥ J at each grid radius (last pass).
    pub rates: Vec<f64>,
    pub trials_with_schedule: usize,
}

struct Trial<T> {
    inst: InstanceData<T>,
    val: Vec<crate::scenario::ScenarioSample<T>>,
}

fn trials<T: Real>(cfg: &HighwayConfig<T>, spec: &SampleSpec<T>, template: &InstanceData<T>, opts: &TuneOptions) -> Vec<Trial<T>> {
    (0..opts.trials)
        .map(|r| {
            let mut train = rng_for(spec.seed, stream::TUNING + 2 * r as u64);
            let mut val = rng_for(spec.seed, stream::TUNING + 2 * r as u64 + 1);
            let mut inst = template.clone();
            inst.samples = spec.draw_many(cfg, template.n_samples(), &mut train);
            Trial { inst, val: spec.draw_many(cfg, opts.n_val, &mut val) }
        })
        .collect()
}

fn select(grid: &[f64], hits: &[usize], total: usize, beta: f64) -> Result<(usize, Vec<f64>), RadiusError> {
    let rates: Vec<f64> = hits.iter().map(|&h| h as f64 / total as f64).collect();
    match rates.iter().position(|&r| r >= 1.0 - beta) {
        Some(k) => Ok((k, rates)),
        None => {
            let (k, best) = rates
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (k, &r)| if r > acc.1 { (k, r) } else { acc });
            Err(RadiusError::GridExhausted { best_rate: best, epsilon: grid[k] })
        }
    }
}

/// Smallest grid radius whose empirical guarantee rate over `trials` fresh
/// training sets (each of `template.n_samples()` draws) reaches 1 − β. A
/// certificate that cannot be issued at some radius counts as a miss there.
pub fn tune_radius<T: Real>(
    cfg: &HighwayConfig<T>,
    spec: &SampleSpec<T>,
    template: &InstanceData<T>,
    issa_opts: &IssaOptions,
    beta: f64,
    opts: &TuneOptions,
) -> Result<TuneReport, RadiusError> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(RadiusError::Beta);
    }
    let grid = opts.grid()?;
    let ts = trials(cfg, spec, template, opts);
    let solve = |t: &Trial<T>, eps: f64| -> Option<(SpeedSchedule, T)> {
        let inst = t.inst.with_epsilon(lit(eps));
        let rep = issa::run(&inst, issa_opts, &Pool::new(0));
        let u = rep.u_best?;
        let truth = validation_mean(cfg, &u, &t.val).0;
        Some((u, truth))
    };
    let certify = |t: &Trial<T>, u: &SpeedSchedule, truth: T, eps: f64| -> bool {
        let c = certificate(&t.inst.with_epsilon(lit(eps)), u);
        c.value.is_some_and(|j| truth >= j - lit::<T>(crate::validate::HIT_RTOL) * j.abs())
    };
    match opts.mode {
        TuneMode::Pilot => {
            let mut pilot = opts.pilot;
            let mut last = None;
            for _pass in 0..2 {
                let sols: Vec<Option<(SpeedSchedule, T)>> = ts.par_iter().map(|t| solve(t, pilot)).collect();
                let with: Vec<(&Trial<T>, &(SpeedSchedule, T))> =
                    ts.iter().zip(&sols).filter_map(|(t, s)| s.as_ref().map(|s| (t, s))).collect();
                if with.is_empty() {
                    return Err(RadiusError::NoCandidates);
                }
                let hits: Vec<usize> = grid
                    .par_iter()
                    .map(|&eps| with.iter().filter(|(t, (u, truth))| certify(t, u, *truth, eps)).count())
                    .collect();
                let (k, rates) = select(&grid, &hits, with.len(), beta)?;
                last = Some(TuneReport { epsilon: grid[k], grid: grid.clone(), rates, trials_with_schedule: with.len() });
                if grid[k] == pilot {
                    break;
                }
                pilot = grid[k];
            }
            Ok(last.expect("at least one pass"))
        }
        TuneMode::PerRadius => {
            let mut rates = Vec::new();
            for (k, &eps) in grid.iter().enumerate() {
                let outcomes: Vec<Option<bool>> = ts
                    .par_iter()
                    .map(|t| solve(t, eps).map(|(u, truth)| certify(t, &u, truth, eps)))
                    .collect();
                let with = outcomes.iter().flatten().count();
                let hits = outcomes.iter().flatten().filter(|&&b| b).count();
                let rate = if with == 0 { 0.0 } else { hits as f64 / with as f64 };
                rates.push(rate);
                if rate >= 1.0 - beta {
                    return Ok(TuneReport { epsilon: grid[k], grid: grid.clone(), rates, trials_with_schedule: with });
                }
            }
            let best = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            Err(RadiusError::GridExhausted { best_rate: best, epsilon: *grid.last().unwrap() })
        }
    }
}

/// How the Wasserstein radius is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadiusMode {
    Given {
        epsilon: f64,
    },
    Formula {
        #[serde(default = "one")]
        c1: f64,
        #[serde(default = "one")]
        c2: f64,
        #[serde(default = "default_a")]
        a: f64,
    },
    Tuned(TuneOptions),
}

/// Resolves a radius mode to a number for an instance shaped like `template`.
pub fn resolve_radius<T: Real>(
    mode: &RadiusMode,
    cfg: &HighwayConfig<T>,
    spec: &SampleSpec<T>,
    template: &InstanceData<T>,
    issa_opts: &IssaOptions,
    beta: f64,
) -> Result<f64, RadiusError> {
    match mode {
        RadiusMode::Given { epsilon } => Ok(*epsilon),
        RadiusMode::Formula { c1, c2, a } => wasserstein_radius(&RadiusParams {
            beta,
            n: template.n_samples(),
            ell: cfg.n() * cfg.horizon,
            a: *a,
            c1: *c1,
            c2: *c2,
        }),
        RadiusMode::Tuned(opts) => tune_radius(cfg, spec, template, issa_opts, beta, opts).map(|r| r.epsilon),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_example() {
        let p = RadiusParams { beta: 0.05, n: 100, ell: 3, a: 2.0, c1: 2.0, c2: 1.0 };
        let e = wasserstein_radius(&p).unwrap();
        assert!((e - (40f64.ln() / 100.0).powf(1.0 / 3.0)).abs() < 1e-15);
        // cube root of 0.0368888 is 0.332888; the commonly quoted 0.3327 is a rounding slip
        assert!((e - 0.332888).abs() < 1e-6);
        assert!((e - 0.3327).abs() < 5e-4);
    }

    #[test]
    fn branch_boundary_gives_one() {
        let n = 7;
        let beta = (-(n as f64)).exp();
        for ell in [1, 2, 5] {
            let p = RadiusParams { beta, n, ell, a: 3.0, c1: 1.0, c2: 1.0 };
            assert!((wasserstein_radius(&p).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn radius_decreases_in_n() {
        let mut prev = f64::INFINITY;
        for n in [1, 2, 3, 5, 10, 100, 1000, 100000] {
            let e = wasserstein_radius(&RadiusParams { beta: 0.05, n, ell: 10, a: 2.0, c1: 1.0, c2: 1.0 }).unwrap();
            assert!(e < prev);
            prev = e;
        }
    }

    #[test]
    fn grid_is_geometric() {
        let o = TuneOptions {
            trials: 1,
            n_val: 1,
            grid_min: 0.1,
            grid_max: 1.0,
            grid_ratio: 2.0,
            mode: TuneMode::Pilot,
            pilot: 0.1,
        };
        assert_eq!(o.grid().unwrap(), vec![0.0, 0.1, 0.2, 0.4, 0.8]);
    }
}
