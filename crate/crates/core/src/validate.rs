//! Monte Carlo checks of the out-of-sample guarantee and the comparison with
//! the sample-average (ε = 0) controller.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::ctm::{average_flow, plant_rollout, SpeedSchedule};
use crate::formulation::InstanceData;
use crate::highway::HighwayConfig;
use crate::issa::{self, IssaOptions, IssaReport, Pool};
use crate::real::{lit, to_f64, Real};
use crate::scenario::{rng_for, stream, SampleSpec, ScenarioSample};

/// Whether a plant trajectory has ρ_e(t) > ρᶜ_e(u_e(t)) for some t < T.
pub fn plant_congested<T: Real>(cfg: &HighwayConfig<T>, u: &SpeedSchedule, rho: &[Vec<T>]) -> bool {
    rho.iter().enumerate().any(|(e, row)| {
        (0..u.horizon()).any(|t| row[t] > cfg.edges[e].critical_density(u.speed(cfg, e, t)))
    })
}

/// Mean plant H(u; ρ) over `val` and the fraction of congested rollouts.
pub fn validation_mean<T: Real>(cfg: &HighwayConfig<T>, u: &SpeedSchedule, val: &[ScenarioSample<T>]) -> (T, f64) {
    let per: Vec<(T, bool)> = val
        .par_iter()
        .map(|s| {
            let rho = plant_rollout(cfg, u, s);
            (average_flow(cfg, u, &rho), plant_congested(cfg, u, &rho))
        })
        .collect();
    if per.is_empty() {
        return (T::zero(), 0.0);
    }
    let sum = per.iter().fold(T::zero(), |a, (h, _)| a + *h);
    let congested = per.iter().filter(|(_, c)| *c).count();
    (sum / T::of(per.len() as f64), congested as f64 / per.len() as f64)
}

/// The same pipeline as the robust controller with ε forced to 0.
pub fn sample_average_control<T: Real>(inst: &InstanceData<T>, opts: &IssaOptions) -> IssaReport<T> {
    issa::run(&inst.with_epsilon(T::zero()), opts, &Pool::new(0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub index: usize,
    pub schedule: Option<SpeedSchedule>,
    pub certificate: Option<f64>,
    pub validation_mean: Option<f64>,
    pub congestion_fraction: Option<f64>,
    /// validation mean ≥ certificate.
    pub hit: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuaranteeReport {
    pub replications: usize,
    pub beta: f64,
    pub epsilon: f64,
    pub n: usize,
    pub n_val: usize,
    /// Replications in which some schedule had a finite certificate.
    pub with_schedule: usize,
    pub without_schedule: usize,
    pub hits: usize,
    /// hits / with_schedule.
    pub rate: f64,
    /// P(Binomial(with_schedule, 1 − β) ≤ hits).
    pub p_value: f64,
    /// The one-sided test at 5% does not reject rate ≥ 1 − β.
    pub passed: bool,
    pub mean_congestion_fraction: f64,
    pub runs: Vec<Replication>,
}

/// One-sided binomial test of `rate ≥ target` at 5% significance.
pub fn binomial_test(hits: usize, total: usize, target: f64) -> (f64, bool) {
    if total == 0 {
        return (0.0, false);
    }
    let dist = Binomial::new(target.clamp(0.0, 1.0), total as u64).expect("valid binomial");
    let p = dist.cdf(hits as u64);
    (p, p >= 0.05)
}

#[derive(Debug, Clone)]
pub struct GuaranteeSetup<'a, T> {
    pub cfg: &'a HighwayConfig<T>,
    pub spec: &'a SampleSpec<T>,
    /// Carries ε, η̄, hold and formulation flags; its samples are replaced.
    pub template: &'a InstanceData<T>,
    pub issa: &'a IssaOptions,
    pub beta: f64,
    pub replications: usize,
    pub n: usize,
    pub n_val: usize,
    pub seed: u64,
}

/// Relative slack in `mean ≥ J`: plant and planner round differently on
/// identical uncongested trajectories.
pub const HIT_RTOL: f64 = 1e-9;

pub fn validate_guarantee<T: Real>(s: &GuaranteeSetup<'_, T>) -> GuaranteeReport {
    let runs: Vec<Replication> = (0..s.replications)
        .into_par_iter()
        .map(|r| {
            let mut train = rng_for(s.seed, stream::TRAINING + r as u64);
            let mut valr = rng_for(s.seed, stream::VALIDATION + r as u64);
            let mut inst = s.template.clone();
            inst.samples = s.spec.draw_many(s.cfg, s.n, &mut train);
            let rep = issa::run(&inst, s.issa, &Pool::new(0));
            let (Some(u), Some(j)) = (rep.u_best, rep.certificate) else {
                return Replication {
                    index: r,
                    schedule: None,
                    certificate: None,
                    validation_mean: None,
                    congestion_fraction: None,
                    hit: None,
                };
            };
            let val = s.spec.draw_many(s.cfg, s.n_val, &mut valr);
            let (mean, cong) = validation_mean(s.cfg, &u, &val);
            Replication {
                index: r,
                schedule: Some(u),
                certificate: Some(to_f64(j)),
                validation_mean: Some(to_f64(mean)),
                congestion_fraction: Some(cong),
                hit: Some(mean >= j - lit::<T>(HIT_RTOL) * j.abs()),
            }
        })
        .collect();
    let with_schedule = runs.iter().filter(|r| r.hit.is_some()).count();
    let hits = runs.iter().filter(|r| r.hit == Some(true)).count();
    let (p_value, passed) = binomial_test(hits, with_schedule, 1.0 - s.beta);
    let cong: Vec<f64> = runs.iter().filter_map(|r| r.congestion_fraction).collect();
    GuaranteeReport {
        replications: s.replications,
        beta: s.beta,
        epsilon: to_f64(s.template.epsilon),
        n: s.n,
        n_val: s.n_val,
        with_schedule,
        without_schedule: s.replications - with_schedule,
        hits,
        rate: if with_schedule == 0 { 0.0 } else { hits as f64 / with_schedule as f64 },
        p_value,
        passed,
        mean_congestion_fraction: if cong.is_empty() { 0.0 } else { cong.iter().sum::<f64>() / cong.len() as f64 },
        runs,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub dro_schedule: Option<SpeedSchedule>,
    pub dro_certificate: Option<f64>,
    pub dro_congestion: Option<f64>,
    pub dro_mean: Option<f64>,
    pub sa_schedule: Option<SpeedSchedule>,
    pub sa_certificate: Option<f64>,
    pub sa_congestion: Option<f64>,
    pub sa_mean: Option<f64>,
    pub n_val: usize,
}

/// Robust and sample-average schedules on the same training data, validated
/// on shared draws.
pub fn compare_with_sample_average<T: Real>(
    inst: &InstanceData<T>,
    opts: &IssaOptions,
    spec: &SampleSpec<T>,
    n_val: usize,
    seed: u64,
) -> Comparison {
    let dro = issa::run(inst, opts, &Pool::new(0));
    let sa = sample_average_control(inst, opts);
    let mut rng = rng_for(seed, stream::VALIDATION);
    let val = spec.draw_many(&inst.cfg, n_val, &mut rng);
    let score = |u: &Option<SpeedSchedule>| {
        u.as_ref().map(|u| validation_mean(&inst.cfg, u, &val)).map(|(m, c)| (to_f64(m), c))
    };
    let d = score(&dro.u_best);
    let s = score(&sa.u_best);
    Comparison {
        dro_certificate: dro.certificate.map(to_f64),
        dro_congestion: d.map(|x| x.1),
        dro_mean: d.map(|x| x.0),
        dro_schedule: dro.u_best,
        sa_certificate: sa.certificate.map(to_f64),
        sa_congestion: s.map(|x| x.1),
        sa_mean: s.map(|x| x.0),
        sa_schedule: sa.u_best,
        n_val,
    }
}
