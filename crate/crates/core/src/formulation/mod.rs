//! Optimization problems built from (cfg, samples, ε, η̄): the structural row
//! blocks of the mixed-binary reformulation, the upper-bounding MILP and the
//! fixed-schedule lower-bounding LP in primal and dual form.

mod lbp;
mod rows;
mod ubp;

pub use lbp::{build_lbp, build_lbp_dual, solve_lbp_dual, solve_lbp_primal, LbpIndex, LbpOutcome};
pub use rows::{budget_rows, dual_rows, glover_rows, mccormick_rows, speed_rows, trajectory_rows, NamedRow};
pub use ubp::{apply_bounds, build_ubp, cut_row, CutSet};
pub(crate) use ubp::build_core_for_p5;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ctm::SpeedSchedule;
use crate::highway::{HighwayConfig, HighwayError};
use crate::real::{lit, Real};
use crate::scenario::{SampleError, ScenarioSample};

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error(transparent)]
    Highway(#[from] HighwayError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error("need at least one sample")]
    NoSamples,
    #[error("epsilon must be finite and >= 0")]
    BadEpsilon,
    #[error("eta_bar must be finite and > 0")]
    BadEtaBar,
    #[error("hold must be in 1..=T")]
    BadHold,
}

/// How the products z = x∘η and y = x∘ρ are linearized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GloverMode {
    /// Upper rows z ≤ η̄x, y ≤ ρ̄x plus Σz = η, Σy = ρ. Given Σx = 1 these imply
    /// the lower Glover rows, so the feasible set is unchanged.
    #[default]
    Hull,
    /// Every Glover inequality plus the two regularization equalities.
    Full,
}

#[derive(Debug, Clone)]
pub struct InstanceData<T> {
    pub cfg: HighwayConfig<T>,
    pub samples: Vec<ScenarioSample<T>>,
    pub epsilon: T,
    pub eta_bar: T,
    /// Consecutive slots sharing one speed decision (T means constant per edge).
    pub hold: usize,
    pub glover: GloverMode,
    /// Add Σ_l dist₁(ρ̂, [0, ρᶜ(u)]) ≤ Nε as linear rows in the UBP.
    pub budget_rows: bool,
}

impl<T: Real> InstanceData<T> {
    pub fn new(cfg: HighwayConfig<T>, samples: Vec<ScenarioSample<T>>, epsilon: T) -> Result<Self, InstanceError> {
        let eta_bar = default_eta_bar(&cfg);
        let inst = InstanceData {
            cfg,
            samples,
            epsilon,
            eta_bar,
            hold: 1,
            glover: GloverMode::Hull,
            budget_rows: false,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        self.cfg.validate()?;
        if self.samples.is_empty() {
            return Err(InstanceError::NoSamples);
        }
        for (l, s) in self.samples.iter().enumerate() {
            s.validate(&self.cfg, l)?;
        }
        if !(self.epsilon >= T::zero() && self.epsilon.is_finite()) {
            return Err(InstanceError::BadEpsilon);
        }
        if !(self.eta_bar > T::zero() && self.eta_bar.is_finite()) {
            return Err(InstanceError::BadEtaBar);
        }
        if self.hold == 0 || self.hold > self.cfg.horizon {
            return Err(InstanceError::BadHold);
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    /// ν̄_e = ū_e (1/T + ρ̄_e η̄).
    pub fn nu_bar(&self, e: usize) -> T {
        let edge = &self.cfg.edges[e];
        edge.u_free * (T::one() / lit::<T>(self.cfg.horizon as f64) + edge.rho_jam * self.eta_bar)
    }

    pub fn with_epsilon(&self, epsilon: T) -> Self {
        InstanceData { epsilon, ..self.clone() }
    }

    /// Whether `u` is constant on every hold block, i.e. representable in the UBP.
    pub fn respects_hold(&self, u: &SpeedSchedule) -> bool {
        u.idx.iter().all(|row| {
            row.chunks(self.hold).all(|c| c.iter().all(|&i| i == c[0]))
        })
    }

    /// Number of admissible schedules in the UBP decision space.
    pub fn num_blocks(&self) -> usize {
        self.cfg.horizon.div_ceil(self.hold)
    }
}

/// Smallest η̄ that keeps the fixed-schedule LP exact: at an optimum
/// η ≤ λ / c(u) ≤ γ^(m) / (T f̄_e); a 1% margin is added.
pub fn eta_bar_floor<T: Real>(cfg: &HighwayConfig<T>) -> T {
    let top = cfg.top_speed();
    let tt = lit::<T>(cfg.horizon as f64);
    cfg.edges
        .iter()
        .map(|e| top / (tt * e.f_cap))
        .fold(T::zero(), |a, b| a.max(b))
        * lit(1.01)
}

/// Starting η̄ = 10 / (T min_e ρ̄_e), raised to [`eta_bar_floor`] if smaller.
pub fn default_eta_bar<T: Real>(cfg: &HighwayConfig<T>) -> T {
    let min_jam = cfg.edges.iter().map(|e| e.rho_jam).fold(T::infinity(), |a, b| a.min(b));
    let start = lit::<T>(10.0) / (lit::<T>(cfg.horizon as f64) * min_jam);
    start.max(eta_bar_floor(cfg))
}

/// Column layout of the UBP. Speed binaries come first ordered (block, edge,
/// menu index), then λ, then per (sample, slot, edge) the block
/// [ρ, μ, ν, η, s, y_1..y_m, z_1..z_m], then optional budget slacks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarIndex {
    pub n: usize,
    pub horizon: usize,
    pub m: usize,
    pub n_samples: usize,
    pub hold: usize,
    pub blocks: usize,
    pub budget: bool,
}

impl VarIndex {
    pub fn new<T: Real>(inst: &InstanceData<T>) -> Self {
        VarIndex {
            n: inst.cfg.n(),
            horizon: inst.cfg.horizon,
            m: inst.cfg.m(),
            n_samples: inst.n_samples(),
            hold: inst.hold,
            blocks: inst.num_blocks(),
            budget: inst.budget_rows,
        }
    }

    fn width(&self) -> usize {
        5 + 2 * self.m
    }

    pub fn block(&self, t: usize) -> usize {
        t / self.hold
    }

    pub fn num_x(&self) -> usize {
        self.blocks * self.n * self.m
    }

    pub fn x(&self, e: usize, i: usize, t: usize) -> usize {
        self.x_block(e, i, self.block(t))
    }

    pub fn x_block(&self, e: usize, i: usize, b: usize) -> usize {
        (b * self.n + e) * self.m + i
    }

    pub fn lambda(&self) -> usize {
        self.num_x()
    }

    fn base(&self, l: usize, e: usize, t: usize) -> usize {
        self.lambda() + 1 + ((l * self.horizon + t) * self.n + e) * self.width()
    }

    pub fn rho(&self, l: usize, e: usize, t: usize) -> usize {
        self.base(l, e, t)
    }

    pub fn mu(&self, l: usize, e: usize, t: usize) -> usize {
        self.base(l, e, t) + 1
    }

    pub fn nu(&self, l: usize, e: usize, t: usize) -> usize {
        self.base(l, e, t) + 2
    }

    pub fn eta(&self, l: usize, e: usize, t: usize) -> usize {
        self.base(l, e, t) + 3
    }

    pub fn s(&self, l: usize, e: usize, t: usize) -> usize {
        self.base(l, e, t) + 4
    }

    pub fn y(&self, l: usize, e: usize, i: usize, t: usize) -> usize {
        self.base(l, e, t) + 5 + i
    }

    pub fn z(&self, l: usize, e: usize, i: usize, t: usize) -> usize {
        self.base(l, e, t) + 5 + self.m + i
    }

    fn sample_end(&self) -> usize {
        self.lambda() + 1 + self.n_samples * self.horizon * self.n * self.width()
    }

    /// Budget slack v^(l)_e(t) ≥ (ρ − ρᶜ(u))⁺.
    pub fn excess(&self, l: usize, e: usize, t: usize) -> usize {
        debug_assert!(self.budget);
        self.sample_end() + (l * self.horizon + t) * self.n + e
    }

    pub fn num_vars(&self) -> usize {
        self.sample_end() + if self.budget { self.n_samples * self.horizon * self.n } else { 0 }
    }

    /// Human-readable name of column `j`.
    pub fn name(&self, j: usize) -> String {
        if j < self.num_x() {
            let (b, rest) = (j / (self.n * self.m), j % (self.n * self.m));
            return format!("x_{}_{}_{}", rest / self.m + 1, rest % self.m + 1, b);
        }
        if j == self.lambda() {
            return "lambda".into();
        }
        if j >= self.sample_end() {
            let k = j - self.sample_end();
            let (lt, e) = (k / self.n, k % self.n);
            return format!("v_{}_{}_{}", lt / self.horizon, e + 1, lt % self.horizon);
        }
        let k = j - self.lambda() - 1;
        let (cell, off) = (k / self.width(), k % self.width());
        let (lt, e) = (cell / self.n, cell % self.n);
        let (l, t) = (lt / self.horizon, lt % self.horizon);
        let tag = match off {
            0 => "rho".to_string(),
            1 => "mu".to_string(),
            2 => "nu".to_string(),
            3 => "eta".to_string(),
            4 => "s".to_string(),
            o if o < 5 + self.m => format!("y{}", o - 4),
            o => format!("z{}", o - 4 - self.m),
        };
        format!("{tag}_{l}_{}_{t}", e + 1)
    }

    /// Reads the schedule encoded by the x-block of a solution vector.
    pub fn schedule<T: Real>(&self, x: &[T]) -> SpeedSchedule {
        let idx = (0..self.n)
            .map(|e| {
                (0..self.horizon)
                    .map(|t| {
                        (0..self.m)
                            .max_by(|&a, &b| {
                                x[self.x(e, a, t)]
                                    .partial_cmp(&x[self.x(e, b, t)])
                                    .unwrap_or(std::cmp::Ordering::Equal)
                            })
                            .unwrap_or(0)
                    })
                    .collect()
            })
            .collect();
        SpeedSchedule { idx }
    }
}
