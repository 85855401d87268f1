//! The run configuration: one JSON document bundling every module's inputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dro::{RadiusMode, RadiusParams};
use crate::formulation::{default_eta_bar, GloverMode, InstanceData};
use crate::highway::{EdgeEvent, HighwayConfig};
use crate::issa::IssaOptions;
use crate::mpc::MpcConfig;
use crate::real::{lit, Real};
use crate::scenario::{generate_samples, load_samples, SampleSpec, ScenarioSample};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: line {line}, column {column}: {msg}")]
    Schema { path: String, line: usize, column: usize, msg: String },
    #[error("{path}: {field}: {msg}")]
    Invalid { path: String, field: String, msg: String },
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// ISSA wall-clock budget, seconds.
    #[serde(default = "default_budget")]
    pub budget_s: f64,
    #[serde(default)]
    pub gap_tol: f64,
    #[serde(default)]
    pub max_iterations: Option<usize>,
    #[serde(default = "default_milp_gap")]
    pub milp_gap: f64,
    /// Fixed η̄; the default policy is used when absent.
    #[serde(default)]
    pub eta_bar: Option<f64>,
    #[serde(default = "default_pool_cap")]
    pub pool_cap: usize,
    /// Slots per speed decision; T gives one speed per edge.
    #[serde(default)]
    pub hold: Option<usize>,
    #[serde(default)]
    pub glover: GloverMode,
    #[serde(default)]
    pub budget_rows: bool,
    /// Certify the uniform schedules before the first UBP.
    #[serde(default = "yes")]
    pub seed_uniform: bool,
    #[serde(default)]
    pub ubp_node_limit: Option<usize>,
}

fn yes() -> bool {
    true
}

fn default_budget() -> f64 {
    60.0
}
fn default_milp_gap() -> f64 {
    1e-9
}
fn default_pool_cap() -> usize {
    20
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            budget_s: default_budget(),
            gap_tol: 0.0,
            max_iterations: None,
            milp_gap: default_milp_gap(),
            eta_bar: None,
            pool_cap: default_pool_cap(),
            hold: None,
            glover: GloverMode::Hull,
            budget_rows: false,
            seed_uniform: true,
            ubp_node_limit: None,
        }
    }
}

impl SolverConfig {
    pub fn issa(&self) -> IssaOptions {
        IssaOptions {
            budget_s: self.budget_s,
            gap_tol: self.gap_tol,
            max_iterations: self.max_iterations,
            milp_gap: self.milp_gap,
            seed_uniform: self.seed_uniform,
            ubp_node_limit: self.ubp_node_limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationConfig {
    #[serde(default = "default_n_val")]
    pub n_val: usize,
    #[serde(default = "default_reps")]
    pub replications: usize,
}

fn default_n_val() -> usize {
    1000
}
fn default_reps() -> usize {
    200
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig { n_val: default_n_val(), replications: default_reps() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MisocpConfig {
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_budget")]
    pub budget_s: f64,
}

fn default_levels() -> usize {
    5
}

impl Default for MisocpConfig {
    fn default() -> Self {
        MisocpConfig { levels: default_levels(), budget_s: default_budget() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: serde::de::DeserializeOwned"))]
pub struct RunConfig<T> {
    pub highway: HighwayConfig<T>,
    #[serde(default = "Vec::new")]
    pub events: Vec<EdgeEvent<T>>,
    /// Uniform generator; its seed is overwritten by `seed`.
    #[serde(default = "Option::default")]
    pub samples: Option<SampleSpec<T>>,
    /// Sample file, relative to the config file; takes precedence for training data.
    #[serde(default)]
    pub sample_file: Option<PathBuf>,
    pub n_samples: usize,
    pub beta: f64,
    pub radius: RadiusMode,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub validation: ValidationConfig,
    #[serde(default = "Option::default")]
    pub mpc: Option<MpcConfig<T>>,
    #[serde(default)]
    pub misocp: MisocpConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl<T: Real> RunConfig<T> {
    pub fn parse(text: &str, path: &str) -> Result<Self, ConfigError> {
        let mut cfg: RunConfig<T> = serde_json::from_str(text).map_err(|e| ConfigError::Schema {
            path: path.to_string(),
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })?;
        if let Some(dir) = Path::new(path).parent() {
            if let Some(f) = &cfg.sample_file {
                if f.is_relative() {
                    cfg.sample_file = Some(dir.join(f));
                }
            }
        }
        cfg.validate(path)?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let p = path.as_ref();
        let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io { path: p.display().to_string(), source })?;
        Self::parse(&text, &p.display().to_string())
    }

    pub fn validate(&self, path: &str) -> Result<(), ConfigError> {
        let bad = |field: &str, msg: String| ConfigError::Invalid { path: path.to_string(), field: field.to_string(), msg };
        self.highway.validate().map_err(|e| bad("highway", e.to_string()))?;
        for (i, ev) in self.events.iter().enumerate() {
            ev.validate(&self.highway).map_err(|e| bad(&format!("events[{i}]"), e.to_string()))?;
        }
        match (&self.samples, &self.sample_file) {
            (None, None) => return Err(bad("samples", "need a sample spec or a sample_file".into())),
            (Some(spec), _) => spec.validate(&self.highway).map_err(|e| bad("samples", e.to_string()))?,
            _ => {}
        }
        if let Some(f) = &self.sample_file {
            if !f.exists() {
                return Err(bad("sample_file", format!("{} does not exist", f.display())));
            }
            let s = load_samples(f, &self.planning_highway()).map_err(|e| bad("sample_file", e.to_string()))?;
            if s.len() < self.n_samples {
                return Err(bad("sample_file", format!("holds {} samples, n_samples is {}", s.len(), self.n_samples)));
            }
        }
        if self.n_samples == 0 {
            return Err(bad("n_samples", "must be at least 1".into()));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(bad("beta", "must lie in (0, 1)".into()));
        }
        match &self.radius {
            RadiusMode::Given { epsilon } if !(*epsilon >= 0.0 && epsilon.is_finite()) => {
                return Err(bad("radius.epsilon", "must be finite and >= 0".into()));
            }
            RadiusMode::Formula { c1, c2, a } => RadiusParams {
                beta: self.beta,
                n: self.n_samples,
                ell: self.highway.n() * self.highway.horizon,
                a: *a,
                c1: *c1,
                c2: *c2,
            }
            .validate()
            .map_err(|e| bad("radius", e.to_string()))?,
            RadiusMode::Tuned(t) => {
                t.grid().map_err(|e| bad("radius", e.to_string()))?;
                if self.samples.is_none() {
                    return Err(bad("radius", "tuning needs a sample spec".into()));
                }
            }
            _ => {}
        }
        let s = &self.solver;
        if !(s.budget_s >= 0.0) || !(s.gap_tol >= 0.0) || !(s.milp_gap >= 0.0) {
            return Err(bad("solver", "budget_s, gap_tol and milp_gap must be >= 0".into()));
        }
        if let Some(eb) = s.eta_bar {
            if !(eb > 0.0 && eb.is_finite()) {
                return Err(bad("solver.eta_bar", "must be positive".into()));
            }
        }
        if let Some(h) = s.hold {
            if h == 0 || h > self.highway.horizon {
                return Err(bad("solver.hold", "must be in 1..=T".into()));
            }
        }
        if let Some(m) = &self.mpc {
            m.validate(&self.highway).map_err(|e| bad("mpc", e.to_string()))?;
            if let Some(ps) = &m.plant_spec {
                ps.validate(&self.highway).map_err(|e| bad("mpc.plant_spec", e.to_string()))?;
            }
        }
        if self.misocp.levels == 0 {
            return Err(bad("misocp.levels", "must be at least 1".into()));
        }
        Ok(())
    }

    /// Highway with the events active at slot 0 applied.
    pub fn planning_highway(&self) -> HighwayConfig<T> {
        self.highway.at_slot(&self.events, 0)
    }

    /// Sample spec carrying the run seed.
    pub fn spec(&self) -> Option<SampleSpec<T>> {
        self.samples.clone().map(|mut s| {
            s.seed = self.seed;
            s
        })
    }

    /// Training samples: the first `n_samples` of the sample file, or fresh draws.
    pub fn training_samples(&self) -> Result<Vec<ScenarioSample<T>>, ConfigError> {
        let cfg = self.planning_highway();
        let err = |e: crate::scenario::SampleError| ConfigError::Invalid {
            path: String::new(),
            field: "samples".into(),
            msg: e.to_string(),
        };
        match (&self.sample_file, self.spec()) {
            (Some(f), _) => Ok(load_samples(f, &cfg).map_err(err)?.into_iter().take(self.n_samples).collect()),
            (None, Some(spec)) => generate_samples(&cfg, &spec, self.n_samples).map_err(err),
            (None, None) => unreachable!("validated"),
        }
    }

    /// Instance with the given samples and radius and the configured solver knobs.
    pub fn instance(&self, samples: Vec<ScenarioSample<T>>, epsilon: f64) -> InstanceData<T> {
        let cfg = self.planning_highway();
        let eta_bar = self.solver.eta_bar.map(lit).unwrap_or_else(|| default_eta_bar(&cfg));
        InstanceData {
            hold: self.solver.hold.unwrap_or(1),
            glover: self.solver.glover,
            budget_rows: self.solver.budget_rows,
            eta_bar,
            epsilon: lit(epsilon),
            samples,
            cfg,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = include_str!("../../../configs/tiny.json");

    #[test]
    fn unknown_field_reports_its_line() {
        let text = TINY.replacen("\"n_samples\"", "\"n_sample\"", 1);
        let line = text.lines().position(|l| l.contains("n_sample")).unwrap() + 1;
        match RunConfig::<f64>::parse(&text, "tiny.json") {
            Err(ConfigError::Schema { line: got, msg, .. }) => {
                assert_eq!(got, line);
                assert!(msg.contains("n_sample"));
            }
            other => panic!("expected a schema error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_values_name_the_field() {
        let text = TINY.replace("\"epsilon\": 0.5", "\"epsilon\": -1.0");
        let err = RunConfig::<f64>::parse(&text, "tiny.json").unwrap_err();
        assert!(matches!(&err, ConfigError::Invalid { field, .. } if field == "radius.epsilon"), "{err}");
    }

    #[test]
    fn instance_carries_solver_knobs() {
        let cfg = RunConfig::<f64>::parse(TINY, "tiny.json").unwrap();
        let inst = cfg.instance(cfg.training_samples().unwrap(), 0.25);
        assert_eq!(inst.n_samples(), 2);
        assert_eq!(inst.epsilon, 0.25);
        assert_eq!(inst.hold, 1);
        assert_eq!(inst.eta_bar, default_eta_bar(&cfg.planning_highway()));
    }
}
