//! Shared fixtures for the integration tests: config loading, small random
//! instances and brute-force oracles.
#![allow(dead_code)]

use std::path::PathBuf;

use drvsl_core::formulation::InstanceData;
use drvsl_core::highway::{EdgeParams, HighwayConfig};
use drvsl_core::scenario::{Range, SampleSpec};
use drvsl_core::{dro, Config, SpeedSchedule};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

#[path = "../../../solver/tests/support/mod.rs"]
pub mod solver_oracle;

pub fn repo_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

pub fn load(name: &str) -> Config {
    Config::load(repo_path(&format!("configs/{name}"))).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn edge(id: usize, len: f64) -> EdgeParams<f64> {
    EdgeParams {
        id,
        len,
        lanes: 8,
        f_cap: 3.1e4,
        rho_jam: 1050.0,
        u_free: 140.0,
        has_onramp: true,
        has_offramp: true,
    }
}

pub fn highway(n: usize, horizon: usize, gamma: Vec<f64>) -> HighwayConfig<f64> {
    HighwayConfig {
        edges: (1..=n).map(|id| edge(id, 2.0)).collect(),
        delta: 1.0 / 120.0,
        horizon,
        gamma,
    }
}

pub fn spec(seed: u64) -> SampleSpec<f64> {
    SampleSpec {
        omega: Range::new(2.0e4, 2.4e4),
        rho0: Range::new(150.0, 260.0),
        r_in: Range::new(0.0, 0.05),
        r_out: Range::new(0.0, 0.03),
        seed,
    }
}

/// 1–2 edges, 2–3 slots, two menu speeds, 1–3 samples, ε ∈ [0, 2].
pub fn random_tiny(rng: &mut ChaCha8Rng) -> InstanceData<f64> {
    let menus = [[60.0, 80.0], [60.0, 120.0], [80.0, 100.0], [60.0, 100.0]];
    let cfg = highway(rng.gen_range(1..=2), rng.gen_range(2..=3), menus[rng.gen_range(0..menus.len())].to_vec());
    let samples = spec(0).draw_many(&cfg, rng.gen_range(1..=3), rng);
    let eps = rng.gen_range(0.0..2.0);
    InstanceData::new(cfg, samples, eps).expect("valid tiny instance")
}

/// One edge, two slots, 1–2 samples: small enough for P5 to close at fine level grids.
pub fn random_micro(rng: &mut ChaCha8Rng) -> InstanceData<f64> {
    let cfg = highway(1, 2, vec![60.0, 120.0]);
    let samples = spec(0).draw_many(&cfg, rng.gen_range(1..=2), rng);
    let eps = rng.gen_range(0.0..2.0);
    InstanceData::new(cfg, samples, eps).expect("valid micro instance")
}

/// Every schedule in the menu space, hold 1.
pub fn all_schedules(cfg: &HighwayConfig<f64>) -> Vec<SpeedSchedule> {
    let (n, horizon, m) = (cfg.n(), cfg.horizon, cfg.m());
    let cells = n * horizon;
    let total = m.pow(cells as u32);
    (0..total)
        .map(|mut code| {
            let mut idx = vec![vec![0; horizon]; n];
            for c in 0..cells {
                idx[c / horizon][c % horizon] = code % m;
                code /= m;
            }
            SpeedSchedule { idx }
        })
        .collect()
}

pub fn random_schedule(cfg: &HighwayConfig<f64>, rng: &mut ChaCha8Rng) -> SpeedSchedule {
    SpeedSchedule {
        idx: (0..cfg.n()).map(|_| (0..cfg.horizon).map(|_| rng.gen_range(0..cfg.m())).collect()).collect(),
    }
}

/// Largest finite certificate over all schedules, with its schedule.
pub fn brute_force_best(inst: &InstanceData<f64>) -> Option<(SpeedSchedule, f64)> {
    all_schedules(&inst.cfg)
        .into_iter()
        .filter_map(|u| dro::certificate(inst, &u).value.map(|j| (u, j)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
