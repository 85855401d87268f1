//! Data-driven distributionally robust speed-limit control for highways.
//!
//! Densities follow a speed-dependent cell transmission model
//! ([`highway`], [`ctm`]). From N sampled realizations of inflows, ramp
//! fractions and initial densities ([`scenario`]) a mixed-binary program is
//! assembled ([`formulation`]) whose schedules carry a worst-case expected
//! flow over a Wasserstein ball ([`dro`]). [`issa`] searches schedules by
//! alternating an upper-bounding MILP with the certificate LP, [`mpc`] closes
//! the loop against a plant, [`validate`] checks the guarantee by Monte
//! Carlo, and [`misocp`] implements the level-discretized cone variant.
//!
//! Everything is generic over the scalar type; the aliases below fix `f64`.

pub mod config;
pub mod ctm;
pub mod dro;
pub mod formulation;
pub mod highway;
pub mod io;
pub mod issa;
pub mod misocp;
pub mod mpc;
mod real;
pub mod scenario;
pub mod validate;

pub use real::Real;

pub type Edge = highway::EdgeParams<f64>;
pub type Highway = highway::HighwayConfig<f64>;
pub type Event = highway::EdgeEvent<f64>;
pub type Sample = scenario::ScenarioSample<f64>;
pub type Spec = scenario::SampleSpec<f64>;
pub type Trajectory = ctm::DensityTrajectory<f64>;
pub type Instance = formulation::InstanceData<f64>;
pub type Cert = dro::Certificate<f64>;
pub type Report = issa::IssaReport<f64>;
pub type Trace = mpc::MpcTrace<f64>;
pub type Config = config::RunConfig<f64>;

pub use ctm::SpeedSchedule;
