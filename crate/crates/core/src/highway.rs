//! Static highway description and the speed-dependent fundamental diagram.
//!
//! Units: km, h, vehicles. Densities are per-edge aggregates (veh/km), flows
//! veh/h, speeds km/h and the slot length `delta` is in hours.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::real::{lit, to_f64, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HighwayError {
    #[error("edge {edge}: {field} must be positive (got {value})")]
    NonPositive { edge: usize, field: &'static str, value: f64 },
    #[error("edge {edge}: u_free * rho_jam = {product} must exceed f_cap = {f_cap}")]
    NoBackwardWave { edge: usize, product: f64, f_cap: f64 },
    #[error("edge ids must be 1..=n in order; position {pos} has id {id}")]
    BadEdgeId { pos: usize, id: usize },
    #[error("highway has no edges")]
    NoEdges,
    #[error("horizon must be at least 1")]
    EmptyHorizon,
    #[error("delta must be positive (got {0})")]
    BadDelta(f64),
    #[error("speed menu must be nonempty, positive and strictly increasing")]
    BadMenu,
    #[error("top speed {top} exceeds the free-flow speed {u_free} of edge {edge}")]
    MenuAboveFreeFlow { edge: usize, top: f64, u_free: f64 },
    #[error("density {rho} outside [0, {rho_jam}] on edge {edge}")]
    DensityOutOfRange { edge: usize, rho: f64, rho_jam: f64 },
    #[error("speed {u} outside (0, {u_free}] on edge {edge}")]
    SpeedOutOfRange { edge: usize, u: f64, u_free: f64 },
    #[error("unstable discretization: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Unstable(Vec<StabilityViolation>),
    #[error("event on edge {edge}: {reason}")]
    BadEvent { edge: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeParams<T> {
    /// 1-based position along the highway.
    pub id: usize,
    /// Segment length, km.
    pub len: T,
    #[serde(default)]
    pub lanes: u32,
    /// Capacity f̄, veh/h.
    pub f_cap: T,
    /// Jam density ρ̄, veh/km.
    pub rho_jam: T,
    /// Free-flow speed ū, km/h.
    pub u_free: T,
    #[serde(default)]
    pub has_onramp: bool,
    #[serde(default)]
    pub has_offramp: bool,
}

impl<T: Real> EdgeParams<T> {
    pub fn validate(&self) -> Result<(), HighwayError> {
        for (field, v) in [
            ("len", self.len),
            ("f_cap", self.f_cap),
            ("rho_jam", self.rho_jam),
            ("u_free", self.u_free),
        ] {
            if !(v > T::zero() && v.is_finite()) {
                return Err(HighwayError::NonPositive {
                    edge: self.id,
                    field,
                    value: to_f64(v),
                });
            }
        }
        if self.u_free * self.rho_jam <= self.f_cap {
            return Err(HighwayError::NoBackwardWave {
                edge: self.id,
                product: to_f64(self.u_free * self.rho_jam),
                f_cap: to_f64(self.f_cap),
            });
        }
        Ok(())
    }

    /// Backward-wave ratio τ = f̄ / (ū ρ̄ − f̄).
    pub fn tau(&self) -> Result<T, HighwayError> {
        let den = self.u_free * self.rho_jam - self.f_cap;
        if den <= T::zero() {
            return Err(HighwayError::NoBackwardWave {
                edge: self.id,
                product: to_f64(self.u_free * self.rho_jam),
                f_cap: to_f64(self.f_cap),
            });
        }
        Ok(self.f_cap / den)
    }

    fn tau_unchecked(&self) -> T {
        self.f_cap / (self.u_free * self.rho_jam - self.f_cap)
    }

    /// Density at which the flow under speed limit `u` peaks.
    pub fn critical_density(&self, u: T) -> T {
        // τρ̄ū/(τū+u) rewritten without τ: f̄ρ̄ / (f̄ + u(ρ̄ − f̄/ū))
        let fr = self.f_cap * self.rho_jam;
        fr / (self.f_cap + u * (self.rho_jam - self.f_cap / self.u_free))
    }

    /// Congested-branch supply τū(ρ̄ − ρ).
    pub fn supply(&self, rho: T) -> T {
        self.tau_unchecked() * self.u_free * (self.rho_jam - rho)
    }

    /// Piecewise-linear fundamental diagram.
    pub fn fd_flow(&self, rho: T, u: T) -> Result<T, HighwayError> {
        if rho < T::zero() || rho > self.rho_jam || rho.is_nan() {
            return Err(HighwayError::DensityOutOfRange {
                edge: self.id,
                rho: to_f64(rho),
                rho_jam: to_f64(self.rho_jam),
            });
        }
        if !(u > T::zero()) || u > self.u_free {
            return Err(HighwayError::SpeedOutOfRange {
                edge: self.id,
                u: to_f64(u),
                u_free: to_f64(self.u_free),
            });
        }
        if rho <= self.critical_density(u) {
            Ok(u * rho)
        } else {
            Ok(self.supply(rho).max(T::zero()))
        }
    }

    /// Coefficient c(u) = f̄ + u(ρ̄ − f̄/ū) = f̄ρ̄/ρᶜ(u).
    pub fn congestion_coeff(&self, u: T) -> T {
        self.f_cap + u * (self.rho_jam - self.f_cap / self.u_free)
    }
}

/// Free function form of [`EdgeParams::tau`].
pub fn tau<T: Real>(edge: &EdgeParams<T>) -> Result<T, HighwayError> {
    edge.tau()
}

/// Free function form of [`EdgeParams::critical_density`].
pub fn critical_density<T: Real>(edge: &EdgeParams<T>, u: T) -> T {
    edge.critical_density(u)
}

/// Free function form of [`EdgeParams::fd_flow`].
pub fn fd_flow<T: Real>(edge: &EdgeParams<T>, rho: T, u: T) -> Result<T, HighwayError> {
    edge.fd_flow(rho, u)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityViolation {
    pub edge: usize,
    pub h: f64,
    pub limit: f64,
}

impl std::fmt::Display for StabilityViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "edge {}: h = {} > 1/top speed = {}", self.edge, self.h, self.limit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HighwayConfig<T> {
    pub edges: Vec<EdgeParams<T>>,
    /// Slot length δ in hours.
    pub delta: T,
    /// Number of slots T in a planning horizon.
    pub horizon: usize,
    /// Speed menu Γ, km/h, strictly increasing.
    pub gamma: Vec<T>,
}

impl<T: Real> HighwayConfig<T> {
    pub fn n(&self) -> usize {
        self.edges.len()
    }

    pub fn m(&self) -> usize {
        self.gamma.len()
    }

    /// Discretization ratio h_e = δ / len_e (1/km·h).
    pub fn h(&self, e: usize) -> T {
        self.delta / self.edges[e].len
    }

    pub fn top_speed(&self) -> T {
        *self.gamma.last().expect("nonempty menu")
    }

    /// Checks everything except stability.
    pub fn validate_shape(&self) -> Result<(), HighwayError> {
        if self.edges.is_empty() {
            return Err(HighwayError::NoEdges);
        }
        if self.horizon == 0 {
            return Err(HighwayError::EmptyHorizon);
        }
        if !(self.delta > T::zero() && self.delta.is_finite()) {
            return Err(HighwayError::BadDelta(to_f64(self.delta)));
        }
        for (pos, e) in self.edges.iter().enumerate() {
            if e.id != pos + 1 {
                return Err(HighwayError::BadEdgeId { pos, id: e.id });
            }
            e.validate()?;
        }
        if self.gamma.is_empty()
            || self.gamma[0] <= T::zero()
            || self.gamma.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(HighwayError::BadMenu);
        }
        let top = self.top_speed();
        for e in &self.edges {
            if top > e.u_free {
                return Err(HighwayError::MenuAboveFreeFlow {
                    edge: e.id,
                    top: to_f64(top),
                    u_free: to_f64(e.u_free),
                });
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), HighwayError> {
        self.validate_shape()?;
        self.check_stability().map_err(HighwayError::Unstable)
    }

    /// `h_e ≤ 1/γ^(m)` on every edge.
    pub fn check_stability(&self) -> Result<(), Vec<StabilityViolation>> {
        let Some(&top) = self.gamma.last() else {
            return Ok(());
        };
        let limit = T::one() / top;
        let bad: Vec<StabilityViolation> = (0..self.n())
            .filter(|&e| self.h(e) > limit * (T::one() + T::epsilon() * lit(16.0)))
            .map(|e| StabilityViolation {
                edge: self.edges[e].id,
                h: to_f64(self.h(e)),
                limit: to_f64(limit),
            })
            .collect();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(bad)
        }
    }

    /// Copy with every event active at `slot` applied.
    pub fn at_slot(&self, events: &[EdgeEvent<T>], slot: usize) -> Self {
        let mut out = self.clone();
        for ev in events.iter().filter(|ev| ev.active(slot)) {
            if let Some(edge) = out.edges.get_mut(ev.edge.wrapping_sub(1)) {
                ev.apply(edge);
            }
        }
        out
    }
}

/// A time-windowed replacement of an edge's (f̄, ρ̄, ū), e.g. an accident or
/// lane closure, active on slots `start..end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: serde::de::DeserializeOwned"))]
pub struct EdgeEvent<T> {
    pub edge: usize,
    pub start: usize,
    pub end: usize,
    #[serde(default)]
    pub f_cap: Option<T>,
    #[serde(default)]
    pub rho_jam: Option<T>,
    #[serde(default)]
    pub u_free: Option<T>,
}

impl<T: Real> EdgeEvent<T> {
    pub fn active(&self, slot: usize) -> bool {
        self.start <= slot && slot < self.end
    }

    fn apply(&self, e: &mut EdgeParams<T>) {
        if let Some(v) = self.f_cap {
            e.f_cap = v;
        }
        if let Some(v) = self.rho_jam {
            e.rho_jam = v;
        }
        if let Some(v) = self.u_free {
            e.u_free = v;
        }
    }

    pub fn validate(&self, cfg: &HighwayConfig<T>) -> Result<(), HighwayError> {
        let bad = |reason: &str| HighwayError::BadEvent {
            edge: self.edge,
            reason: reason.to_string(),
        };
        if self.edge == 0 || self.edge > cfg.n() {
            return Err(bad("edge id out of range"));
        }
        if self.end <= self.start {
            return Err(bad("empty window"));
        }
        let mut e = cfg.edges[self.edge - 1].clone();
        self.apply(&mut e);
        e.validate()?;
        if cfg.top_speed() > e.u_free {
            return Err(bad("free-flow speed below the top menu speed"));
        }
        Ok(())
    }
}
