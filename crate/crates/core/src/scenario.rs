//! Realizations ϖ = (ω, ρ(0), r^in, r^o) of the uncertain traffic inputs.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::highway::HighwayConfig;
use crate::real::{lit, to_f64, Real};

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("sample {sample}: {field} has length {got}, expected {expected}")]
    Dimension { sample: usize, field: String, got: usize, expected: usize },
    #[error("sample {sample}: {field}[{index}] = {value}: fraction must be < 1")]
    FractionTooLarge { sample: usize, field: &'static str, index: String, value: f64 },
    #[error("sample {sample}: {field}[{index}] = {value} must be finite and nonnegative")]
    Negative { sample: usize, field: &'static str, index: String, value: f64 },
    #[error("sample {sample}: rho0[{edge}] = {value} exceeds jam density {rho_jam}")]
    AboveJam { sample: usize, edge: usize, value: f64, rho_jam: f64 },
    #[error("sample {sample}: {field}[{edge}] nonzero on an edge without that ramp")]
    PhantomRamp { sample: usize, field: &'static str, edge: usize },
    #[error("range for {field}: {reason}")]
    BadRange { field: &'static str, reason: String },
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing samples: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSample<T> {
    /// Mainstream inflow ω(t), veh/h, length T.
    pub omega: Vec<T>,
    /// Initial densities ρ_e(0), veh/km, length n.
    pub rho0: Vec<T>,
    /// On-ramp fractions r^in_e(t), n×T.
    pub r_in: Vec<Vec<T>>,
    /// Off-ramp fractions r^o_e(t), n×T.
    pub r_out: Vec<Vec<T>>,
}

/// One slot of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Disturbance<T> {
    pub omega: T,
    pub r_in: Vec<T>,
    pub r_out: Vec<T>,
}

impl<T: Real> ScenarioSample<T> {
    pub fn zeros(n: usize, horizon: usize) -> Self {
        ScenarioSample {
            omega: vec![T::zero(); horizon],
            rho0: vec![T::zero(); n],
            r_in: vec![vec![T::zero(); horizon]; n],
            r_out: vec![vec![T::zero(); horizon]; n],
        }
    }

    pub fn horizon(&self) -> usize {
        self.omega.len()
    }

    pub fn slice(&self, t: usize) -> Disturbance<T> {
        Disturbance {
            omega: self.omega[t],
            r_in: self.r_in.iter().map(|r| r[t]).collect(),
            r_out: self.r_out.iter().map(|r| r[t]).collect(),
        }
    }

    /// Ramp-split factor (1 − r^o_s(t)) / (1 − r^in_e(t)) on the link into edge `e ≥ 1`.
    pub fn kappa(&self, e: usize, t: usize) -> T {
        (T::one() - self.r_out[e - 1][t]) / (T::one() - self.r_in[e][t])
    }

    pub fn validate(&self, cfg: &HighwayConfig<T>, sample: usize) -> Result<(), SampleError> {
        let (n, horizon) = (cfg.n(), cfg.horizon);
        let dim = |field: &str, got: usize, expected: usize| SampleError::Dimension {
            sample,
            field: field.to_string(),
            got,
            expected,
        };
        if self.omega.len() != horizon {
            return Err(dim("omega", self.omega.len(), horizon));
        }
        if self.rho0.len() != n {
            return Err(dim("rho0", self.rho0.len(), n));
        }
        for (field, m) in [("r_in", &self.r_in), ("r_out", &self.r_out)] {
            if m.len() != n {
                return Err(dim(field, m.len(), n));
            }
            for (e, row) in m.iter().enumerate() {
                if row.len() != horizon {
                    return Err(dim(&format!("{field}[{e}]"), row.len(), horizon));
                }
            }
        }
        let nonneg = |field: &'static str, index: String, v: T| {
            if v >= T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(SampleError::Negative { sample, field, index, value: to_f64(v) })
            }
        };
        for (t, &w) in self.omega.iter().enumerate() {
            nonneg("omega", t.to_string(), w)?;
        }
        for (e, &r) in self.rho0.iter().enumerate() {
            nonneg("rho0", e.to_string(), r)?;
            if r > cfg.edges[e].rho_jam {
                return Err(SampleError::AboveJam {
                    sample,
                    edge: e,
                    value: to_f64(r),
                    rho_jam: to_f64(cfg.edges[e].rho_jam),
                });
            }
        }
        for (field, m) in [("r_in", &self.r_in), ("r_out", &self.r_out)] {
            for (e, row) in m.iter().enumerate() {
                let has = if field == "r_in" {
                    cfg.edges[e].has_onramp
                } else {
                    cfg.edges[e].has_offramp
                };
                for (t, &v) in row.iter().enumerate() {
                    nonneg(field, format!("{e}][{t}"), v)?;
                    if v >= T::one() {
                        return Err(SampleError::FractionTooLarge {
                            sample,
                            field,
                            index: format!("{e}][{t}"),
                            value: to_f64(v),
                        });
                    }
                    if !has && v != T::zero() {
                        return Err(SampleError::PhantomRamp { sample, field, edge: e });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Closed interval `[lo, hi]` sampled uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Range<T> {
    pub fn point(v: T) -> Self {
        Range { lo: v, hi: v }
    }

    pub fn new(lo: T, hi: T) -> Self {
        Range { lo, hi }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> T {
        // Always consume one draw so streams stay aligned across ranges.
        let u: f64 = rng.gen();
        if self.lo == self.hi {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * lit::<T>(u)
        }
    }

    pub fn mid(&self) -> T {
        (self.lo + self.hi) / lit(2.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSpec<T> {
    pub omega: Range<T>,
    pub rho0: Range<T>,
    pub r_in: Range<T>,
    pub r_out: Range<T>,
    #[serde(default)]
    pub seed: u64,
}

/// Seed streams; training and validation draws never share a stream.
pub mod stream {
    pub const TRAINING: u64 = 0;
    pub const VALIDATION: u64 = 1 << 40;
    pub const PLANT: u64 = 2 << 40;
    pub const TUNING: u64 = 3 << 40;
}

/// Independent ChaCha stream `stream` under `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

impl<T: Real> SampleSpec<T> {
    pub fn validate(&self, cfg: &HighwayConfig<T>) -> Result<(), SampleError> {
        let min_jam = cfg
            .edges
            .iter()
            .map(|e| e.rho_jam)
            .fold(T::infinity(), |a, b| a.min(b));
        for (field, r) in [
            ("omega", self.omega),
            ("rho0", self.rho0),
            ("r_in", self.r_in),
            ("r_out", self.r_out),
        ] {
            if !(r.lo.is_finite() && r.hi.is_finite()) || r.lo > r.hi {
                return Err(SampleError::BadRange { field, reason: "need finite lo <= hi".into() });
            }
            if r.lo < T::zero() {
                return Err(SampleError::BadRange { field, reason: "negative lower end".into() });
            }
            if (field == "r_in" || field == "r_out") && r.hi >= T::one() {
                return Err(SampleError::BadRange { field, reason: "fraction must be < 1".into() });
            }
        }
        if self.rho0.hi > min_jam {
            return Err(SampleError::BadRange {
                field: "rho0",
                reason: format!("upper end exceeds jam density {}", to_f64(min_jam)),
            });
        }
        Ok(())
    }

    /// Point mass at the midpoint of every range.
    pub fn mean_point(&self) -> Self {
        SampleSpec {
            omega: Range::point(self.omega.mid()),
            rho0: Range::point(self.rho0.mid()),
            r_in: Range::point(self.r_in.mid()),
            r_out: Range::point(self.r_out.mid()),
            seed: self.seed,
        }
    }

    pub fn draw<R: Rng>(&self, cfg: &HighwayConfig<T>, rng: &mut R) -> ScenarioSample<T> {
        let (n, horizon) = (cfg.n(), cfg.horizon);
        let omega = (0..horizon).map(|_| self.omega.draw(rng)).collect();
        let rho0 = (0..n).map(|_| self.rho0.draw(rng)).collect();
        let mut ramp = |range: &Range<T>, present: &dyn Fn(usize) -> bool| -> Vec<Vec<T>> {
            (0..n)
                .map(|e| {
                    (0..horizon)
                        .map(|_| {
                            let v = range.draw(rng);
                            if present(e) {
                                v
                            } else {
                                T::zero()
                            }
                        })
                        .collect()
                })
                .collect()
        };
        let r_in = ramp(&self.r_in, &|e| cfg.edges[e].has_onramp);
        let r_out = ramp(&self.r_out, &|e| cfg.edges[e].has_offramp);
        ScenarioSample { omega, rho0, r_in, r_out }
    }

    pub fn draw_many<R: Rng>(&self, cfg: &HighwayConfig<T>, count: usize, rng: &mut R) -> Vec<ScenarioSample<T>> {
        (0..count).map(|_| self.draw(cfg, rng)).collect()
    }
}

/// `count` i.i.d. samples from the training stream of `spec.seed`.
pub fn generate_samples<T: Real>(
    cfg: &HighwayConfig<T>,
    spec: &SampleSpec<T>,
    count: usize,
) -> Result<Vec<ScenarioSample<T>>, SampleError> {
    spec.validate(cfg)?;
    let mut rng = rng_for(spec.seed, stream::TRAINING);
    Ok(spec.draw_many(cfg, count, &mut rng))
}

pub fn parse_samples<T: Real>(text: &str, cfg: &HighwayConfig<T>) -> Result<Vec<ScenarioSample<T>>, SampleError> {
    let samples: Vec<ScenarioSample<T>> = serde_json::from_str(text)?;
    for (l, s) in samples.iter().enumerate() {
        s.validate(cfg, l)?;
    }
    Ok(samples)
}

pub fn load_samples<T: Real>(
    path: impl AsRef<Path>,
    cfg: &HighwayConfig<T>,
) -> Result<Vec<ScenarioSample<T>>, SampleError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| SampleError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_samples(&text, cfg)
}

pub fn save_samples<T: Real>(path: impl AsRef<Path>, samples: &[ScenarioSample<T>]) -> Result<(), SampleError> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(samples)?;
    fs::write(path, text).map_err(|source| SampleError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// CSV export, one row per (sample, edge): rho0, then ω, r_in, r_out per slot.
pub fn write_samples_csv<T: Real, W: std::io::Write>(samples: &[ScenarioSample<T>], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let horizon = samples.first().map_or(0, |s| s.horizon());
    let mut header = vec!["sample".to_string(), "edge".to_string(), "rho0".to_string()];
    for prefix in ["omega", "r_in", "r_out"] {
        header.extend((0..horizon).map(|t| format!("{prefix}_{t}")));
    }
    out.write_record(&header)?;
    for (l, s) in samples.iter().enumerate() {
        for e in 0..s.rho0.len() {
            let mut rec = vec![l.to_string(), (e + 1).to_string(), crate::io::fmt_sig(s.rho0[e])];
            rec.extend(s.omega.iter().map(|&v| crate::io::fmt_sig(v)));
            rec.extend(s.r_in[e].iter().map(|&v| crate::io::fmt_sig(v)));
            rec.extend(s.r_out[e].iter().map(|&v| crate::io::fmt_sig(v)));
            out.write_record(&rec)?;
        }
    }
    out.flush()?;
    Ok(())
}
