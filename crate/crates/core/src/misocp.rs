//! Level-discretized cone reformulation (P5), solved by outer approximation:
//! each hyperbolic row νρ ≥ π_k² gated on its level selector is enforced
//! lazily through tangent cuts.

use std::time::Duration;

use drvsl_solver::{solve_with_lazy_cuts, LazyOptions, MilpOptions, MilpProblem, Row, Solution};
use serde::Serialize;

use crate::formulation::{InstanceData, VarIndex};
use crate::highway::HighwayConfig;
use crate::real::{lit, to_f64, Real};

/// ϑ̄ = √(max_e {ū_e ρ̄_e² η̄ + ū_e ρ̄_e / T}).
pub fn theta_bound<T: Real>(cfg: &HighwayConfig<T>, eta_bar: T, horizon: usize) -> T {
    let tt = lit::<T>(horizon as f64);
    cfg.edges
        .iter()
        .map(|e| e.u_free * e.rho_jam * e.rho_jam * eta_bar + e.u_free * e.rho_jam / tt)
        .fold(T::zero(), |a, b| a.max(b))
        .sqrt()
}

/// Sorted levels π_1 < … < π_K in [0, ϑ̄].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelGrid<T> {
    pub points: Vec<T>,
}

impl<T: Real> LevelGrid<T> {
    /// K uniform points from 0 to ϑ̄ (only 0 when K = 1).
    pub fn uniform(k: usize, theta_bar: T) -> Self {
        assert!(k >= 1, "need at least one level");
        if k == 1 {
            return LevelGrid { points: vec![T::zero()] };
        }
        let step = theta_bar / lit::<T>((k - 1) as f64);
        LevelGrid { points: (0..k).map(|i| step * lit::<T>(i as f64)).collect() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// One gated hyperbolic row ϑ² ≤ νρ with ϑ = Σ_k π_k q_k.
#[derive(Debug, Clone, PartialEq)]
pub struct Cone {
    pub l: usize,
    pub e: usize,
    pub t: usize,
    pub nu: usize,
    pub rho: usize,
    pub q: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct P5<T> {
    pub milp: MilpProblem<T>,
    pub index: VarIndex,
    pub grid: LevelGrid<T>,
    pub cones: Vec<Cone>,
}

/// Builds P5: the structural rows without the bilinear reward, plus level
/// selectors with objective weight π_k²/N. Cone rows are left to [`solve_p5`].
pub fn build_p5<T: Real>(inst: &InstanceData<T>, grid: &LevelGrid<T>) -> P5<T> {
    let index = VarIndex::new(inst);
    let mut milp = crate::formulation::build_core_for_p5(inst, &index);
    let inv_n = T::one() / lit::<T>(inst.n_samples() as f64);
    let mut cones = Vec::new();
    for l in 0..index.n_samples {
        for t in 0..index.horizon {
            for e in 0..index.n {
                let q: Vec<usize> = grid
                    .points
                    .iter()
                    .enumerate()
                    .map(|(k, &p)| {
                        let j = milp.add_binary(inv_n * p * p);
                        milp.lp.set_var_name(j, format!("q_{l}_{}_{t}_{}", e + 1, k + 1));
                        j
                    })
                    .collect();
                milp.lp.add_named_row(
                    format!("level_{l}_{}_{t}", e + 1),
                    Row::eq(q.iter().map(|&j| (j, T::one())).collect(), T::one()),
                );
                milp.add_sos1(q.clone());
                // νρ ≥ π² with ν ≤ ν̄, ρ ≤ ρ̄ implies ρ ≥ π²/ν̄ and ν ≥ π²/ρ̄.
                let (nu, rho) = (index.nu(l, e, t), index.rho(l, e, t));
                for (a, b) in [(rho, nu), (nu, rho)] {
                    let cap = milp.lp.upper[b];
                    if cap > T::zero() && cap.is_finite() {
                        let mut coeffs: Vec<(usize, T)> =
                            q.iter().zip(&grid.points).map(|(&j, &p)| (j, -(p * p) / cap)).collect();
                        coeffs.push((a, T::one()));
                        milp.lp.add_row(Row::ge(coeffs, T::zero()));
                    }
                }
                cones.push(Cone { l, e, t, nu: index.nu(l, e, t), rho: index.rho(l, e, t), q });
            }
        }
    }
    P5 { milp, index, grid: grid.clone(), cones }
}

/// Point of {νρ = c} nearest to (ν0, ρ0): ν solves s⁴ − ν0 s³ + cρ0 s − c² = 0.
pub fn nearest_boundary<T: Real>(nu0: T, rho0: T, c: T) -> (T, T) {
    let radial = if nu0 > T::zero() && rho0 > T::zero() {
        nu0 * (c / (nu0 * rho0)).sqrt()
    } else {
        c.sqrt()
    };
    let f = |s: T| s * s * s * s - nu0 * s * s * s + c * rho0 * s - c * c;
    let df = |s: T| lit::<T>(4.0) * s * s * s - lit::<T>(3.0) * nu0 * s * s + c * rho0;
    let mut s = radial;
    for _ in 0..60 {
        let d = df(s);
        if d == T::zero() || !d.is_finite() {
            break;
        }
        let next = s - f(s) / d;
        if !(next > T::zero()) || !next.is_finite() {
            s = radial;
            break;
        }
        let done = (next - s).abs() <= T::epsilon() * lit::<T>(8.0) * s;
        s = next;
        if done {
            break;
        }
    }
    // Fall back to the radial point if Newton wandered to a farther root.
    let dist = |s: T| (s - nu0).powi(2) + (c / s - rho0).powi(2);
    if !(s > T::zero()) || dist(radial) < dist(s) {
        s = radial;
    }
    (s, c / s)
}

/// Tangent ρ*ν + ν*ρ ≥ 2c of {νρ ≥ c} at (ν*, ρ*), gated: ≥ 2c·q. When q = 0
/// the row reads ρ*ν + ν*ρ ≥ 0, implied by ν, ρ ≥ 0.
pub fn gated_tangent<T: Real>(cone: &Cone, k: usize, c: T, nu0: T, rho0: T) -> Row<T> {
    let (ns, rs) = nearest_boundary(nu0, rho0, c);
    Row::ge(
        vec![(cone.nu, rs), (cone.rho, ns), (cone.q[k], -lit::<T>(2.0) * c)],
        T::zero(),
    )
}

#[derive(Debug, Clone)]
pub struct P5Solution<T> {
    pub solution: Solution<T>,
    pub cuts_added: usize,
    /// Largest relative shortfall (π_k² − νρ)/max(1, π_k²) at the returned point.
    pub max_violation: f64,
}

/// Relative shortfall tolerance of the outer approximation.
pub const OA_TOL: f64 = 1e-6;

fn shortfall<T: Real>(cones: &[Cone], grid: &LevelGrid<T>, x: &[T]) -> Vec<(usize, usize, T, f64)> {
    let mut out = Vec::new();
    for (ci, cone) in cones.iter().enumerate() {
        let Some(k) = cone.q.iter().position(|&j| x[j] > lit(0.5)) else {
            continue;
        };
        let c = grid.points[k] * grid.points[k];
        if c <= T::zero() {
            continue;
        }
        let prod = x[cone.nu] * x[cone.rho];
        let v = to_f64((c - prod) / c.max(T::one()));
        if v > 0.0 {
            out.push((ci, k, c, v));
        }
    }
    out
}

pub fn solve_p5<T: Real>(p5: &mut P5<T>, budget: Option<Duration>) -> P5Solution<T> {
    let opts = LazyOptions { milp: MilpOptions::default(), time_limit: budget, max_rounds: 100_000 };
    let cones = p5.cones.clone();
    let grid = p5.grid.clone();
    let mut cuts_added = 0;
    let solution = solve_with_lazy_cuts(
        &mut p5.milp,
        |x| {
            let rows: Vec<Row<T>> = shortfall(&cones, &grid, x)
                .into_iter()
                .filter(|&(_, _, _, v)| v > OA_TOL)
                .map(|(ci, k, c, _)| gated_tangent(&cones[ci], k, c, x[cones[ci].nu], x[cones[ci].rho]))
                .collect();
            cuts_added += rows.len();
            rows
        },
        &opts,
    );
    let max_violation = if solution.status.has_solution() {
        shortfall(&p5.cones, &p5.grid, &solution.x).iter().map(|s| s.3).fold(0.0, f64::max)
    } else {
        0.0
    };
    P5Solution { solution, cuts_added, max_violation }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_point_is_on_curve_and_orthogonal() {
        for &(nu0, rho0, c) in &[(1.0, 1.0, 4.0), (0.5, 3.0, 4.0), (10.0, 0.1, 2.0), (0.0, 2.0, 1.0)] {
            let (s, r) = nearest_boundary::<f64>(nu0, rho0, c);
            assert!((s * r - c).abs() < 1e-9 * c);
            // Displacement is parallel to the normal (ρ*, ν*).
            let (dx, dy) = (s - nu0, r - rho0);
            assert!((dx * s - dy * r).abs() < 1e-7 * (1.0 + dx.abs() + dy.abs()) * (s + r));
        }
    }

    #[test]
    fn theta_example() {
        let cfg = HighwayConfig {
            edges: vec![crate::highway::EdgeParams {
                id: 1,
                len: 2.0,
                lanes: 8,
                f_cap: 3.1e4,
                rho_jam: 1050.0,
                u_free: 140.0,
                has_onramp: false,
                has_offramp: false,
            }],
            delta: 1.0 / 120.0,
            horizon: 20,
            gamma: vec![120.0],
        };
        let th = theta_bound(&cfg, 1e-3, 20);
        assert!((th - 161700f64.sqrt()).abs() < 1e-9);
        assert!((th - 402.1).abs() < 0.05);
    }
}
