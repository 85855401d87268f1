//! Brute-force oracles and random instance generators shared by the solver
//! tests and the workspace acceptance run.
#![allow(dead_code)]

use drvsl_solver::{LpProblem, MilpProblem, Relation, Row, Sense};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Dense Gaussian elimination with partial pivoting; None when singular.
pub fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())?;
        if a[p][c].abs() < 1e-10 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Best objective over all vertices of {lo ≤ x ≤ hi, rows}; None if infeasible.
/// Assumes a bounded box so the optimum is attained at a vertex.
pub fn vertex_oracle(p: &LpProblem<f64>) -> Option<f64> {
    let n = p.num_vars();
    // every constraint as (coeffs dense, rhs) hyperplane candidates
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), p.lower[j]));
        planes.push((e, p.upper[j]));
    }
    for row in &p.rows {
        let mut a = vec![0.0; n];
        for &(j, v) in &row.coeffs {
            a[j] += v;
        }
        planes.push((a, row.rhs));
    }
    let k = planes.len();
    let mut best: Option<f64> = None;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let a: Vec<Vec<f64>> = idx.iter().map(|&i| planes[i].0.clone()).collect();
        let b: Vec<f64> = idx.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = gauss(a, b) {
            if p.max_violation(&x) <= 1e-7 {
                let v = p.objective_value(&x);
                let better = match (best, p.sense) {
                    (None, _) => true,
                    (Some(b), Sense::Maximize) => v > b,
                    (Some(b), Sense::Minimize) => v < b,
                };
                if better {
                    best = Some(v);
                }
            }
        }
        // next combination
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < k - n + i {
                idx[i] += 1;
                for t in i + 1..n {
                    idx[t] = idx[t - 1] + 1;
                }
                break;
            }
        }
    }
}

pub fn random_lp(rng: &mut ChaCha8Rng) -> LpProblem<f64> {
    let n = rng.gen_range(1..=6);
    let m = rng.gen_range(1..=6);
    let sense = if rng.gen_bool(0.5) { Sense::Maximize } else { Sense::Minimize };
    let mut p = LpProblem::new(sense);
    let mut anchor = Vec::new();
    for _ in 0..n {
        let lo = rng.gen_range(-5..=0) as f64;
        let hi = lo + rng.gen_range(0..=10) as f64;
        p.add_var(rng.gen_range(-5.0..5.0), lo, hi);
        anchor.push(rng.gen_range(lo..=hi));
    }
    // most instances are built around a feasible anchor point
    let planted = rng.gen_bool(0.8);
    for _ in 0..m {
        let mut coeffs: Vec<(usize, f64)> = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.7) {
                coeffs.push((j, rng.gen_range(-4..=4) as f64));
            }
        }
        let rel = match rng.gen_range(0..5) {
            0 => Relation::Eq,
            1 | 2 => Relation::Ge,
            _ => Relation::Le,
        };
        let rhs = if planted {
            let act: f64 = coeffs.iter().map(|&(j, a)| a * anchor[j]).sum();
            match rel {
                Relation::Eq => act,
                Relation::Ge => act - rng.gen_range(0.0..3.0),
                Relation::Le => act + rng.gen_range(0.0..3.0),
            }
        } else {
            rng.gen_range(-6.0..8.0)
        };
        p.add_row(Row::new(coeffs, rel, rhs));
    }
    p
}

/// Best value of c·y over the 2-D polygon {0 ≤ y ≤ ub, rows} by vertex enumeration.
pub fn lp2(c: [f64; 2], ub: [f64; 2], rows: &[([f64; 2], f64)]) -> Option<f64> {
    let mut lines: Vec<([f64; 2], f64)> = vec![
        ([1.0, 0.0], 0.0),
        ([1.0, 0.0], ub[0]),
        ([0.0, 1.0], 0.0),
        ([0.0, 1.0], ub[1]),
    ];
    lines.extend_from_slice(rows);
    let feasible = |y: [f64; 2]| {
        y[0] >= -1e-9
            && y[1] >= -1e-9
            && y[0] <= ub[0] + 1e-9
            && y[1] <= ub[1] + 1e-9
            && rows.iter().all(|(a, b)| a[0] * y[0] + a[1] * y[1] <= b + 1e-9)
    };
    let mut best: Option<f64> = None;
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            let (a, b) = (lines[i], lines[j]);
            let det = a.0[0] * b.0[1] - a.0[1] * b.0[0];
            if det.abs() < 1e-12 {
                continue;
            }
            let y = [(a.1 * b.0[1] - a.0[1] * b.1) / det, (a.0[0] * b.1 - a.1 * b.0[0]) / det];
            if feasible(y) {
                let v = c[0] * y[0] + c[1] * y[1];
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        }
    }
    best
}

pub struct RandomMilp {
    pub nb: usize,
    c_bin: Vec<f64>,
    c_cont: [f64; 2],
    ub: [f64; 2],
    /// a_bin · x + a_cont · y ≤ rhs
    rows: Vec<(Vec<f64>, [f64; 2], f64)>,
    groups: Vec<Vec<usize>>,
}

impl RandomMilp {
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        let nb = rng.gen_range(1..=10);
        let with_cont = rng.gen_bool(0.5);
        let m = rng.gen_range(1..=5);
        let c_bin = (0..nb).map(|_| rng.gen_range(-3..=9) as f64).collect();
        let c_cont = if with_cont {
            [rng.gen_range(-2.0..3.0), rng.gen_range(-2.0..3.0)]
        } else {
            [0.0, 0.0]
        };
        let ub = if with_cont { [4.0, 4.0] } else { [0.0, 0.0] };
        let rows = (0..m)
            .map(|_| {
                let a: Vec<f64> = (0..nb).map(|_| rng.gen_range(-2..=6) as f64).collect();
                let ac = if with_cont {
                    [rng.gen_range(-3..=3) as f64, rng.gen_range(-3..=3) as f64]
                } else {
                    [0.0, 0.0]
                };
                (a, ac, rng.gen_range(0..=12) as f64)
            })
            .collect();
        let mut groups = Vec::new();
        if nb >= 4 && rng.gen_bool(0.4) {
            let k = rng.gen_range(2..=nb / 2);
            groups.push((0..k).collect());
            if nb - k >= 2 && rng.gen_bool(0.5) {
                groups.push((k..nb).collect());
            }
        }
        RandomMilp { nb, c_bin, c_cont, ub, rows, groups }
    }

    pub fn build(&self) -> MilpProblem<f64> {
        let mut lp = LpProblem::new(Sense::Maximize);
        for &c in &self.c_bin {
            lp.add_var(c, 0.0, 1.0);
        }
        let y0 = lp.add_var(self.c_cont[0], 0.0, self.ub[0]);
        let y1 = lp.add_var(self.c_cont[1], 0.0, self.ub[1]);
        for (a, ac, rhs) in &self.rows {
            let mut coeffs: Vec<(usize, f64)> = a.iter().enumerate().map(|(j, &v)| (j, v)).collect();
            coeffs.push((y0, ac[0]));
            coeffs.push((y1, ac[1]));
            lp.add_row(Row::new(coeffs, Relation::Le, *rhs));
        }
        for g in &self.groups {
            lp.add_row(Row::eq(g.iter().map(|&j| (j, 1.0)).collect(), 1.0));
        }
        let mut p = MilpProblem::new(lp);
        for j in 0..self.nb {
            p.mark_binary(j);
        }
        for g in &self.groups {
            p.add_sos1(g.clone());
        }
        p
    }

    pub fn enumerate(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for mask in 0u32..(1 << self.nb) {
            let x: Vec<f64> = (0..self.nb).map(|j| ((mask >> j) & 1) as f64).collect();
            if self.groups.iter().any(|g| g.iter().map(|&j| x[j]).sum::<f64>() != 1.0) {
                continue;
            }
            let residual: Vec<([f64; 2], f64)> = self
                .rows
                .iter()
                .map(|(a, ac, rhs)| (*ac, rhs - a.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>()))
                .collect();
            if let Some(v) = lp2(self.c_cont, self.ub, &residual) {
                let total = v + self.c_bin.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>();
                best = Some(best.map_or(total, |b: f64| b.max(total)));
            }
        }
        best
    }
}
