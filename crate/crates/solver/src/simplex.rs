//! Bounded-variable revised simplex (primal with composite phase 1, and dual).
//!
//! Every row `lo ≤ a·x ≤ hi` gets a logical `s` with `a·x − s = 0` and the row
//! bounds moved onto `s`. The problem is scaled by powers of two and solved as
//! a minimization; results are mapped back on the way out.

use std::time::Instant;

use crate::lu::LuFactor;
use crate::problem::{Basis, LpProblem, Relation, Row, Sense, SolveStats, Solution, Status, VarStatus};
use crate::scalar::Scalar;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct LpOptions {
    pub deadline: Option<Instant>,
    /// Pivots between refactorizations.
    pub refactor_every: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
    pub max_iterations: Option<usize>,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            deadline: None,
            refactor_every: 50,
            bland_after: 500,
            max_iterations: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    Budget,
    Numerical,
}

enum DualOutcome {
    Optimal,
    Infeasible,
    NeedPrimal,
    Stop(LpStatus),
}

pub(crate) struct Simplex<T> {
    n: usize,
    m: usize,
    /// Scaled structural columns, `(row, value)`.
    cols: Vec<Vec<(usize, T)>>,
    /// Scaled rows, `(col, value)`.
    rows: Vec<Vec<(usize, T)>>,
    col_scale: Vec<T>,
    row_scale: Vec<T>,
    obj_scale: T,
    sign: T,
    /// Original objective, for reporting.
    obj_orig: Vec<T>,
    /// Scaled minimization costs over structurals and logicals.
    cost: Vec<T>,
    lo: Vec<T>,
    hi: Vec<T>,
    status: Vec<VarStatus>,
    head: Vec<usize>,
    pos_of: Vec<usize>,
    x: Vec<T>,
    d: Vec<T>,
    lu: Option<LuFactor<T>>,
    since_refactor: usize,
    pub iterations: usize,
    degenerate_run: usize,
    // scratch
    buf_row: Vec<T>,
    buf_pos: Vec<T>,
    alpha: Vec<T>,
    y: Vec<T>,
    alpha_row: Vec<T>,
}

fn pow2_round<T: Scalar>(v: T) -> T {
    if !(v.is_finite() && v > T::zero()) {
        return T::one();
    }
    let e = v.log2().round();
    T::of(2.0).powf(e)
}

impl<T: Scalar> Simplex<T> {
    pub fn new(p: &LpProblem<T>) -> Self {
        let n = p.num_vars();
        let m = p.num_rows();
        let mut cols: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
        let mut rows: Vec<Vec<(usize, T)>> = Vec::with_capacity(m);
        for (r, row) in p.rows.iter().enumerate() {
            let mut merged: Vec<(usize, T)> = row.coeffs.clone();
            merged.sort_by_key(|e| e.0);
            let mut out: Vec<(usize, T)> = Vec::with_capacity(merged.len());
            for (j, a) in merged {
                match out.last_mut() {
                    Some(last) if last.0 == j => last.1 = last.1 + a,
                    _ => out.push((j, a)),
                }
            }
            out.retain(|e| e.1 != T::zero());
            for &(j, a) in &out {
                cols[j].push((r, a));
            }
            rows.push(out);
        }

        let (row_scale, col_scale) = compute_scaling(&rows, &cols, n);
        for (r, row) in rows.iter_mut().enumerate() {
            for e in row.iter_mut() {
                e.1 = e.1 * row_scale[r] * col_scale[e.0];
            }
        }
        for (j, col) in cols.iter_mut().enumerate() {
            for e in col.iter_mut() {
                e.1 = e.1 * row_scale[e.0] * col_scale[j];
            }
        }

        let sign = match p.sense {
            Sense::Minimize => T::one(),
            Sense::Maximize => -T::one(),
        };
        let cmax = (0..n)
            .map(|j| (p.objective[j] * col_scale[j]).abs())
            .fold(T::zero(), T::max);
        let obj_scale = if cmax > T::zero() { pow2_round(T::one() / cmax) } else { T::one() };
        let mut cost = vec![T::zero(); n + m];
        let mut lo = vec![T::zero(); n + m];
        let mut hi = vec![T::zero(); n + m];
        for j in 0..n {
            cost[j] = sign * p.objective[j] * col_scale[j] * obj_scale;
            lo[j] = p.lower[j] / col_scale[j];
            hi[j] = p.upper[j] / col_scale[j];
        }
        for (r, row) in p.rows.iter().enumerate() {
            let (l, h) = row.range();
            lo[n + r] = l * row_scale[r];
            hi[n + r] = h * row_scale[r];
        }

        let mut s = Simplex {
            n,
            m,
            cols,
            rows,
            col_scale,
            row_scale,
            obj_scale,
            sign,
            obj_orig: p.objective.clone(),
            cost,
            lo,
            hi,
            status: vec![VarStatus::AtLower; n + m],
            head: Vec::new(),
            pos_of: vec![NONE; n + m],
            x: vec![T::zero(); n + m],
            d: vec![T::zero(); n + m],
            lu: None,
            since_refactor: 0,
            iterations: 0,
            degenerate_run: 0,
            buf_row: vec![T::zero(); m],
            buf_pos: vec![T::zero(); m],
            alpha: vec![T::zero(); m],
            y: vec![T::zero(); m],
            alpha_row: vec![T::zero(); n + m],
        };
        s.slack_basis();
        s
    }

    fn slack_basis(&mut self) {
        self.head = (self.n..self.n + self.m).collect();
        self.pos_of = vec![NONE; self.n + self.m];
        for (p, &v) in self.head.iter().enumerate() {
            self.pos_of[v] = p;
            self.status[v] = VarStatus::Basic;
        }
        for j in 0..self.n {
            self.status[j] = self.default_nonbasic(j);
            self.x[j] = self.nonbasic_value(j);
        }
        self.lu = None;
    }

    fn default_nonbasic(&self, j: usize) -> VarStatus {
        if self.lo[j].is_finite() {
            VarStatus::AtLower
        } else if self.hi[j].is_finite() {
            VarStatus::AtUpper
        } else {
            VarStatus::Free
        }
    }

    fn nonbasic_value(&self, j: usize) -> T {
        match self.status[j] {
            VarStatus::AtLower => self.lo[j],
            VarStatus::AtUpper => self.hi[j],
            _ => T::zero(),
        }
    }

    /// Makes a nonbasic status consistent with the current (finite/infinite) bounds.
    fn fix_nonbasic_status(&mut self, j: usize) {
        let st = self.status[j];
        let ok = match st {
            VarStatus::Basic => return,
            VarStatus::AtLower => self.lo[j].is_finite(),
            VarStatus::AtUpper => self.hi[j].is_finite(),
            VarStatus::Free => !self.lo[j].is_finite() && !self.hi[j].is_finite(),
        };
        if !ok {
            self.status[j] = self.default_nonbasic(j);
        }
        self.x[j] = self.nonbasic_value(j);
    }

    /// Changes the bounds of structural `j` (original units).
    pub fn set_col_bounds(&mut self, j: usize, lo: T, hi: T) {
        self.lo[j] = lo / self.col_scale[j];
        self.hi[j] = hi / self.col_scale[j];
        self.fix_nonbasic_status(j);
    }

    pub fn col_bounds(&self, j: usize) -> (T, T) {
        (self.lo[j] * self.col_scale[j], self.hi[j] * self.col_scale[j])
    }

    /// Appends rows; their logicals enter the basis.
    #[allow(dead_code)] // only the unit tests append rows in place today
    pub fn add_rows(&mut self, new_rows: &[Row<T>]) {
        let n = self.n;
        for row in new_rows {
            let r = self.m;
            let mut coeffs: Vec<(usize, T)> = row.coeffs.clone();
            coeffs.sort_by_key(|e| e.0);
            let mut out: Vec<(usize, T)> = Vec::with_capacity(coeffs.len());
            for (j, a) in coeffs {
                match out.last_mut() {
                    Some(last) if last.0 == j => last.1 = last.1 + a,
                    _ => out.push((j, a)),
                }
            }
            out.retain(|e| e.1 != T::zero());
            let (mut amax, mut amin) = (T::zero(), T::infinity());
            for &(j, a) in &out {
                let v = (a * self.col_scale[j]).abs();
                amax = amax.max(v);
                amin = amin.min(v);
            }
            let rs = if amax > T::zero() { pow2_round(T::one() / (amax * amin).sqrt()) } else { T::one() };
            for e in out.iter_mut() {
                e.1 = e.1 * rs * self.col_scale[e.0];
                self.cols[e.0].push((r, e.1));
            }
            let act = out.iter().map(|&(j, a)| a * self.x[j]).sum();
            self.rows.push(out);
            self.row_scale.push(rs);
            let (l, h) = row.range();
            self.lo.push(l * rs);
            self.hi.push(h * rs);
            self.cost.push(T::zero());
            self.status.push(VarStatus::Basic);
            self.x.push(act);
            self.d.push(T::zero());
            self.alpha_row.push(T::zero());
            self.pos_of.push(self.m);
            self.head.push(n + r);
            self.m += 1;
        }
        self.buf_row = vec![T::zero(); self.m];
        self.buf_pos = vec![T::zero(); self.m];
        self.alpha = vec![T::zero(); self.m];
        self.y = vec![T::zero(); self.m];
        self.lu = None;
    }

    pub fn basis(&self) -> Basis {
        Basis {
            cols: self.status[..self.n].to_vec(),
            rows: self.status[self.n..].to_vec(),
        }
    }

    /// Installs a basis (possibly from a problem with fewer rows).
    pub fn set_basis(&mut self, b: &Basis) {
        let (n, m) = (self.n, self.m);
        if b.cols.len() != n || b.rows.len() > m {
            self.slack_basis();
            return;
        }
        for j in 0..n {
            self.status[j] = b.cols[j];
        }
        for r in 0..m {
            self.status[n + r] = b.rows.get(r).copied().unwrap_or(VarStatus::Basic);
        }
        let mut basics: Vec<usize> = (0..n + m).filter(|&v| self.status[v] == VarStatus::Basic).collect();
        if basics.len() > m {
            for &v in &basics[m..] {
                self.status[v] = self.default_nonbasic(v);
            }
            basics.truncate(m);
        } else if basics.len() < m {
            for r in 0..m {
                if basics.len() == m {
                    break;
                }
                if self.status[n + r] != VarStatus::Basic {
                    self.status[n + r] = VarStatus::Basic;
                    basics.push(n + r);
                }
            }
        }
        self.head = basics;
        self.pos_of = vec![NONE; n + m];
        for (p, &v) in self.head.iter().enumerate() {
            self.pos_of[v] = p;
        }
        for v in 0..n + m {
            if self.status[v] != VarStatus::Basic {
                self.fix_nonbasic_status(v);
            }
        }
        self.lu = None;
    }

    fn column(&self, j: usize) -> Vec<(usize, T)> {
        if j < self.n {
            self.cols[j].clone()
        } else {
            vec![(j - self.n, -T::one())]
        }
    }

    fn refactor(&mut self) {
        let cols: Vec<Vec<(usize, T)>> = self.head.iter().map(|&v| self.column(v)).collect();
        let (lu, repl) = LuFactor::factorize(self.m, &cols);
        for r in repl {
            let old = self.head[r.pos];
            let new = self.n + r.row;
            self.pos_of[old] = NONE;
            self.status[old] = self.default_nonbasic(old);
            self.x[old] = self.nonbasic_value(old);
            self.head[r.pos] = new;
            self.pos_of[new] = r.pos;
            self.status[new] = VarStatus::Basic;
        }
        self.lu = Some(lu);
        self.since_refactor = 0;
    }

    /// Recomputes basic values from the nonbasic ones.
    fn compute_primal(&mut self) {
        let n = self.n;
        for v in self.buf_row.iter_mut() {
            *v = T::zero();
        }
        for j in 0..n + self.m {
            if self.status[j] == VarStatus::Basic {
                continue;
            }
            let xj = self.x[j];
            if xj == T::zero() {
                continue;
            }
            if j < n {
                for &(r, a) in &self.cols[j] {
                    self.buf_row[r] = self.buf_row[r] - a * xj;
                }
            } else {
                self.buf_row[j - n] = self.buf_row[j - n] + xj;
            }
        }
        let lu = self.lu.as_ref().expect("factorized");
        lu.ftran(&mut self.buf_row, &mut self.buf_pos);
        for p in 0..self.m {
            self.x[self.head[p]] = self.buf_pos[p];
        }
    }

    /// Computes `y = B⁻ᵀ c_B` for the given basic costs and the reduced costs `d`.
    fn compute_duals(&mut self, phase1: bool) {
        let tol = T::feas_tol();
        for p in 0..self.m {
            let v = self.head[p];
            self.buf_pos[p] = if phase1 {
                if self.x[v] < self.lo[v] - tol {
                    -T::one()
                } else if self.x[v] > self.hi[v] + tol {
                    T::one()
                } else {
                    T::zero()
                }
            } else {
                self.cost[v]
            };
        }
        let lu = self.lu.as_mut().expect("factorized");
        lu.btran(&mut self.buf_pos, &mut self.y);
        let n = self.n;
        for j in 0..n {
            if self.status[j] == VarStatus::Basic {
                self.d[j] = T::zero();
                continue;
            }
            let mut s = if phase1 { T::zero() } else { self.cost[j] };
            for &(r, a) in &self.cols[j] {
                s = s - self.y[r] * a;
            }
            self.d[j] = s;
        }
        for r in 0..self.m {
            let j = n + r;
            self.d[j] = if self.status[j] == VarStatus::Basic {
                T::zero()
            } else {
                let c = if phase1 { T::zero() } else { self.cost[j] };
                c + self.y[r]
            };
        }
    }

    fn ftran_col(&mut self, j: usize) {
        for v in self.buf_row.iter_mut() {
            *v = T::zero();
        }
        if j < self.n {
            for &(r, a) in &self.cols[j] {
                self.buf_row[r] = a;
            }
        } else {
            self.buf_row[j - self.n] = -T::one();
        }
        let lu = self.lu.as_ref().expect("factorized");
        lu.ftran(&mut self.buf_row, &mut self.alpha);
    }

    fn max_primal_infeas(&self) -> T {
        let mut worst = T::zero();
        for &v in &self.head {
            worst = worst.max(self.lo[v] - self.x[v]).max(self.x[v] - self.hi[v]);
        }
        worst
    }

    fn can_move(&self, j: usize) -> bool {
        self.status[j] != VarStatus::Basic && self.lo[j] < self.hi[j]
    }

    /// Direction (+1 increase, −1 decrease) in which `j` improves, if any.
    fn improving_dir(&self, j: usize) -> Option<T> {
        let tol = T::opt_tol();
        let dj = self.d[j];
        match self.status[j] {
            VarStatus::AtLower if dj < -tol => Some(T::one()),
            VarStatus::AtUpper if dj > tol => Some(-T::one()),
            VarStatus::Free if dj.abs() > tol => Some(if dj < T::zero() { T::one() } else { -T::one() }),
            _ => None,
        }
    }

    fn pivot(&mut self, q: usize, p: usize, leave_to: VarStatus) {
        let leaving = self.head[p];
        self.status[leaving] = leave_to;
        self.x[leaving] = self.nonbasic_value(leaving);
        self.pos_of[leaving] = NONE;
        self.head[p] = q;
        self.pos_of[q] = p;
        self.status[q] = VarStatus::Basic;
        let lu = self.lu.as_mut().expect("factorized");
        lu.push_eta(p, &self.alpha);
        self.since_refactor += 1;
    }

    fn out_of_time(&self, opts: &LpOptions) -> bool {
        if let Some(cap) = opts.max_iterations {
            if self.iterations >= cap {
                return true;
            }
        }
        match opts.deadline {
            Some(dl) => self.iterations % 64 == 0 && Instant::now() >= dl,
            None => false,
        }
    }

    fn iteration_cap(&self) -> usize {
        50 * (self.n + self.m) + 20_000
    }

    /// Primal simplex; phase 1 runs while any basic variable is out of bounds.
    fn primal(&mut self, opts: &LpOptions) -> LpStatus {
        let ftol = T::feas_tol();
        let ptol = T::pivot_tol();
        let start_iter = self.iterations;
        let mut bland = false;
        loop {
            if self.iterations - start_iter > self.iteration_cap() {
                return LpStatus::Numerical;
            }
            if self.out_of_time(opts) {
                return LpStatus::Budget;
            }
            if self.lu.is_none() || self.since_refactor >= opts.refactor_every {
                self.refactor();
                self.compute_primal();
            }
            let phase1 = self.max_primal_infeas() > ftol;
            self.compute_duals(phase1);

            // pricing
            let mut q = NONE;
            let mut best = T::zero();
            let mut dir = T::zero();
            for j in 0..self.n + self.m {
                if !self.can_move(j) {
                    continue;
                }
                if let Some(dj) = self.improving_dir(j) {
                    if bland {
                        q = j;
                        dir = dj;
                        break;
                    }
                    let score = self.d[j].abs();
                    if score > best {
                        best = score;
                        q = j;
                        dir = dj;
                    }
                }
            }
            if q == NONE {
                return if phase1 { LpStatus::Infeasible } else { LpStatus::Optimal };
            }

            self.ftran_col(q);
            // Harris ratio test, pass 1
            let mut theta_max = T::infinity();
            for p in 0..self.m {
                let a = self.alpha[p];
                if a.abs() <= ptol {
                    continue;
                }
                let v = self.head[p];
                let rate = -dir * a;
                if let Some(target) = self.ratio_target(v, rate) {
                    let room = if rate < T::zero() { self.x[v] - target } else { target - self.x[v] };
                    let r = (room + ftol) / rate.abs();
                    if r < theta_max {
                        theta_max = r;
                    }
                }
            }
            // pass 2
            let mut leave = NONE;
            let mut leave_alpha = T::zero();
            let mut theta = T::infinity();
            let mut leave_target = T::zero();
            if theta_max.is_finite() {
                for p in 0..self.m {
                    let a = self.alpha[p];
                    if a.abs() <= ptol {
                        continue;
                    }
                    let v = self.head[p];
                    let rate = -dir * a;
                    if let Some(target) = self.ratio_target(v, rate) {
                        let room = if rate < T::zero() { self.x[v] - target } else { target - self.x[v] };
                        let r = room / rate.abs();
                        if r <= theta_max {
                            let better = if bland {
                                leave == NONE || v < self.head[leave]
                            } else {
                                a.abs() > leave_alpha
                            };
                            if better {
                                leave = p;
                                leave_alpha = a.abs();
                                theta = r.max(T::zero());
                                leave_target = target;
                            }
                        }
                    }
                }
            }
            let flip_range = self.hi[q] - self.lo[q];
            self.iterations += 1;
            if flip_range.is_finite() && (leave == NONE || flip_range <= theta) {
                // bound flip, basis unchanged
                let step = dir * flip_range;
                self.x[q] = self.x[q] + step;
                for p in 0..self.m {
                    let v = self.head[p];
                    self.x[v] = self.x[v] - self.alpha[p] * step;
                }
                self.status[q] = if dir > T::zero() { VarStatus::AtUpper } else { VarStatus::AtLower };
                self.x[q] = self.nonbasic_value(q);
                self.degenerate_run = 0;
                bland = false;
                continue;
            }
            if leave == NONE {
                if phase1 {
                    // cannot happen in exact arithmetic; refactor and retry once
                    if self.since_refactor == 0 {
                        return LpStatus::Numerical;
                    }
                    self.lu = None;
                    continue;
                }
                return LpStatus::Unbounded;
            }
            let step = dir * theta;
            self.x[q] = self.x[q] + step;
            for p in 0..self.m {
                let v = self.head[p];
                self.x[v] = self.x[v] - self.alpha[p] * step;
            }
            let lv = self.head[leave];
            let to = if leave_target == self.lo[lv] { VarStatus::AtLower } else { VarStatus::AtUpper };
            self.pivot(q, leave, to);
            if theta <= ftol * T::of(1e-3) {
                self.degenerate_run += 1;
                if self.degenerate_run > opts.bland_after {
                    bland = true;
                }
            } else {
                self.degenerate_run = 0;
                bland = false;
            }
        }
    }

    /// Bound that a basic variable moving at `rate` runs into, if any.
    fn ratio_target(&self, v: usize, rate: T) -> Option<T> {
        let tol = T::feas_tol();
        let (x, l, h) = (self.x[v], self.lo[v], self.hi[v]);
        if rate < T::zero() {
            if x < l - tol {
                None
            } else if x > h + tol {
                Some(h)
            } else if l.is_finite() {
                Some(l)
            } else {
                None
            }
        } else if x > h + tol {
            None
        } else if x < l - tol {
            Some(l)
        } else if h.is_finite() {
            Some(h)
        } else {
            None
        }
    }

    /// Flips boxed nonbasics to the bound their reduced cost prefers; reports
    /// whether the basis is then dual feasible.
    fn make_dual_feasible(&mut self) -> bool {
        let tol = T::opt_tol();
        let mut feasible = true;
        let mut flipped = false;
        for j in 0..self.n + self.m {
            let dj = self.d[j];
            match self.status[j] {
                VarStatus::Basic => {}
                VarStatus::AtLower if dj < -tol => {
                    if self.hi[j].is_finite() {
                        self.status[j] = VarStatus::AtUpper;
                        self.x[j] = self.hi[j];
                        flipped = true;
                    } else {
                        feasible = false;
                    }
                }
                VarStatus::AtUpper if dj > tol => {
                    if self.lo[j].is_finite() {
                        self.status[j] = VarStatus::AtLower;
                        self.x[j] = self.lo[j];
                        flipped = true;
                    } else {
                        feasible = false;
                    }
                }
                VarStatus::Free if dj.abs() > tol => feasible = false,
                _ => {}
            }
        }
        if flipped {
            self.compute_primal();
        }
        feasible
    }

    fn dual(&mut self, opts: &LpOptions) -> DualOutcome {
        let ftol = T::feas_tol();
        let otol = T::opt_tol();
        let ptol = T::pivot_tol();
        let start_iter = self.iterations;
        loop {
            if self.iterations - start_iter > self.iteration_cap() {
                return DualOutcome::Stop(LpStatus::Numerical);
            }
            if self.out_of_time(opts) {
                return DualOutcome::Stop(LpStatus::Budget);
            }
            if self.lu.is_none() || self.since_refactor >= opts.refactor_every {
                self.refactor();
                self.compute_primal();
                self.compute_duals(false);
                if !self.make_dual_feasible() {
                    return DualOutcome::NeedPrimal;
                }
            }
            // leaving row: largest bound violation
            let mut r = NONE;
            let mut worst = ftol;
            for p in 0..self.m {
                let v = self.head[p];
                let viol = (self.lo[v] - self.x[v]).max(self.x[v] - self.hi[v]);
                if viol > worst {
                    worst = viol;
                    r = p;
                }
            }
            if r == NONE {
                return DualOutcome::Optimal;
            }
            let lv = self.head[r];
            let to_lower = self.x[lv] < self.lo[lv];

            // row r of B⁻¹N
            for v in self.buf_pos.iter_mut() {
                *v = T::zero();
            }
            self.buf_pos[r] = T::one();
            {
                let lu = self.lu.as_mut().expect("factorized");
                lu.btran(&mut self.buf_pos, &mut self.buf_row);
            }
            let n = self.n;
            for v in self.alpha_row[..n].iter_mut() {
                *v = T::zero();
            }
            for i in 0..self.m {
                let rho = self.buf_row[i];
                if rho == T::zero() {
                    continue;
                }
                for &(j, a) in &self.rows[i] {
                    self.alpha_row[j] = self.alpha_row[j] + rho * a;
                }
                self.alpha_row[n + i] = -rho;
            }
            for i in 0..self.m {
                if self.buf_row[i] == T::zero() {
                    self.alpha_row[n + i] = T::zero();
                }
            }

            let eligible = |s: &Self, j: usize| -> bool {
                if !s.can_move(j) {
                    return false;
                }
                let a = s.alpha_row[j];
                if a.abs() <= ptol {
                    return false;
                }
                match (s.status[j], to_lower) {
                    (VarStatus::Free, _) => true,
                    (VarStatus::AtLower, true) => a < T::zero(),
                    (VarStatus::AtUpper, true) => a > T::zero(),
                    (VarStatus::AtLower, false) => a > T::zero(),
                    (VarStatus::AtUpper, false) => a < T::zero(),
                    _ => false,
                }
            };
            let mut theta_max = T::infinity();
            for j in 0..n + self.m {
                if eligible(self, j) {
                    let t = (self.d[j].abs() + otol) / self.alpha_row[j].abs();
                    if t < theta_max {
                        theta_max = t;
                    }
                }
            }
            if !theta_max.is_finite() {
                return DualOutcome::Infeasible;
            }
            let mut q = NONE;
            let mut best_a = T::zero();
            for j in 0..n + self.m {
                if eligible(self, j) {
                    let a = self.alpha_row[j].abs();
                    if self.d[j].abs() / a <= theta_max && a > best_a {
                        best_a = a;
                        q = j;
                    }
                }
            }
            if q == NONE {
                return DualOutcome::Infeasible;
            }

            self.ftran_col(q);
            let arq = self.alpha[r];
            if arq.abs() <= ptol {
                self.lu = None;
                continue;
            }
            // dual update
            let theta_d = self.d[q] / self.alpha_row[q];
            for j in 0..n + self.m {
                if self.status[j] != VarStatus::Basic {
                    self.d[j] = self.d[j] - theta_d * self.alpha_row[j];
                }
            }
            self.d[q] = T::zero();
            self.d[lv] = -theta_d;
            // primal update
            let target = if to_lower { self.lo[lv] } else { self.hi[lv] };
            let dx = (self.x[lv] - target) / arq;
            self.x[q] = self.x[q] + dx;
            for p in 0..self.m {
                let v = self.head[p];
                self.x[v] = self.x[v] - self.alpha[p] * dx;
            }
            self.iterations += 1;
            let to = if to_lower { VarStatus::AtLower } else { VarStatus::AtUpper };
            self.pivot(q, r, to);
        }
    }

    /// Solves from the current basis.
    pub fn solve(&mut self, opts: &LpOptions) -> LpStatus {
        for attempt in 0..4 {
            self.refactor();
            self.compute_primal();
            let primal_ok = self.max_primal_infeas() <= T::feas_tol();
            let mut status = None;
            if !primal_ok {
                self.compute_duals(false);
                if self.make_dual_feasible() {
                    match self.dual(opts) {
                        DualOutcome::Optimal => {}
                        DualOutcome::Infeasible => status = Some(LpStatus::Infeasible),
                        DualOutcome::NeedPrimal => {}
                        DualOutcome::Stop(s) => return s,
                    }
                }
            }
            let st = match status {
                Some(s) => s,
                None => self.primal(opts),
            };
            match st {
                LpStatus::Optimal | LpStatus::Infeasible => {
                    // verify on a fresh factorization
                    self.refactor();
                    self.compute_primal();
                    let infeas = self.max_primal_infeas();
                    let ok = match st {
                        LpStatus::Optimal => infeas <= T::feas_tol() * T::of(10.0) && {
                            self.compute_duals(false);
                            self.dual_infeas() <= T::opt_tol() * T::of(10.0)
                        },
                        _ => infeas > T::feas_tol(),
                    };
                    if ok {
                        return st;
                    }
                    log::debug!("simplex verification failed (attempt {attempt}), resolving");
                    if st == LpStatus::Infeasible {
                        continue;
                    }
                }
                other => return other,
            }
        }
        LpStatus::Numerical
    }

    fn dual_infeas(&self) -> T {
        let mut worst = T::zero();
        for j in 0..self.n + self.m {
            if !self.can_move(j) {
                continue;
            }
            let dj = self.d[j];
            let v = match self.status[j] {
                VarStatus::AtLower => -dj,
                VarStatus::AtUpper => dj,
                VarStatus::Free => dj.abs(),
                VarStatus::Basic => T::zero(),
            };
            worst = worst.max(v);
        }
        worst
    }

    /// Structural values in original units.
    pub fn values(&self) -> Vec<T> {
        (0..self.n).map(|j| self.x[j] * self.col_scale[j]).collect()
    }

    pub fn objective(&self) -> T {
        let x = self.values();
        self.obj_orig.iter().zip(&x).map(|(&c, &v)| c * v).sum()
    }

    /// Row duals in the problem's own sense (valid after an optimal solve).
    pub fn duals(&mut self) -> Vec<T> {
        self.compute_duals(false);
        (0..self.m)
            .map(|r| self.sign * self.y[r] * self.row_scale[r] / self.obj_scale)
            .collect()
    }
}

fn compute_scaling<T: Scalar>(rows: &[Vec<(usize, T)>], cols: &[Vec<(usize, T)>], n: usize) -> (Vec<T>, Vec<T>) {
    let m = rows.len();
    let mut rs = vec![T::one(); m];
    let mut cs = vec![T::one(); n];
    for _ in 0..6 {
        for (r, row) in rows.iter().enumerate() {
            let (mut mx, mut mn) = (T::zero(), T::infinity());
            for &(j, a) in row {
                let v = (a * cs[j]).abs();
                mx = mx.max(v);
                mn = mn.min(v);
            }
            if mx > T::zero() {
                rs[r] = T::one() / (mx * mn).sqrt();
            }
        }
        for (j, col) in cols.iter().enumerate() {
            let (mut mx, mut mn) = (T::zero(), T::infinity());
            for &(r, a) in col {
                let v = (a * rs[r]).abs();
                mx = mx.max(v);
                mn = mn.min(v);
            }
            if mx > T::zero() {
                cs[j] = T::one() / (mx * mn).sqrt();
            }
        }
    }
    (rs.into_iter().map(pow2_round).collect(), cs.into_iter().map(pow2_round).collect())
}

/// Solves an LP from the slack basis.
pub fn solve_lp<T: Scalar>(p: &LpProblem<T>) -> Solution<T> {
    solve_lp_with(p, &LpOptions::default(), None)
}

/// Solves an LP, optionally warm-started from `basis`.
pub fn solve_lp_with<T: Scalar>(p: &LpProblem<T>, opts: &LpOptions, basis: Option<&Basis>) -> Solution<T> {
    let started = Instant::now();
    if let Err(e) = p.validate() {
        log::warn!("rejecting malformed LP: {e}");
        return Solution::without_point(Status::NumericalFailure);
    }
    if (0..p.num_vars()).any(|j| p.lower[j] > p.upper[j]) {
        return Solution::without_point(Status::Infeasible);
    }
    for row in &p.rows {
        if row.coeffs.iter().all(|e| e.1 == T::zero()) {
            let (l, h) = row.range();
            if l > T::feas_tol() || h < -T::feas_tol() {
                return Solution::without_point(Status::Infeasible);
            }
        }
    }
    let mut s = Simplex::new(p);
    if let Some(b) = basis {
        s.set_basis(b);
    }
    let st = s.solve(opts);
    let mut sol = Solution::without_point(match st {
        LpStatus::Optimal => Status::Optimal,
        LpStatus::Infeasible => Status::Infeasible,
        LpStatus::Unbounded => Status::Unbounded,
        LpStatus::Budget => Status::BudgetNoIncumbent,
        LpStatus::Numerical => Status::NumericalFailure,
    });
    if st == LpStatus::Optimal {
        sol.x = s.values();
        let obj = s.objective();
        sol.objective = Some(obj);
        sol.best_bound = Some(obj);
        sol.duals = s.duals();
    }
    sol.basis = Some(s.basis());
    sol.stats = SolveStats {
        iterations: s.iterations,
        nodes: 0,
        elapsed: started.elapsed(),
        bound_trace: Vec::new(),
    };
    sol
}

/// Relation helper used by tests and dumps.
pub(crate) fn relation_symbol(r: Relation) -> &'static str {
    match r {
        Relation::Le => "<=",
        Relation::Eq => "=",
        Relation::Ge => ">=",
    }
}
