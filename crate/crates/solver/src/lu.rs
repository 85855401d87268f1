//! Sparse LU factorization of a simplex basis with product-form updates.
//!
//! Columns are eliminated left-looking in order of increasing length; the
//! pivot of each column is its largest remaining entry. Columns that turn out
//! dependent are reported so the caller can swap in row logicals.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::scalar::Scalar;

const NONE: usize = usize::MAX;

struct Eta<T> {
    pos: usize,
    pivot: T,
    entries: Vec<(usize, T)>,
}

pub(crate) struct LuFactor<T> {
    m: usize,
    piv_row: Vec<usize>,
    piv_pos: Vec<usize>,
    u_diag: Vec<T>,
    l_start: Vec<usize>,
    l_row: Vec<usize>,
    l_val: Vec<T>,
    u_start: Vec<usize>,
    u_step: Vec<usize>,
    u_val: Vec<T>,
    etas: Vec<Eta<T>>,
    work: Vec<T>,
}

/// A basis position whose column was dependent, and the row whose logical
/// (the column `-e_row`) now occupies it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Replacement {
    pub pos: usize,
    pub row: usize,
}

impl<T: Scalar> LuFactor<T> {
    /// Factorizes the `m × m` matrix whose column at basis position `p` is `cols[p]`.
    pub fn factorize(m: usize, cols: &[Vec<(usize, T)>]) -> (Self, Vec<Replacement>) {
        debug_assert_eq!(cols.len(), m);
        let mut f = LuFactor {
            m,
            piv_row: Vec::with_capacity(m),
            piv_pos: Vec::with_capacity(m),
            u_diag: Vec::with_capacity(m),
            l_start: vec![0],
            l_row: Vec::new(),
            l_val: Vec::new(),
            u_start: vec![0],
            u_step: Vec::new(),
            u_val: Vec::new(),
            etas: Vec::new(),
            work: vec![T::zero(); m],
        };
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&p| (cols[p].len(), p));

        let mut row_step = vec![NONE; m];
        let mut w = vec![T::zero(); m];
        let mut touched = vec![false; m];
        let mut pattern: Vec<usize> = Vec::new();
        let mut in_heap = vec![false; m];
        let mut heap: BinaryHeap<Reverse<usize>> = BinaryHeap::new();
        let mut singular_pos = Vec::new();
        let drop = T::epsilon() * T::of(1e-3);

        for &p in &order {
            for &(r, v) in &cols[p] {
                if !touched[r] {
                    touched[r] = true;
                    pattern.push(r);
                }
                w[r] = w[r] + v;
                let k = row_step[r];
                if k != NONE && !in_heap[k] {
                    in_heap[k] = true;
                    heap.push(Reverse(k));
                }
            }
            while let Some(Reverse(k)) = heap.pop() {
                in_heap[k] = false;
                let v = w[f.piv_row[k]];
                if v == T::zero() {
                    continue;
                }
                for idx in f.l_start[k]..f.l_start[k + 1] {
                    let r = f.l_row[idx];
                    if !touched[r] {
                        touched[r] = true;
                        pattern.push(r);
                    }
                    w[r] = w[r] - f.l_val[idx] * v;
                    let k2 = row_step[r];
                    if k2 != NONE && !in_heap[k2] {
                        in_heap[k2] = true;
                        heap.push(Reverse(k2));
                    }
                }
            }
            let mut best = NONE;
            let mut best_abs = T::zero();
            for &r in &pattern {
                if row_step[r] == NONE {
                    let a = w[r].abs();
                    if a > best_abs || (a == best_abs && best != NONE && r < best) {
                        best_abs = a;
                        best = r;
                    }
                }
            }
            if best == NONE || best_abs <= T::singular_tol() {
                singular_pos.push(p);
            } else {
                let k = f.piv_row.len();
                let piv = w[best];
                for &r in &pattern {
                    let v = w[r];
                    if v.abs() <= drop || r == best {
                        continue;
                    }
                    if row_step[r] == NONE {
                        f.l_row.push(r);
                        f.l_val.push(v / piv);
                    } else {
                        f.u_step.push(row_step[r]);
                        f.u_val.push(v);
                    }
                }
                f.l_start.push(f.l_row.len());
                f.u_start.push(f.u_step.len());
                f.piv_row.push(best);
                f.piv_pos.push(p);
                f.u_diag.push(piv);
                row_step[best] = k;
            }
            for &r in &pattern {
                w[r] = T::zero();
                touched[r] = false;
            }
            pattern.clear();
        }

        let mut repl = Vec::new();
        if !singular_pos.is_empty() {
            let free_rows: Vec<usize> = (0..m).filter(|&r| row_step[r] == NONE).collect();
            for (pos, row) in singular_pos.into_iter().zip(free_rows) {
                let k = f.piv_row.len();
                f.l_start.push(f.l_row.len());
                f.u_start.push(f.u_step.len());
                f.piv_row.push(row);
                f.piv_pos.push(pos);
                f.u_diag.push(-T::one());
                row_step[row] = k;
                repl.push(Replacement { pos, row });
            }
        }
        debug_assert_eq!(f.piv_row.len(), m);
        (f, repl)
    }

    /// Solves `B x = b`. `b` is indexed by row and is clobbered; `x` by basis position.
    pub fn ftran(&self, b: &mut [T], x: &mut [T]) {
        let zero = T::zero();
        for k in 0..self.m {
            let v = b[self.piv_row[k]];
            if v != zero {
                for idx in self.l_start[k]..self.l_start[k + 1] {
                    let r = self.l_row[idx];
                    b[r] = b[r] - self.l_val[idx] * v;
                }
            }
        }
        for k in (0..self.m).rev() {
            let z = b[self.piv_row[k]] / self.u_diag[k];
            if z != zero {
                for idx in self.u_start[k]..self.u_start[k + 1] {
                    let r = self.piv_row[self.u_step[idx]];
                    b[r] = b[r] - self.u_val[idx] * z;
                }
            }
            x[self.piv_pos[k]] = z;
        }
        for eta in &self.etas {
            let xp = x[eta.pos] / eta.pivot;
            x[eta.pos] = xp;
            if xp != zero {
                for &(i, a) in &eta.entries {
                    x[i] = x[i] - a * xp;
                }
            }
        }
    }

    /// Solves `Bᵀ y = c`. `c` is indexed by basis position and is clobbered; `y` by row.
    pub fn btran(&mut self, c: &mut [T], y: &mut [T]) {
        for eta in self.etas.iter().rev() {
            let mut s = c[eta.pos];
            for &(i, a) in &eta.entries {
                s = s - a * c[i];
            }
            c[eta.pos] = s / eta.pivot;
        }
        let g = &mut self.work;
        for k in 0..self.m {
            let mut v = c[self.piv_pos[k]];
            for idx in self.u_start[k]..self.u_start[k + 1] {
                v = v - self.u_val[idx] * g[self.u_step[idx]];
            }
            g[k] = v / self.u_diag[k];
        }
        for k in 0..self.m {
            y[self.piv_row[k]] = g[k];
        }
        for k in (0..self.m).rev() {
            let mut s = T::zero();
            for idx in self.l_start[k]..self.l_start[k + 1] {
                s = s + self.l_val[idx] * y[self.l_row[idx]];
            }
            let r = self.piv_row[k];
            y[r] = y[r] - s;
        }
    }

    /// Records the replacement of the column at `pos` by one whose FTRAN image is `alpha`.
    pub fn push_eta(&mut self, pos: usize, alpha: &[T]) {
        let drop = T::epsilon() * T::of(1e-3);
        let entries = alpha
            .iter()
            .enumerate()
            .filter(|&(i, a)| i != pos && a.abs() > drop)
            .map(|(i, &a)| (i, a))
            .collect();
        self.etas.push(Eta {
            pos,
            pivot: alpha[pos],
            entries,
        });
    }
}
