use std::time::Duration;

use crate::error::ProblemError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// One sparse linear constraint `coeffs · x (rel) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row<T> {
    pub coeffs: Vec<(usize, T)>,
    pub relation: Relation,
    pub rhs: T,
}

impl<T: Scalar> Row<T> {
    pub fn new(coeffs: Vec<(usize, T)>, relation: Relation, rhs: T) -> Self {
        Row { coeffs, relation, rhs }
    }

    pub fn le(coeffs: Vec<(usize, T)>, rhs: T) -> Self {
        Self::new(coeffs, Relation::Le, rhs)
    }

    pub fn ge(coeffs: Vec<(usize, T)>, rhs: T) -> Self {
        Self::new(coeffs, Relation::Ge, rhs)
    }

    pub fn eq(coeffs: Vec<(usize, T)>, rhs: T) -> Self {
        Self::new(coeffs, Relation::Eq, rhs)
    }

    pub fn activity(&self, x: &[T]) -> T {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates this row (0 when satisfied).
    pub fn violation(&self, x: &[T]) -> T {
        let a = self.activity(x);
        let zero = T::zero();
        match self.relation {
            Relation::Le => (a - self.rhs).max(zero),
            Relation::Ge => (self.rhs - a).max(zero),
            Relation::Eq => (a - self.rhs).abs(),
        }
    }

    /// Row bounds `lo ≤ coeffs · x ≤ hi`.
    pub fn range(&self) -> (T, T) {
        match self.relation {
            Relation::Le => (T::neg_infinity(), self.rhs),
            Relation::Ge => (self.rhs, T::infinity()),
            Relation::Eq => (self.rhs, self.rhs),
        }
    }
}

/// Sparse row-oriented linear program with variable bounds.
#[derive(Debug, Clone)]
pub struct LpProblem<T> {
    pub sense: Sense,
    pub objective: Vec<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub rows: Vec<Row<T>>,
    /// Optional names used by the LP-file dump.
    pub var_names: Vec<String>,
    pub row_names: Vec<String>,
}

impl<T: Scalar> LpProblem<T> {
    pub fn new(sense: Sense) -> Self {
        LpProblem {
            sense,
            objective: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            rows: Vec::new(),
            var_names: Vec::new(),
            row_names: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Adds a variable and returns its index.
    pub fn add_var(&mut self, obj: T, lo: T, hi: T) -> usize {
        self.objective.push(obj);
        self.lower.push(lo);
        self.upper.push(hi);
        self.objective.len() - 1
    }

    pub fn add_named_var(&mut self, name: impl Into<String>, obj: T, lo: T, hi: T) -> usize {
        let j = self.add_var(obj, lo, hi);
        if self.var_names.len() < j {
            self.var_names.resize_with(j, String::new);
        }
        self.var_names.push(name.into());
        j
    }

    pub fn set_var_name(&mut self, j: usize, name: impl Into<String>) {
        if self.var_names.len() <= j {
            self.var_names.resize_with(j + 1, String::new);
        }
        self.var_names[j] = name.into();
    }

    pub fn add_row(&mut self, row: Row<T>) -> usize {
        self.rows.push(row);
        self.rows.len() - 1
    }

    pub fn add_named_row(&mut self, name: impl Into<String>, row: Row<T>) -> usize {
        let r = self.add_row(row);
        if self.row_names.len() < r {
            self.row_names.resize_with(r, String::new);
        }
        self.row_names.push(name.into());
        r
    }

    pub fn set_bounds(&mut self, j: usize, lo: T, hi: T) {
        self.lower[j] = lo;
        self.upper[j] = hi;
    }

    pub fn var_name(&self, j: usize) -> String {
        match self.var_names.get(j) {
            Some(s) if !s.is_empty() => s.clone(),
            _ => format!("x{j}"),
        }
    }

    pub fn row_name(&self, r: usize) -> String {
        match self.row_names.get(r) {
            Some(s) if !s.is_empty() => s.clone(),
            _ => format!("r{r}"),
        }
    }

    pub fn objective_value(&self, x: &[T]) -> T {
        self.objective.iter().zip(x).map(|(&c, &v)| c * v).sum()
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[T]) -> T {
        let mut worst = T::zero();
        for j in 0..self.num_vars() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        for row in &self.rows {
            worst = worst.max(row.violation(x));
        }
        worst
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        let n = self.num_vars();
        for (what, len) in [("lower", self.lower.len()), ("upper", self.upper.len())] {
            if len != n {
                return Err(ProblemError::Dimension {
                    what,
                    got: len,
                    expected: n,
                });
            }
        }
        for j in 0..n {
            if !self.objective[j].is_finite() {
                return Err(ProblemError::NonFiniteObjective { var: j });
            }
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] > self.upper[j] {
                return Err(ProblemError::EmptyBounds {
                    var: j,
                    lo: self.lower[j].to_f64_lossy(),
                    hi: self.upper[j].to_f64_lossy(),
                });
            }
        }
        for (r, row) in self.rows.iter().enumerate() {
            if row.rhs.is_nan() {
                return Err(ProblemError::NanRhs { row: r });
            }
            for &(j, a) in &row.coeffs {
                if j >= n {
                    return Err(ProblemError::VarOutOfRange { row: r, var: j, nvars: n });
                }
                if !a.is_finite() {
                    return Err(ProblemError::NonFiniteCoeff { row: r });
                }
            }
        }
        Ok(())
    }
}

/// An LP plus binary marks and SOS1 groups (at most one member equal to one).
#[derive(Debug, Clone)]
pub struct MilpProblem<T> {
    pub lp: LpProblem<T>,
    pub binaries: Vec<usize>,
    pub sos1: Vec<Vec<usize>>,
}

impl<T: Scalar> MilpProblem<T> {
    pub fn new(lp: LpProblem<T>) -> Self {
        MilpProblem {
            lp,
            binaries: Vec::new(),
            sos1: Vec::new(),
        }
    }

    pub fn add_binary(&mut self, obj: T) -> usize {
        let j = self.lp.add_var(obj, T::zero(), T::one());
        self.binaries.push(j);
        j
    }

    pub fn mark_binary(&mut self, j: usize) {
        self.binaries.push(j);
    }

    pub fn add_sos1(&mut self, members: Vec<usize>) {
        self.sos1.push(members);
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        self.lp.validate()?;
        let n = self.lp.num_vars();
        let mut is_bin = vec![false; n];
        for &j in &self.binaries {
            if j >= n {
                return Err(ProblemError::VarOutOfRange { row: usize::MAX, var: j, nvars: n });
            }
            if self.lp.lower[j] < T::zero() || self.lp.upper[j] > T::one() {
                return Err(ProblemError::BadBinary { var: j });
            }
            is_bin[j] = true;
        }
        for (g, members) in self.sos1.iter().enumerate() {
            for &j in members {
                if j >= n || !is_bin[j] {
                    return Err(ProblemError::BadSosMember { group: g, var: j });
                }
            }
        }
        Ok(())
    }

    /// Whether every binary of `x` is within tolerance of 0 or 1.
    pub fn is_integral(&self, x: &[T]) -> bool {
        self.binaries.iter().all(|&j| {
            let v = x[j];
            v.min(T::one() - v).abs() <= T::int_tol()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    BudgetWithIncumbent,
    BudgetNoIncumbent,
    NumericalFailure,
}

impl Status {
    pub fn has_solution(self) -> bool {
        matches!(self, Status::Optimal | Status::BudgetWithIncumbent)
    }
}

/// Position of a variable relative to the basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable held at zero.
    Free,
}

/// A simplex basis: statuses of the structural columns then of the row logicals.
///
/// Rows appended after the basis was taken are treated as basic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    pub cols: Vec<VarStatus>,
    pub rows: Vec<VarStatus>,
}

#[derive(Debug, Clone, Default)]
pub struct SolveStats {
    pub iterations: usize,
    pub nodes: usize,
    pub elapsed: Duration,
    /// Global best bound after every processed node (branch-and-bound only).
    pub bound_trace: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Solution<T> {
    pub status: Status,
    /// Variable values; empty unless a point is available.
    pub x: Vec<T>,
    pub objective: Option<T>,
    /// Best proven bound on the optimum in the problem's own sense.
    pub best_bound: Option<T>,
    /// Row duals of the final LP (in the problem's own sense), when available.
    pub duals: Vec<T>,
    pub basis: Option<Basis>,
    pub stats: SolveStats,
}

impl<T: Scalar> Solution<T> {
    pub fn without_point(status: Status) -> Self {
        Solution {
            status,
            x: Vec::new(),
            objective: None,
            best_bound: None,
            duals: Vec::new(),
            basis: None,
            stats: SolveStats::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_violation_by_relation() {
        let x = [1.0, 2.0];
        let c = vec![(0, 1.0), (1, 1.0)];
        assert_eq!(Row::le(c.clone(), 2.5).violation(&x), 0.5);
        assert_eq!(Row::ge(c.clone(), 2.5).violation(&x), 0.0);
        assert_eq!(Row::eq(c, 4.0).violation(&x), 1.0);
    }

    #[test]
    fn validate_rejects_bad_bounds_and_indices() {
        let mut lp = LpProblem::<f64>::new(Sense::Maximize);
        let j = lp.add_var(1.0, 0.0, 1.0);
        assert!(lp.validate().is_ok());
        lp.set_bounds(j, 2.0, 1.0);
        assert!(lp.validate().is_err());
        lp.set_bounds(j, 0.0, 1.0);
        lp.add_row(Row::le(vec![(3, 1.0)], 1.0));
        assert!(lp.validate().is_err());
    }
}
