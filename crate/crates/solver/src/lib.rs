//! Linear and mixed-binary programming from scratch.
//!
//! [`solve_lp`] runs a bounded-variable revised simplex on a sparse LU basis
//! factorization; [`solve_milp`] wraps it in best-first branch-and-bound with
//! SOS1 branching; [`solve_with_lazy_cuts`] adds an outer loop that asks an
//! oracle for violated rows at each incumbent.

mod error;
mod lazy;
mod lpfile;
mod lu;
mod milp;
mod problem;
mod scalar;
mod simplex;

pub use error::ProblemError;
pub use lazy::{solve_with_lazy_cuts, LazyOptions};
pub use lpfile::write_lp;
pub use milp::{solve_milp, MilpOptions};
pub use problem::{Basis, LpProblem, MilpProblem, Relation, Row, Sense, SolveStats, Solution, Status, VarStatus};
pub use scalar::Scalar;
pub use simplex::{solve_lp, solve_lp_with, LpOptions};
