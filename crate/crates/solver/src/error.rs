use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("row {row} references variable {var} but the problem has {nvars} variables")]
    VarOutOfRange { row: usize, var: usize, nvars: usize },
    #[error("row {row} has a non-finite coefficient")]
    NonFiniteCoeff { row: usize },
    #[error("row {row} has a NaN right-hand side")]
    NanRhs { row: usize },
    #[error("variable {var} has lower bound {lo} above upper bound {hi}")]
    EmptyBounds { var: usize, lo: f64, hi: f64 },
    #[error("objective coefficient of variable {var} is not finite")]
    NonFiniteObjective { var: usize },
    #[error("binary variable {var} must have bounds within [0, 1]")]
    BadBinary { var: usize },
    #[error("SOS1 group {group} references variable {var} which is not binary")]
    BadSosMember { group: usize, var: usize },
    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    Dimension {
        what: &'static str,
        got: usize,
        expected: usize,
    },
}
