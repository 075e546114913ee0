//! Solver-agnostic MILP models, CPLEX LP-format output and solution files.

mod lp_format;
mod model;
mod solution;

#[cfg(test)]
pub(crate) mod lp_reader;

pub use lp_format::write_lp;
pub use model::{
    ConstrRef, Constraint, LinExpr, MilpModel, Relation, Sense, VarKind, VarRef, Variable,
};
pub use solution::{parse_solution, write_solution, Assignment, Violation};

use thiserror::Error;

/// Integrality tolerance used throughout.
pub const INTEGER_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum MilpError {
    #[error("duplicate variable name `{0}`")]
    DuplicateVariable(String),
    #[error("duplicate constraint name `{0}`")]
    DuplicateConstraint(String),
    #[error("variable `{name}` has inverted bounds [{lower}, {upper}]")]
    InvertedBounds { name: String, lower: f64, upper: f64 },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("only minimization is supported")]
    UnsupportedSense,
    #[error("solution line {line}: cannot parse `{text}`")]
    BadSolutionLine { line: usize, text: String },
}
