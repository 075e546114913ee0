//! Exact MILP solving: LP relaxations by a revised simplex, branch-and-bound on
//! top, and a bridge to external solvers through LP/solution files.

mod bnb;
mod external;
mod lu;
mod propagate;
mod simplex;

use std::time::Duration;

use thiserror::Error;

use crate::milp::{Assignment, MilpError, MilpModel, INTEGER_TOLERANCE};

pub use bnb::solve;
pub use external::solve_external;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("numerical trouble in simplex: {0}")]
    Numerical(String),
    #[error("the LP relaxation is unbounded")]
    Unbounded,
    #[error("external solver failed ({status}): {stderr}")]
    CommandFailed { status: String, stderr: String },
    #[error("external solver I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Solution(#[from] MilpError),
    #[error("external solution rejected: {0}")]
    SolutionRejected(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    /// Stopped at a limit holding an incumbent.
    TimedOut,
    /// Stopped at a limit with only a lower bound.
    BoundOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BranchingRule {
    #[default]
    MostFractional,
    FirstFractional,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub time_limit: Duration,
    pub integer_tolerance: f64,
    pub node_limit: Option<u64>,
    pub branching_rule: BranchingRule,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            time_limit: Duration::from_secs(60),
            integer_tolerance: INTEGER_TOLERANCE,
            node_limit: None,
            branching_rule: BranchingRule::default(),
        }
    }
}

impl SolveOptions {
    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        assert!(!limit.is_zero(), "time limit must be positive");
        self.time_limit = limit;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    pub nodes: u64,
    pub simplex_iterations: u64,
    pub wall_time: Duration,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub assignment: Option<Assignment>,
    pub objective: Option<f64>,
    pub best_bound: f64,
    pub stats: SolveStats,
}

impl SolveResult {
    /// Equality on everything except wall time.
    pub fn same_outcome(&self, other: &SolveResult) -> bool {
        self.status == other.status
            && self.assignment == other.assignment
            && self.objective == other.objective
            && self.best_bound.to_bits() == other.best_bound.to_bits()
            && self.stats.nodes == other.stats.nodes
            && self.stats.simplex_iterations == other.stats.simplex_iterations
    }
}

/// Outcome of solving the continuous relaxation.
#[derive(Debug, Clone, PartialEq)]
pub enum LpRelaxation {
    Optimal { values: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

/// Solves the model with integrality dropped.
pub fn lp_relax(model: &MilpModel) -> Result<LpRelaxation, SolverError> {
    let mut lp = simplex::Simplex::new(model);
    Ok(match lp.solve(None)? {
        simplex::LpStatus::Optimal => LpRelaxation::Optimal {
            values: lp.values().to_vec(),
            objective: lp.objective(),
        },
        simplex::LpStatus::Infeasible => LpRelaxation::Infeasible,
        simplex::LpStatus::Unbounded => LpRelaxation::Unbounded,
        simplex::LpStatus::TimedOut => unreachable!("no deadline given"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{LinExpr, Relation, Sense, VarKind};

    #[test]
    fn relaxation_examples() {
        let mut m = MilpModel::new();
        let x = m.add_variable("x", VarKind::Integer, 0.0, f64::INFINITY).unwrap();
        m.add_constraint("c", LinExpr::new().term(x, 1.0), Relation::Ge, 1.5).unwrap();
        m.set_objective(Sense::Minimize, LinExpr::new().term(x, 1.0)).unwrap();
        match lp_relax(&m).unwrap() {
            LpRelaxation::Optimal { values, objective } => {
                assert!((values[0] - 1.5).abs() < 1e-9);
                assert!((objective - 1.5).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }

        let mut m = MilpModel::new();
        let x = m.add_variable("x", VarKind::Real, 0.0, f64::INFINITY).unwrap();
        m.add_constraint("lo", LinExpr::new().term(x, 1.0), Relation::Ge, 1.0).unwrap();
        m.add_constraint("hi", LinExpr::new().term(x, 1.0), Relation::Le, 0.0).unwrap();
        assert_eq!(lp_relax(&m).unwrap(), LpRelaxation::Infeasible);

        let mut m = MilpModel::new();
        let x = m.add_variable("x", VarKind::Real, 0.0, f64::INFINITY).unwrap();
        m.set_objective(Sense::Minimize, LinExpr::new().term(x, -1.0)).unwrap();
        assert_eq!(lp_relax(&m).unwrap(), LpRelaxation::Unbounded);
    }
}
