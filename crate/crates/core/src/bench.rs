//! Benchmark suites over diagonal print patterns.

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use crate::encoder::{encode, EncodeError};
use crate::scenario::{diagonal_pattern, BoundWindow, BoundaryPolicy, Scenario, TemperatureField};
use crate::milp::MilpModel;
use crate::solver::{self, SolveOptions, SolveResult, SolveStatus, SolverError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    /// Loose bounds `[0, 200]`.
    Table1,
    /// Tight bounds `[65, 85]`.
    Table2,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Table1 => "table1",
            Suite::Table2 => "table2",
        }
    }

    pub fn bounds(self) -> (f64, f64) {
        match self {
            Suite::Table1 => (0.0, 200.0),
            Suite::Table2 => (65.0, 85.0),
        }
    }

    /// Known optimal costs per grid size; `None` where the instance is infeasible.
    pub fn reference_costs(self) -> [(usize, Option<f64>); 4] {
        match self {
            Suite::Table1 => [(2, Some(2.0)), (3, Some(4.0)), (5, Some(8.0)), (7, Some(14.0))],
            Suite::Table2 => [(2, Some(6.0)), (3, Some(7.0)), (5, Some(9.0)), (7, None)],
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table1" => Ok(Suite::Table1),
            "table2" => Ok(Suite::Table2),
            other => Err(format!("unknown suite `{other}` (expected table1 or table2)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchInstance {
    pub size: usize,
    pub horizon: usize,
    pub scenario: Scenario,
}

/// The diagonal instance of side `n` with the suite's bounds.
pub fn diagonal_instance(suite: Suite, n: usize, horizon: usize) -> BenchInstance {
    let (lower, upper) = suite.bounds();
    BenchInstance {
        size: n,
        horizon,
        scenario: Scenario {
            rows: n,
            cols: n,
            pattern: diagonal_pattern(n),
            initial_temp: TemperatureField::uniform(n, n, 75.0),
            temp_lower: lower,
            temp_upper: upper,
            alpha: 1.0,
            heat_input: 1.0,
            boundary_policy: BoundaryPolicy::OneSided,
            bound_window: BoundWindow::BeforeHorizon,
            horizon: Some(horizon),
        },
    }
}

pub fn suite_instances(suite: Suite) -> Vec<BenchInstance> {
    [(2, 10), (3, 10), (5, 10), (7, 15)]
        .into_iter()
        .map(|(n, d)| diagonal_instance(suite, n, d))
        .collect()
}

#[derive(Debug, Clone)]
pub enum Backend {
    BuiltIn,
    External(String),
}

impl Backend {
    pub fn label(&self) -> &str {
        match self {
            Backend::BuiltIn => "builtin",
            Backend::External(_) => "external",
        }
    }

    pub fn solve(&self, model: &MilpModel, options: &SolveOptions) -> Result<SolveResult, SolverError> {
        match self {
            Backend::BuiltIn => solver::solve(model, options),
            Backend::External(cmd) => solver::solve_external(model, cmd, options),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub suite: &'static str,
    pub size: usize,
    pub horizon: usize,
    pub policy: BoundaryPolicy,
    pub window: BoundWindow,
    pub solver: String,
    pub status: SolveStatus,
    pub cost: Option<f64>,
    pub best_bound: f64,
    pub encode_secs: f64,
    pub solve_secs: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

pub fn run_instance(
    suite: Suite,
    instance: &BenchInstance,
    backend: &Backend,
    options: &SolveOptions,
) -> Result<BenchRow, BenchError> {
    let t0 = Instant::now();
    let (model, _) = encode(&instance.scenario, instance.horizon)?;
    let encode_secs = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let result = backend.solve(&model, options)?;
    let solve_secs = t1.elapsed().as_secs_f64();
    Ok(BenchRow {
        suite: suite.name(),
        size: instance.size,
        horizon: instance.horizon,
        policy: instance.scenario.boundary_policy,
        window: instance.scenario.bound_window,
        solver: backend.label().to_string(),
        status: result.status,
        cost: result.objective.map(f64::round),
        best_bound: result.best_bound,
        encode_secs,
        solve_secs,
    })
}

fn status_str(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Optimal => "optimal",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::TimedOut => "timed_out",
        SolveStatus::BoundOnly => "bound_only",
    }
}

fn policy_str(p: BoundaryPolicy) -> &'static str {
    match p {
        BoundaryPolicy::Zero => "zero",
        BoundaryPolicy::OneSided => "one_sided",
    }
}

fn window_str(w: BoundWindow) -> &'static str {
    match w {
        BoundWindow::BeforeHorizon => "before_horizon",
        BoundWindow::ThroughHorizon => "through_horizon",
    }
}

/// Cost column: the optimum, or `NF` when no feasible plan was found.
fn cost_cell(row: &BenchRow) -> String {
    match (row.status, row.cost) {
        (SolveStatus::Optimal, Some(c)) => format!("{c}"),
        (SolveStatus::TimedOut, Some(c)) => format!("<={c}"),
        _ => "NF".to_string(),
    }
}

pub fn render_markdown(rows: &[BenchRow]) -> String {
    let mut out = String::from(
        "| suite | n | d | policy | window | solver | status | m | encode s | solve s |\n\
         |---|---|---|---|---|---|---|---|---|---|\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} | {:.3} | {:.3} |",
            r.suite,
            r.size,
            r.horizon,
            policy_str(r.policy),
            window_str(r.window),
            r.solver,
            status_str(r.status),
            cost_cell(r),
            r.encode_secs,
            r.solve_secs
        );
    }
    out
}

pub fn render_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("suite,n,d,policy,window,solver,status,m,encode_s,solve_s\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{:.3},{:.3}",
            r.suite,
            r.size,
            r.horizon,
            policy_str(r.policy),
            window_str(r.window),
            r.solver,
            status_str(r.status),
            cost_cell(r),
            r.encode_secs,
            r.solve_secs
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_have_expected_shapes() {
        let inst = suite_instances(Suite::Table2);
        let sizes: Vec<_> = inst.iter().map(|i| (i.size, i.horizon)).collect();
        assert_eq!(sizes, vec![(2, 10), (3, 10), (5, 10), (7, 15)]);
        assert_eq!(inst[0].scenario.temp_lower, 65.0);
        assert_eq!(inst[3].scenario.pattern.count(), 7);
        for i in &inst {
            i.scenario.validate().unwrap();
        }
        assert_eq!("table1".parse::<Suite>().unwrap(), Suite::Table1);
        assert!("table3".parse::<Suite>().is_err());
    }

    #[test]
    fn renders_rows() {
        let row = BenchRow {
            suite: "table1",
            size: 2,
            horizon: 10,
            policy: BoundaryPolicy::OneSided,
            window: BoundWindow::BeforeHorizon,
            solver: "builtin".into(),
            status: SolveStatus::Optimal,
            cost: Some(2.0),
            best_bound: 2.0,
            encode_secs: 0.0012,
            solve_secs: 0.5,
        };
        let csv = render_csv(std::slice::from_ref(&row));
        assert_eq!(csv.lines().nth(1).unwrap(), "table1,2,10,one_sided,before_horizon,builtin,optimal,2,0.001,0.500");
        let mut nf = row.clone();
        nf.status = SolveStatus::BoundOnly;
        nf.cost = None;
        assert!(render_markdown(&[nf]).contains("| NF |"));
    }
}
