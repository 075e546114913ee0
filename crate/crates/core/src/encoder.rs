//! Builds the planning MILP for a scenario and a horizon `d`.
//!
//! Variables, for every cell `(i, j)` and instant `k = 0..=d`:
//!
//! * `T_i_j_k` (real): temperature of the cell at instant `k`;
//! * `u_i_j_k` (binary): the nozzle prints the cell at instant `k`;
//! * `p_i_j_k` (binary): the nozzle sits on the cell at instant `k`;
//!
//! plus the integer `m`, the makespan (index of the last printing instant),
//! which is minimized.
//!
//! Row families, in emission order:
//!
//! | prefix | meaning |
//! |--------|---------|
//! | `c1_i_j_k` | heat step from `k` to `k+1`, `k < d` |
//! | `init_i_j` | `T_i_j_0` pinned to the initial field |
//! | `c2_i_j` | pattern cells print exactly once, others never |
//! | `c3_i_j_k` | printing requires the nozzle to be there |
//! | `c4_k` | exactly one nozzle position per instant |
//! | `c5_i_j_k` | the nozzle stays or moves one step, `k < d` |
//! | `mk_k` | `m >= k - 2d + 2d * (prints at k)` |
//!
//! Temperature bounds are variable bounds on the instants selected by the
//! scenario's [`BoundWindow`](crate::scenario::BoundWindow); other instants
//! are free.

use thiserror::Error;

use crate::milp::{LinExpr, MilpError, MilpModel, Relation, Sense, VarKind, VarRef};
use crate::scenario::{BoundaryPolicy, Cell, Scenario, ScenarioError};

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("horizon must be at least 1 (got {0})")]
    HorizonTooSmall(usize),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Model(#[from] MilpError),
}

/// Maps `(i, j, k)` triples to model variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarIndex {
    rows: usize,
    cols: usize,
    horizon: usize,
    makespan: VarRef,
}

// Variables are declared in blocks: all T, then all u, then all p, each block
// ordered by (k, i, j); the makespan comes last.
impl VarIndex {
    fn block_len(&self) -> usize {
        self.rows * self.cols * (self.horizon + 1)
    }

    fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        assert!(
            i < self.rows && j < self.cols && k <= self.horizon,
            "({i}, {j}, {k}) outside {}x{} grid with horizon {}",
            self.rows,
            self.cols,
            self.horizon
        );
        (k * self.rows + i) * self.cols + j
    }

    pub fn temp(&self, i: usize, j: usize, k: usize) -> VarRef {
        VarRef(self.offset(i, j, k))
    }

    pub fn print(&self, i: usize, j: usize, k: usize) -> VarRef {
        VarRef(self.block_len() + self.offset(i, j, k))
    }

    pub fn pos(&self, i: usize, j: usize, k: usize) -> VarRef {
        VarRef(2 * self.block_len() + self.offset(i, j, k))
    }

    pub fn makespan(&self) -> VarRef {
        self.makespan
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_vars(&self) -> usize {
        3 * self.block_len() + 1
    }
}

/// Row counts per constraint family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Census {
    pub variables: usize,
    pub c1: usize,
    pub initial: usize,
    pub c2: usize,
    pub c3: usize,
    pub c4: usize,
    pub c5: usize,
    pub makespan: usize,
}

impl Census {
    pub fn rows(&self) -> usize {
        self.c1 + self.initial + self.c2 + self.c3 + self.c4 + self.c5 + self.makespan
    }
}

/// Exact row counts of `encode(scenario, d)` without building the model.
pub fn constraint_census(scenario: &Scenario, d: usize) -> Result<Census, EncodeError> {
    if d == 0 {
        return Err(EncodeError::HorizonTooSmall(d));
    }
    let cells = scenario.rows * scenario.cols;
    Ok(Census {
        variables: 3 * cells * (d + 1) + 1,
        c1: cells * d,
        initial: cells,
        c2: cells,
        c3: cells * (d + 1),
        c4: d + 1,
        c5: cells * d,
        makespan: d + 1,
    })
}

fn cell_name(prefix: &str, i: usize, j: usize, k: usize) -> String {
    format!("{prefix}_{i}_{j}_{k}")
}

/// Builds the MILP whose optimum is a minimum-makespan valid plan.
pub fn encode(scenario: &Scenario, d: usize) -> Result<(MilpModel, VarIndex), EncodeError> {
    scenario.validate()?;
    if d == 0 {
        return Err(EncodeError::HorizonTooSmall(d));
    }
    let (rows, cols) = (scenario.rows, scenario.cols);
    let mut model = MilpModel::new();

    for k in 0..=d {
        let (lo, hi) = if scenario.bound_window.covers(k, d) {
            (scenario.temp_lower, scenario.temp_upper)
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        };
        for i in 0..rows {
            for j in 0..cols {
                model.add_variable(cell_name("T", i, j, k), VarKind::Real, lo, hi)?;
            }
        }
    }
    for prefix in ["u", "p"] {
        for k in 0..=d {
            for i in 0..rows {
                for j in 0..cols {
                    model.add_variable(cell_name(prefix, i, j, k), VarKind::Binary, 0.0, 1.0)?;
                }
            }
        }
    }
    let makespan = model.add_variable("m", VarKind::Integer, 0.0, d as f64)?;
    let idx = VarIndex {
        rows,
        cols,
        horizon: d,
        makespan,
    };
    debug_assert_eq!(model.num_vars(), idx.num_vars());

    let alpha = scenario.alpha;
    // C1: T^{k+1} - T^k - alpha*([S - N]/2 + [E - W]/2) - T_h u^k = 0.
    for k in 0..d {
        for i in 0..rows {
            for j in 0..cols {
                let mut expr = LinExpr::new()
                    .term(idx.temp(i, j, k + 1), 1.0)
                    .term(idx.temp(i, j, k), -1.0);
                let stencil = [
                    ((i + 1 < rows).then(|| (i + 1, j)), -alpha / 2.0),
                    (i.checked_sub(1).map(|r| (r, j)), alpha / 2.0),
                    ((j + 1 < cols).then(|| (i, j + 1)), -alpha / 2.0),
                    (j.checked_sub(1).map(|c| (i, c)), alpha / 2.0),
                ];
                for (neighbor, coef) in stencil {
                    match (neighbor, scenario.boundary_policy) {
                        (Some((r, c)), _) => expr.add(idx.temp(r, c, k), coef),
                        (None, BoundaryPolicy::OneSided) => expr.add(idx.temp(i, j, k), coef),
                        (None, BoundaryPolicy::Zero) => {}
                    }
                }
                expr.add(idx.print(i, j, k), -scenario.heat_input);
                model.add_constraint(cell_name("c1", i, j, k), expr, Relation::Eq, 0.0)?;
            }
        }
    }
    for i in 0..rows {
        for j in 0..cols {
            let init = scenario.initial_temp.get(Cell::new(i, j));
            model.add_constraint(
                format!("init_{i}_{j}"),
                LinExpr::new().term(idx.temp(i, j, 0), 1.0),
                Relation::Eq,
                init,
            )?;
        }
    }
    // C2
    for i in 0..rows {
        for j in 0..cols {
            let expr: LinExpr = (0..=d).map(|k| (idx.print(i, j, k), 1.0)).collect();
            let target = if scenario.pattern.get(Cell::new(i, j)) { 1.0 } else { 0.0 };
            model.add_constraint(format!("c2_{i}_{j}"), expr, Relation::Eq, target)?;
        }
    }
    // C3
    for k in 0..=d {
        for i in 0..rows {
            for j in 0..cols {
                let expr = LinExpr::new()
                    .term(idx.print(i, j, k), 1.0)
                    .term(idx.pos(i, j, k), -1.0);
                model.add_constraint(cell_name("c3", i, j, k), expr, Relation::Le, 0.0)?;
            }
        }
    }
    // C4
    for k in 0..=d {
        let expr: LinExpr = scenario
            .cells()
            .map(|c| (idx.pos(c.row, c.col, k), 1.0))
            .collect();
        model.add_constraint(format!("c4_{k}"), expr, Relation::Eq, 1.0)?;
    }
    // C5: p^k_c - p^{k+1}_c - sum_{n in N(c)} p^{k+1}_n <= 0.
    for k in 0..d {
        for cell in scenario.cells() {
            let (i, j) = (cell.row, cell.col);
            let mut expr = LinExpr::new()
                .term(idx.pos(i, j, k), 1.0)
                .term(idx.pos(i, j, k + 1), -1.0);
            for n in scenario.neighbors(cell) {
                expr.add(idx.pos(n.row, n.col, k + 1), -1.0);
            }
            model.add_constraint(cell_name("c5", i, j, k), expr, Relation::Le, 0.0)?;
        }
    }
    // Makespan big-M with M = 2d.
    let big_m = 2.0 * d as f64;
    for k in 0..=d {
        let mut expr = LinExpr::new().term(makespan, 1.0);
        for cell in scenario.cells() {
            expr.add(idx.print(cell.row, cell.col, k), -big_m);
        }
        model.add_constraint(format!("mk_{k}"), expr, Relation::Ge, k as f64 - big_m)?;
    }
    model.set_objective(Sense::Minimize, LinExpr::new().term(makespan, 1.0))?;
    Ok((model, idx))
}
