//! Exhaustive search for optimal plans on tiny instances.
//!
//! Depth-first over start cells, print decisions and moves, with its own
//! incremental heat simulation. Results are exact and independent of the
//! MILP encoding, which makes them the reference for solver cross-checks.

use thiserror::Error;

use crate::plan::AnnotatedPlan;
use crate::scenario::{Cell, Scenario, ScenarioError};
use crate::thermal::step_into;

pub const MAX_CELLS: usize = 9;
pub const MAX_HORIZON: usize = 12;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance too large for exhaustive search: {cells} cells (max {MAX_CELLS}), horizon {horizon} (max {MAX_HORIZON})")]
    TooLarge { cells: usize, horizon: usize },
    #[error("horizon must be at least 1 (got {0})")]
    HorizonTooSmall(usize),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleOutcome {
    Optimal { cost: usize, witness: AnnotatedPlan },
    Infeasible,
}

impl OracleOutcome {
    pub fn cost(&self) -> Option<usize> {
        match self {
            OracleOutcome::Optimal { cost, .. } => Some(*cost),
            OracleOutcome::Infeasible => None,
        }
    }
}

struct Search<'a> {
    s: &'a Scenario,
    d: usize,
    /// `temps[k]` holds the field at instant `k` along the current branch.
    temps: Vec<Vec<f64>>,
    path: Vec<Cell>,
    print: Vec<bool>,
    printed: Vec<bool>,
    remaining: usize,
    best: Option<(usize, Vec<Cell>, Vec<bool>)>,
}

impl Search<'_> {
    fn in_bounds(&self, k: usize) -> bool {
        !self.s.bound_window.covers(k, self.d)
            || self.temps[k]
                .iter()
                .all(|&t| self.s.temp_lower <= t && t <= self.s.temp_upper)
    }

    fn step(&mut self, k: usize, input: Option<(usize, f64)>) {
        let (cur, next) = self.temps.split_at_mut(k + 1);
        step_into(
            &cur[k],
            &mut next[0],
            self.s.rows,
            self.s.cols,
            self.s.alpha,
            self.s.boundary_policy,
            input,
        );
    }

    /// Whether the evolution after instant `k` stays in bounds when step `k`
    /// applies `input` and later steps apply nothing.
    fn tail_ok(&mut self, k: usize, mut input: Option<(usize, f64)>) -> bool {
        for t in k + 1..=self.d {
            self.step(t - 1, input.take());
            if !self.in_bounds(t) {
                return false;
            }
        }
        true
    }

    /// Earliest possible last-print instant from `pos` at instant `k`.
    fn lower_bound(&self, k: usize, pos: Cell) -> usize {
        let nearest = self
            .s
            .pattern
            .print_cells()
            .filter(|c| !self.printed[self.flat(*c)])
            .map(|c| c.distance(pos))
            .min()
            .unwrap_or(0);
        k + nearest + self.remaining.saturating_sub(1)
    }

    fn flat(&self, c: Cell) -> usize {
        c.row * self.s.cols + c.col
    }

    fn beaten(&self, cost: usize) -> bool {
        matches!(self.best, Some((b, _, _)) if cost >= b)
    }

    /// The nozzle is at `pos` at instant `k`; `temps[k]` is set and in bounds.
    fn visit(&mut self, k: usize, pos: Cell) {
        if self.beaten(self.lower_bound(k, pos)) {
            return;
        }
        let idx = self.flat(pos);
        let can_print = self.s.pattern.get(pos) && !self.printed[idx];
        for print in [true, false] {
            if print && !can_print {
                continue;
            }
            self.path.push(pos);
            self.print.push(print);
            if print {
                self.printed[idx] = true;
                self.remaining -= 1;
            }
            if print && self.remaining == 0 {
                if !self.beaten(k) && self.tail_ok(k, Some((idx, self.s.heat_input))) {
                    self.best = Some((k, self.path.clone(), self.print.clone()));
                }
            } else if k < self.d {
                let input = print.then_some((idx, self.s.heat_input));
                self.step(k, input);
                if self.in_bounds(k + 1) {
                    for next in moves(self.s, pos) {
                        self.visit(k + 1, next);
                    }
                }
            }
            if print {
                self.printed[idx] = false;
                self.remaining += 1;
            }
            self.path.pop();
            self.print.pop();
        }
    }
}

/// Stay first, then north, south, west, east.
fn moves(s: &Scenario, c: Cell) -> impl Iterator<Item = Cell> {
    let (r, col) = (c.row as isize, c.col as isize);
    let (rows, cols) = (s.rows as isize, s.cols as isize);
    [(0, 0), (-1, 0), (1, 0), (0, -1), (0, 1)]
        .into_iter()
        .map(move |(dr, dc)| (r + dr, col + dc))
        .filter(move |&(a, b)| a >= 0 && a < rows && b >= 0 && b < cols)
        .map(|(a, b)| Cell::new(a as usize, b as usize))
}

/// Minimal last-print instant over all valid plans within horizon `d`.
///
/// Matches the MILP's semantics: the start cell is free, temperatures are
/// bounded on the instants the scenario's bound window covers, and the
/// input-free evolution after the last print must stay in bounds too.
pub fn brute_force_optimum(scenario: &Scenario, d: usize) -> Result<OracleOutcome, OracleError> {
    scenario.validate()?;
    if d == 0 {
        return Err(OracleError::HorizonTooSmall(d));
    }
    let cells = scenario.rows * scenario.cols;
    if cells > MAX_CELLS || d > MAX_HORIZON {
        return Err(OracleError::TooLarge { cells, horizon: d });
    }
    let mut search = Search {
        s: scenario,
        d,
        temps: vec![vec![0.0; cells]; d + 1],
        path: Vec::new(),
        print: Vec::new(),
        printed: vec![false; cells],
        remaining: scenario.pattern.count(),
        best: None,
    };
    search.temps[0].copy_from_slice(scenario.initial_temp.values());
    if search.remaining == 0 {
        // Nothing to print: valid iff the free evolution stays in bounds.
        if !search.in_bounds(0) || !search.tail_ok(0, None) {
            return Ok(OracleOutcome::Infeasible);
        }
        let start = Cell::new(0, 0);
        return Ok(OracleOutcome::Optimal {
            cost: 0,
            witness: AnnotatedPlan {
                path: vec![start],
                print: vec![false],
                temps: vec![scenario.initial_temp.clone()],
            },
        });
    }
    if !search.in_bounds(0) {
        return Ok(OracleOutcome::Infeasible);
    }
    for start in scenario.cells() {
        search.visit(0, start);
    }
    let Some((cost, path, print)) = search.best else {
        return Ok(OracleOutcome::Infeasible);
    };
    let schedule: Vec<(Cell, bool)> = path.iter().copied().zip(print.iter().copied()).collect();
    let temps = crate::thermal::simulate(scenario, &schedule[..schedule.len() - 1])
        .expect("witness cells lie on the grid");
    debug_assert_eq!(temps.len(), path.len());
    Ok(OracleOutcome::Optimal {
        cost,
        witness: AnnotatedPlan { path, print, temps },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::validate_plan;
    use crate::scenario::{diagonal_pattern, BoundWindow, BoundaryPolicy, PrintPattern, TemperatureField};

    fn diagonal(n: usize, lower: f64, upper: f64) -> Scenario {
        Scenario {
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
            horizon: Some(10),
        }
    }

    #[test]
    fn two_by_two_loose_bounds() {
        let s = diagonal(2, 0.0, 200.0);
        let out = brute_force_optimum(&s, 10).unwrap();
        assert_eq!(out.cost(), Some(2));
        let OracleOutcome::Optimal { witness, .. } = out else { unreachable!() };
        assert!(validate_plan(&s, &witness).unwrap().is_valid());
    }

    #[test]
    fn two_by_two_tight_bounds() {
        let s = diagonal(2, 65.0, 85.0);
        assert_eq!(brute_force_optimum(&s, 10).unwrap().cost(), Some(6));
    }

    #[test]
    fn three_by_three_worked_example() {
        let s = diagonal(3, 0.0, 200.0);
        let out = brute_force_optimum(&s, 10).unwrap();
        let OracleOutcome::Optimal { cost, witness } = out else { panic!("infeasible") };
        assert_eq!(cost, 4);
        assert_eq!(witness.print_times(), vec![0, 2, 4]);
    }

    #[test]
    fn single_cell() {
        let mut s = diagonal(1, 0.0, 200.0);
        s.pattern = PrintPattern::from_rows(&[vec![1]]).unwrap();
        let out = brute_force_optimum(&s, 1).unwrap();
        assert_eq!(out.cost(), Some(0));
    }

    #[test]
    fn hot_start_is_infeasible() {
        let s = diagonal(2, 0.0, 70.0);
        assert_eq!(brute_force_optimum(&s, 10).unwrap(), OracleOutcome::Infeasible);
    }

    #[test]
    fn refuses_large_instances() {
        let s = diagonal(4, 0.0, 200.0);
        assert!(matches!(brute_force_optimum(&s, 5), Err(OracleError::TooLarge { .. })));
        let s = diagonal(3, 0.0, 200.0);
        assert!(matches!(brute_force_optimum(&s, 13), Err(OracleError::TooLarge { .. })));
    }

    #[test]
    fn short_horizon_can_be_infeasible() {
        // Three diagonal cells need at least four moves.
        let s = diagonal(3, 0.0, 200.0);
        assert_eq!(brute_force_optimum(&s, 3).unwrap(), OracleOutcome::Infeasible);
        assert_eq!(brute_force_optimum(&s, 4).unwrap().cost(), Some(4));
    }
}
