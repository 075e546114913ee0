//! Annotated plans: extraction from MILP assignments and independent validation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::VarIndex;
use crate::milp::{Assignment, INTEGER_TOLERANCE};
use crate::scenario::{adjacent, Cell, Scenario, TemperatureField};
use crate::thermal::{check_bounds, simulate, BoundViolation};

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("variable `{name}` is not integral (value {value})")]
    NotIntegral { name: String, value: f64 },
    #[error("instant {time} has {count} nozzle positions, expected exactly one")]
    Position { time: usize, count: usize },
    #[error("instant {time} prints at {cell} while the nozzle is elsewhere")]
    PrintAway { time: usize, cell: Cell },
    #[error("assignment has {got} values, model has {expected}")]
    Length { got: usize, expected: usize },
    #[error("plan sequences disagree in length: path {path}, print {print}, temps {temps}")]
    Ragged { path: usize, print: usize, temps: usize },
    #[error("plan is for a {got_rows}x{got_cols} grid, scenario is {rows}x{cols}")]
    Dimension {
        rows: usize,
        cols: usize,
        got_rows: usize,
        got_cols: usize,
    },
}

/// A cell path together with its print flags and temperature fields.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedPlan {
    pub path: Vec<Cell>,
    pub print: Vec<bool>,
    /// `temps[k]` is the field at instant `k`, before step `k` is applied.
    pub temps: Vec<TemperatureField>,
}

impl AnnotatedPlan {
    pub fn len(&self) -> usize {
        self.path.len()
    }

    pub fn is_empty(&self) -> bool {
        self.path.is_empty()
    }

    /// Index of the last printing step.
    pub fn cost(&self) -> Option<usize> {
        self.print.iter().rposition(|&p| p)
    }

    /// Instants at which the nozzle prints.
    pub fn print_times(&self) -> Vec<usize> {
        (0..self.print.len()).filter(|&k| self.print[k]).collect()
    }

    /// True if the nozzle ever stays on a cell for two consecutive steps.
    pub fn has_idle_step(&self) -> bool {
        self.path.windows(2).any(|w| w[0] == w[1])
    }

    pub fn schedule(&self) -> Vec<(Cell, bool)> {
        self.path.iter().copied().zip(self.print.iter().copied()).collect()
    }

    pub fn to_json(&self) -> String {
        let file = PlanFile {
            path: self.path.iter().map(|c| [c.row, c.col]).collect(),
            print: self.print.iter().map(|&p| u8::from(p)).collect(),
            temps: self.temps.iter().map(TemperatureField::to_rows).collect(),
            cost: self.cost(),
        };
        serde_json::to_string_pretty(&file).expect("plan serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PlanParseError> {
        let file: PlanFile = serde_json::from_str(text)?;
        let temps = file
            .temps
            .iter()
            .map(|rows| TemperatureField::from_rows(rows))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| PlanParseError::Field(e.to_string()))?;
        let print = file
            .print
            .iter()
            .map(|&p| match p {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(PlanParseError::Field(format!("print flag must be 0 or 1, got {other}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            path: file.path.iter().map(|&[r, c]| Cell::new(r, c)).collect(),
            print,
            temps,
        })
    }
}

#[derive(Debug, Error)]
pub enum PlanParseError {
    #[error("plan file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("plan file: {0}")]
    Field(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    path: Vec<[usize; 2]>,
    print: Vec<u8>,
    temps: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    cost: Option<usize>,
}

fn integral(assignment: &Assignment, var: crate::milp::VarRef, name: impl Fn() -> String) -> Result<i64, PlanError> {
    let value = assignment.get(var);
    if !value.is_finite() || (value - value.round()).abs() > INTEGER_TOLERANCE {
        return Err(PlanError::NotIntegral { name: name(), value });
    }
    Ok(value.round() as i64)
}

/// Reads the plan out of an integral assignment, truncated at the makespan.
pub fn extract_plan(
    assignment: &Assignment,
    index: &VarIndex,
    scenario: &Scenario,
) -> Result<AnnotatedPlan, PlanError> {
    let (rows, cols, d) = (index.rows(), index.cols(), index.horizon());
    if rows != scenario.rows || cols != scenario.cols {
        return Err(PlanError::Dimension {
            rows: scenario.rows,
            cols: scenario.cols,
            got_rows: rows,
            got_cols: cols,
        });
    }
    if assignment.values().len() != index.num_vars() {
        return Err(PlanError::Length {
            got: assignment.values().len(),
            expected: index.num_vars(),
        });
    }
    let makespan = integral(assignment, index.makespan(), || "m".into())?.clamp(0, d as i64) as usize;

    let mut plan = AnnotatedPlan {
        path: Vec::with_capacity(makespan + 1),
        print: Vec::with_capacity(makespan + 1),
        temps: Vec::with_capacity(makespan + 1),
    };
    for k in 0..=makespan {
        let mut at = Vec::new();
        let mut printed = Vec::new();
        let mut temps = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let name = |p: &'static str| move || format!("{p}_{i}_{j}_{k}");
                if integral(assignment, index.pos(i, j, k), name("p"))? == 1 {
                    at.push(Cell::new(i, j));
                }
                if integral(assignment, index.print(i, j, k), name("u"))? == 1 {
                    printed.push(Cell::new(i, j));
                }
                temps.push(assignment.get(index.temp(i, j, k)));
            }
        }
        if at.len() != 1 {
            return Err(PlanError::Position { time: k, count: at.len() });
        }
        if let Some(&cell) = printed.iter().find(|&&c| c != at[0]) {
            return Err(PlanError::PrintAway { time: k, cell });
        }
        plan.path.push(at[0]);
        plan.print.push(!printed.is_empty());
        plan.temps.push(TemperatureField::from_vec(rows, cols, temps));
    }
    Ok(plan)
}

/// Temperatures must reproduce the simulator within this tolerance.
pub const EVOLUTION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolutionMismatch {
    pub time: usize,
    pub cell: Cell,
    pub expected: f64,
    pub actual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MotionViolation {
    pub time: usize,
    pub from: Cell,
    pub to: Cell,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub coverage_ok: bool,
    /// Pattern cells printed zero or several times, and non-pattern cells printed.
    pub uncovered: Vec<Cell>,
    pub reprinted: Vec<Cell>,
    pub stray: Vec<Cell>,
    pub motion_ok: bool,
    pub motion_violations: Vec<MotionViolation>,
    pub evolution_ok: bool,
    pub evolution_mismatch: Option<EvolutionMismatch>,
    pub bounds_ok: bool,
    pub bound_violations: Vec<BoundViolation>,
    pub cost: Option<usize>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.coverage_ok && self.motion_ok && self.evolution_ok && self.bounds_ok
    }
}

/// Checks coverage, motion, temperature evolution and temperature bounds
/// using only the scenario and the heat simulator.
///
/// Bounds are enforced on the instants the scenario's bound window covers
/// when the scenario carries a horizon, including the idle steps between the
/// end of the plan and the horizon. Without a horizon only the plan's own
/// fields are checked.
pub fn validate_plan(scenario: &Scenario, plan: &AnnotatedPlan) -> Result<ValidationReport, PlanError> {
    if plan.path.len() != plan.print.len() || plan.path.len() != plan.temps.len() {
        return Err(PlanError::Ragged {
            path: plan.path.len(),
            print: plan.print.len(),
            temps: plan.temps.len(),
        });
    }
    for field in &plan.temps {
        if field.rows() != scenario.rows || field.cols() != scenario.cols {
            return Err(PlanError::Dimension {
                rows: scenario.rows,
                cols: scenario.cols,
                got_rows: field.rows(),
                got_cols: field.cols(),
            });
        }
    }
    if let Some(cell) = plan.path.iter().find(|c| !scenario.contains(**c)) {
        return Err(PlanError::Dimension {
            rows: scenario.rows,
            cols: scenario.cols,
            got_rows: cell.row + 1,
            got_cols: cell.col + 1,
        });
    }

    let mut counts = vec![0usize; scenario.rows * scenario.cols];
    for (cell, &p) in plan.path.iter().zip(&plan.print) {
        if p {
            counts[cell.row * scenario.cols + cell.col] += 1;
        }
    }
    let (mut uncovered, mut reprinted, mut stray) = (Vec::new(), Vec::new(), Vec::new());
    for cell in scenario.cells() {
        let n = counts[cell.row * scenario.cols + cell.col];
        match (scenario.pattern.get(cell), n) {
            (true, 0) => uncovered.push(cell),
            (true, 1) | (false, 0) => {}
            (true, _) => reprinted.push(cell),
            (false, _) => stray.push(cell),
        }
    }

    let motion_violations: Vec<MotionViolation> = plan
        .path
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] != w[1] && !adjacent(w[0], w[1]))
        .map(|(k, w)| MotionViolation {
            time: k,
            from: w[0],
            to: w[1],
        })
        .collect();

    let mut evolution_mismatch = None;
    if !plan.is_empty() {
        let schedule = plan.schedule();
        let expected = simulate(scenario, &schedule[..schedule.len() - 1])
            .expect("cells were checked to lie on the grid");
        'outer: for (k, (want, got)) in expected.iter().zip(&plan.temps).enumerate() {
            for cell in scenario.cells() {
                let (e, a) = (want.get(cell), got.get(cell));
                if !((e - a).abs() <= EVOLUTION_TOLERANCE) {
                    evolution_mismatch = Some(EvolutionMismatch {
                        time: k,
                        cell,
                        expected: e,
                        actual: a,
                    });
                    break 'outer;
                }
            }
        }
    }

    // With a known horizon the nozzle idles after the plan ends, and the
    // fields it leaves behind must respect the bounds up to the horizon too.
    let mut trajectory = plan.temps.clone();
    if let (Some(d), Some(last)) = (scenario.horizon, plan.path.last()) {
        if trajectory.len() <= d && evolution_mismatch.is_none() {
            let mut schedule = plan.schedule();
            schedule.resize(d, (*last, false));
            let full = simulate(scenario, &schedule).expect("cells were checked to lie on the grid");
            trajectory.extend(full.into_iter().skip(plan.len()));
        }
    }
    let bound_violations: Vec<BoundViolation> = check_bounds(&trajectory, scenario.temp_lower, scenario.temp_upper)
        .into_iter()
        .filter(|v| match scenario.horizon {
            Some(d) => scenario.bound_window.covers(v.time, d),
            None => true,
        })
        .collect();

    Ok(ValidationReport {
        coverage_ok: uncovered.is_empty() && reprinted.is_empty() && stray.is_empty(),
        uncovered,
        reprinted,
        stray,
        motion_ok: motion_violations.is_empty(),
        motion_violations,
        evolution_ok: evolution_mismatch.is_none(),
        evolution_mismatch,
        bounds_ok: bound_violations.is_empty(),
        bound_violations,
        cost: plan.cost(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::encode;
    use crate::scenario::{diagonal_pattern, BoundWindow, BoundaryPolicy, PrintPattern};

    fn worked() -> Scenario {
        Scenario {
            rows: 3,
            cols: 3,
            pattern: diagonal_pattern(3),
            initial_temp: TemperatureField::uniform(3, 3, 75.0),
            temp_lower: 0.0,
            temp_upper: 200.0,
            alpha: 1.0,
            heat_input: 1.0,
            boundary_policy: BoundaryPolicy::OneSided,
            bound_window: BoundWindow::BeforeHorizon,
            horizon: Some(10),
        }
    }

    /// Diagonal walk printing at 0, 2 and 4 with simulated temperatures.
    fn diagonal_plan(s: &Scenario) -> AnnotatedPlan {
        let path = vec![
            Cell::new(0, 0),
            Cell::new(0, 1),
            Cell::new(1, 1),
            Cell::new(1, 2),
            Cell::new(2, 2),
        ];
        let print = vec![true, false, true, false, true];
        let schedule: Vec<_> = path.iter().copied().zip(print.iter().copied()).collect();
        let temps = simulate(s, &schedule[..4]).unwrap();
        AnnotatedPlan { path, print, temps }
    }

    #[test]
    fn valid_plan_passes() {
        let s = worked();
        let report = validate_plan(&s, &diagonal_plan(&s)).unwrap();
        assert!(report.is_valid(), "{report:?}");
        assert_eq!(report.cost, Some(4));
    }

    #[test]
    fn deleted_print_breaks_coverage() {
        let s = worked();
        let mut plan = diagonal_plan(&s);
        plan.print[2] = false;
        let report = validate_plan(&s, &plan).unwrap();
        assert!(!report.coverage_ok);
        assert_eq!(report.uncovered, vec![Cell::new(1, 1)]);
    }

    #[test]
    fn perturbed_temperature_breaks_evolution() {
        let s = worked();
        let mut plan = diagonal_plan(&s);
        let v = plan.temps[1].get(Cell::new(2, 0));
        plan.temps[1].set(Cell::new(2, 0), v + 1.0);
        let report = validate_plan(&s, &plan).unwrap();
        assert!(report.coverage_ok && report.bounds_ok);
        let m = report.evolution_mismatch.unwrap();
        assert_eq!((m.time, m.cell), (1, Cell::new(2, 0)));
    }

    #[test]
    fn jump_breaks_motion() {
        let s = worked();
        let mut plan = diagonal_plan(&s);
        plan.path[1] = Cell::new(1, 1);
        plan.path[2] = Cell::new(2, 2);
        let report = validate_plan(&s, &plan).unwrap();
        assert!(!report.motion_ok);
    }

    #[test]
    fn hot_field_breaks_bounds() {
        let mut s = worked();
        s.temp_upper = 75.5;
        let report = validate_plan(&s, &diagonal_plan(&s)).unwrap();
        assert!(!report.bounds_ok);
        assert!(report.bound_violations.iter().all(|v| v.value > 75.5));
    }

    #[test]
    fn idle_tail_must_respect_bounds() {
        // Fast enough for loose bounds, but the fields drift out of [65, 85]
        // before the horizon.
        let mut s = worked();
        s.temp_lower = 65.0;
        s.temp_upper = 85.0;
        let plan = diagonal_plan(&s);
        let report = validate_plan(&s, &plan).unwrap();
        assert!(report.coverage_ok && report.evolution_ok && report.motion_ok);
        assert!(!report.bounds_ok);
        assert!(report.bound_violations.iter().all(|v| v.time >= plan.len()));
        s.horizon = None;
        assert!(validate_plan(&s, &plan).unwrap().is_valid());
    }

    #[test]
    fn ragged_plan_is_an_error() {
        let s = worked();
        let mut plan = diagonal_plan(&s);
        plan.temps.pop();
        assert!(matches!(validate_plan(&s, &plan), Err(PlanError::Ragged { .. })));
    }

    #[test]
    fn json_round_trip() {
        let s = worked();
        let plan = diagonal_plan(&s);
        let text = plan.to_json();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["cost"], 4);
        assert_eq!(v["path"][1], serde_json::json!([0, 1]));
        assert_eq!(AnnotatedPlan::from_json(&text).unwrap(), plan);
    }

    fn assignment_for(s: &Scenario, d: usize, plan: &AnnotatedPlan) -> (Assignment, VarIndex) {
        let (model, idx) = encode(s, d).unwrap();
        let mut values = vec![0.0; model.num_vars()];
        let mut schedule = plan.schedule();
        let last = *plan.path.last().unwrap();
        schedule.resize(d + 1, (last, false));
        let temps = simulate(s, &schedule[..d]).unwrap();
        for k in 0..=d {
            for cell in s.cells() {
                values[idx.temp(cell.row, cell.col, k).index()] = temps[k].get(cell);
            }
            let (c, p) = schedule[k];
            values[idx.pos(c.row, c.col, k).index()] = 1.0;
            if p {
                values[idx.print(c.row, c.col, k).index()] = 1.0;
            }
        }
        values[idx.makespan().index()] = plan.cost().unwrap() as f64;
        let a = Assignment::new(values);
        assert!(a.violations(&model, 1e-9, 1e-9).is_empty());
        (a, idx)
    }

    #[test]
    fn extracts_truncated_plan() {
        let s = worked();
        let plan = diagonal_plan(&s);
        let (a, idx) = assignment_for(&s, 10, &plan);
        let got = extract_plan(&a, &idx, &s).unwrap();
        assert_eq!(got, plan);
        assert_eq!(got.print_times(), vec![0, 2, 4]);
    }

    #[test]
    fn two_positions_is_an_error() {
        let s = worked();
        let (a, idx) = assignment_for(&s, 10, &diagonal_plan(&s));
        let mut values = a.values().to_vec();
        values[idx.pos(2, 2, 0).index()] = 1.0;
        let err = extract_plan(&Assignment::new(values), &idx, &s).unwrap_err();
        assert_eq!(err, PlanError::Position { time: 0, count: 2 });
    }

    #[test]
    fn fractional_value_is_an_error() {
        let s = worked();
        let (a, idx) = assignment_for(&s, 10, &diagonal_plan(&s));
        let mut values = a.values().to_vec();
        values[idx.print(1, 1, 2).index()] = 0.5;
        let err = extract_plan(&Assignment::new(values), &idx, &s).unwrap_err();
        assert!(matches!(err, PlanError::NotIntegral { ref name, .. } if name == "u_1_1_2"));
    }

    #[test]
    fn single_cell_plan() {
        let mut s = worked();
        s.rows = 1;
        s.cols = 1;
        s.pattern = PrintPattern::from_rows(&[vec![1]]).unwrap();
        s.initial_temp = TemperatureField::uniform(1, 1, 75.0);
        s.horizon = Some(1);
        let plan = AnnotatedPlan {
            path: vec![Cell::new(0, 0)],
            print: vec![true],
            temps: vec![s.initial_temp.clone()],
        };
        let (a, idx) = assignment_for(&s, 1, &plan);
        let got = extract_plan(&a, &idx, &s).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got.cost(), Some(0));
    }
}
