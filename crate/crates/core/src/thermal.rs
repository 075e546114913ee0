//! Discrete heat-evolution step and trajectory simulation.
//!
//! One step maps a temperature field `T` to
//!
//! ```text
//! T'(i,j) = T(i,j) + alpha * ([T(i+1,j) - T(i-1,j)]/2 + [T(i,j+1) - T(i,j-1)]/2) + u(i,j)
//! ```
//!
//! Neighbours outside the grid read as 0 ([`BoundaryPolicy::Zero`]) or as the
//! centre value `T(i,j)` ([`BoundaryPolicy::OneSided`]). The update is a
//! first-order transport stencil, not a diffusion operator, and is applied
//! exactly as written.

use thiserror::Error;

use crate::scenario::{BoundaryPolicy, Cell, Scenario, TemperatureField};

#[derive(Debug, Error, PartialEq)]
pub enum ThermalError {
    #[error("dimension mismatch: field is {field_rows}x{field_cols}, input is {input_rows}x{input_cols}")]
    DimensionMismatch {
        field_rows: usize,
        field_cols: usize,
        input_rows: usize,
        input_cols: usize,
    },
    #[error("schedule step {step} refers to out-of-range cell {cell}")]
    CellOutOfRange { step: usize, cell: Cell },
}

/// Heat applied to each cell during one step.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatInput {
    values: TemperatureField,
}

impl HeatInput {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            values: TemperatureField::uniform(rows, cols, 0.0),
        }
    }

    /// `amount` at `cell`, zero elsewhere.
    pub fn point(rows: usize, cols: usize, cell: Cell, amount: f64) -> Self {
        let mut input = Self::zeros(rows, cols);
        input.values.set(cell, amount);
        input
    }

    pub fn from_field(values: TemperatureField) -> Self {
        Self { values }
    }

    pub fn get(&self, cell: Cell) -> f64 {
        self.values.get(cell)
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn cols(&self) -> usize {
        self.values.cols()
    }

    fn values(&self) -> &[f64] {
        self.values.values()
    }
}

/// Writes one heat step of `cur` into `next` (both row-major `rows x cols`).
/// `input` adds `amount` at the given flat index, if any.
pub(crate) fn step_into(
    cur: &[f64],
    next: &mut [f64],
    rows: usize,
    cols: usize,
    alpha: f64,
    policy: BoundaryPolicy,
    input: Option<(usize, f64)>,
) {
    let outside = |centre: f64| match policy {
        BoundaryPolicy::Zero => 0.0,
        BoundaryPolicy::OneSided => centre,
    };
    for i in 0..rows {
        for j in 0..cols {
            let idx = i * cols + j;
            let c = cur[idx];
            let north = if i > 0 { cur[idx - cols] } else { outside(c) };
            let south = if i + 1 < rows { cur[idx + cols] } else { outside(c) };
            let west = if j > 0 { cur[idx - 1] } else { outside(c) };
            let east = if j + 1 < cols { cur[idx + 1] } else { outside(c) };
            next[idx] = c + alpha * ((south - north) / 2.0 + (east - west) / 2.0);
        }
    }
    if let Some((idx, amount)) = input {
        next[idx] += amount;
    }
}

/// Applies one heat step with an arbitrary real-valued input.
pub fn heat_step(
    field: &TemperatureField,
    input: &HeatInput,
    alpha: f64,
    policy: BoundaryPolicy,
) -> Result<TemperatureField, ThermalError> {
    if field.rows() != input.rows() || field.cols() != input.cols() {
        return Err(ThermalError::DimensionMismatch {
            field_rows: field.rows(),
            field_cols: field.cols(),
            input_rows: input.rows(),
            input_cols: input.cols(),
        });
    }
    let (rows, cols) = (field.rows(), field.cols());
    let mut next = vec![0.0; rows * cols];
    step_into(field.values(), &mut next, rows, cols, alpha, policy, None);
    for (n, u) in next.iter_mut().zip(input.values()) {
        *n += u;
    }
    Ok(TemperatureField::from_vec(rows, cols, next))
}

/// Runs `schedule` from the scenario's initial field. Returns `T_0..T_len`.
///
/// Step `k` applies `heat_input` at the scheduled cell when its flag is set.
pub fn simulate(
    scenario: &Scenario,
    schedule: &[(Cell, bool)],
) -> Result<Vec<TemperatureField>, ThermalError> {
    let (rows, cols) = (scenario.rows, scenario.cols);
    let mut trajectory = Vec::with_capacity(schedule.len() + 1);
    trajectory.push(scenario.initial_temp.clone());
    for (step, &(cell, print)) in schedule.iter().enumerate() {
        if !scenario.contains(cell) {
            return Err(ThermalError::CellOutOfRange { step, cell });
        }
        let cur = trajectory.last().expect("trajectory is never empty");
        let mut next = vec![0.0; rows * cols];
        let input = print.then_some((cell.row * cols + cell.col, scenario.heat_input));
        step_into(
            cur.values(),
            &mut next,
            rows,
            cols,
            scenario.alpha,
            scenario.boundary_policy,
            input,
        );
        trajectory.push(TemperatureField::from_vec(rows, cols, next));
    }
    Ok(trajectory)
}

/// One out-of-bounds temperature.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BoundViolation {
    pub time: usize,
    pub cell: Cell,
    pub value: f64,
}

/// Every `(k, i, j)` whose temperature lies outside `[lower, upper]`, `k = 0` included.
pub fn check_bounds(trajectory: &[TemperatureField], lower: f64, upper: f64) -> Vec<BoundViolation> {
    let mut out = Vec::new();
    for (time, field) in trajectory.iter().enumerate() {
        let cols = field.cols();
        for (idx, &value) in field.values().iter().enumerate() {
            if !(lower <= value && value <= upper) {
                out.push(BoundViolation {
                    time,
                    cell: Cell::new(idx / cols, idx % cols),
                    value,
                });
            }
        }
    }
    out
}
