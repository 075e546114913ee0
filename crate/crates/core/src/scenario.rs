//! Printing scenarios: the grid, the print pattern, the initial bed
//! temperature and the thermal parameters of one planning instance.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while loading or validating a scenario.
#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("grid dimensions must be positive (rows={rows}, cols={cols})")]
    EmptyGrid { rows: usize, cols: usize },
    #[error("dimension mismatch in `{field}`: expected {expected}, found {found}")]
    DimensionMismatch {
        field: String,
        expected: String,
        found: String,
    },
    #[error("temperature bounds out of order: temp_lower={lower} > temp_upper={upper}")]
    BoundOrder { lower: f64, upper: f64 },
    #[error("field `{field}` must be {requirement} (got {value})")]
    InvalidValue {
        field: String,
        requirement: &'static str,
        value: String,
    },
}

/// A grid position `(row, col)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    /// Manhattan distance between two cells.
    pub fn distance(self, other: Cell) -> usize {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// True iff the cells differ by exactly one step along a single axis.
pub fn adjacent(a: Cell, b: Cell) -> bool {
    (a.row == b.row && a.col.abs_diff(b.col) == 1) || (a.col == b.col && a.row.abs_diff(b.row) == 1)
}

/// Rule for stencil neighbours that fall outside the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryPolicy {
    /// Out-of-range neighbours read as 0.
    Zero,
    /// Out-of-range neighbours read as the centre cell's own value.
    #[default]
    OneSided,
}

/// Which time instants carry the temperature-bound constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundWindow {
    /// Instants `0..d` (exclusive); the terminal state at `d` is unbounded.
    #[default]
    BeforeHorizon,
    /// Instants `0..=d`.
    ThroughHorizon,
}

impl BoundWindow {
    /// Whether instant `k` is bound-constrained for horizon `horizon`.
    pub fn covers(self, k: usize, horizon: usize) -> bool {
        match self {
            BoundWindow::BeforeHorizon => k < horizon,
            BoundWindow::ThroughHorizon => k <= horizon,
        }
    }

    /// Last bound-constrained instant, if any.
    pub fn last_instant(self, horizon: usize) -> Option<usize> {
        match self {
            BoundWindow::BeforeHorizon => horizon.checked_sub(1),
            BoundWindow::ThroughHorizon => Some(horizon),
        }
    }
}

/// Row-major 0/1 matrix of cells that must be printed exactly once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrintPattern {
    rows: usize,
    cols: usize,
    cells: Vec<bool>,
}

impl PrintPattern {
    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            cells: vec![false; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self, ScenarioError> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut cells = Vec::with_capacity(nrows * ncols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(ScenarioError::DimensionMismatch {
                    field: format!("pattern[{i}]"),
                    expected: format!("{ncols} columns"),
                    found: format!("{} columns", row.len()),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => cells.push(false),
                    1 => cells.push(true),
                    other => {
                        return Err(ScenarioError::InvalidValue {
                            field: format!("pattern[{i}][{j}]"),
                            requirement: "0 or 1",
                            value: other.to_string(),
                        })
                    }
                }
            }
        }
        Ok(Self {
            rows: nrows,
            cols: ncols,
            cells,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, cell: Cell) -> bool {
        self.cells[cell.row * self.cols + cell.col]
    }

    pub fn set(&mut self, cell: Cell, value: bool) {
        self.cells[cell.row * self.cols + cell.col] = value;
    }

    /// Cells marked for printing, in row-major order.
    pub fn print_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        let cols = self.cols;
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &v)| v)
            .map(move |(idx, _)| Cell::new(idx / cols, idx % cols))
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&v| v).count()
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        self.cells
            .chunks(self.cols.max(1))
            .map(|r| r.iter().map(|&v| u8::from(v)).collect())
            .collect()
    }
}

/// The `n x n` pattern whose only set cells are on the main diagonal.
pub fn diagonal_pattern(n: usize) -> PrintPattern {
    let mut pattern = PrintPattern::empty(n, n);
    for i in 0..n {
        pattern.set(Cell::new(i, i), true);
    }
    pattern
}

/// Row-major grid of temperatures at one time instant.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureField {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl TemperatureField {
    pub fn uniform(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            values: vec![value; rows * cols],
        }
    }

    /// Builds a field from row-major values. Panics if the length is not `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), rows * cols, "field length must equal rows*cols");
        Self { rows, cols, values }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ScenarioError> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(nrows * ncols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(ScenarioError::DimensionMismatch {
                    field: format!("initial_temp[{i}]"),
                    expected: format!("{ncols} columns"),
                    found: format!("{} columns", row.len()),
                });
            }
            values.extend_from_slice(row);
        }
        Ok(Self {
            rows: nrows,
            cols: ncols,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, cell: Cell) -> f64 {
        self.values[cell.row * self.cols + cell.col]
    }

    pub fn set(&mut self, cell: Cell, value: f64) {
        self.values[cell.row * self.cols + cell.col] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn same_shape(&self, other: &TemperatureField) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    /// The common value if every entry is equal.
    pub fn uniform_value(&self) -> Option<f64> {
        let first = *self.values.first()?;
        self.values.iter().all(|&v| v == first).then_some(first)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.values
            .chunks(self.cols.max(1))
            .map(<[f64]>::to_vec)
            .collect()
    }
}

/// One planning instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub rows: usize,
    pub cols: usize,
    pub pattern: PrintPattern,
    pub initial_temp: TemperatureField,
    pub temp_lower: f64,
    pub temp_upper: f64,
    pub alpha: f64,
    pub heat_input: f64,
    pub boundary_policy: BoundaryPolicy,
    pub bound_window: BoundWindow,
    /// Default horizon `d` carried by the scenario file, if any.
    pub horizon: Option<usize>,
}

impl Scenario {
    /// Checks every structural invariant.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.rows == 0 || self.cols == 0 {
            return Err(ScenarioError::EmptyGrid {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let expected = format!("{}x{}", self.rows, self.cols);
        if self.pattern.rows() != self.rows || self.pattern.cols() != self.cols {
            return Err(ScenarioError::DimensionMismatch {
                field: "pattern".into(),
                expected,
                found: format!("{}x{}", self.pattern.rows(), self.pattern.cols()),
            });
        }
        if self.initial_temp.rows() != self.rows || self.initial_temp.cols() != self.cols {
            return Err(ScenarioError::DimensionMismatch {
                field: "initial_temp".into(),
                expected,
                found: format!("{}x{}", self.initial_temp.rows(), self.initial_temp.cols()),
            });
        }
        if let Some(v) = self.initial_temp.values().iter().find(|v| !v.is_finite()) {
            return Err(ScenarioError::InvalidValue {
                field: "initial_temp".into(),
                requirement: "finite",
                value: v.to_string(),
            });
        }
        for (field, value) in [
            ("temp_lower", self.temp_lower),
            ("temp_upper", self.temp_upper),
            ("alpha", self.alpha),
            ("heat_input", self.heat_input),
        ] {
            if !value.is_finite() {
                return Err(ScenarioError::InvalidValue {
                    field: field.into(),
                    requirement: "finite",
                    value: value.to_string(),
                });
            }
        }
        if self.alpha < 0.0 {
            return Err(ScenarioError::InvalidValue {
                field: "alpha".into(),
                requirement: "non-negative",
                value: self.alpha.to_string(),
            });
        }
        if self.temp_lower > self.temp_upper {
            return Err(ScenarioError::BoundOrder {
                lower: self.temp_lower,
                upper: self.temp_upper,
            });
        }
        Ok(())
    }

    /// Non-fatal issues worth reporting to a user.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.pattern.count() == 0 {
            out.push("print pattern has no set cells; the plan is trivially empty".to_string());
        }
        let init = self.initial_temp.values();
        if init
            .iter()
            .any(|&v| v < self.temp_lower || v > self.temp_upper)
        {
            out.push(
                "initial temperature violates the bounds at instant 0; every plan is invalid"
                    .to_string(),
            );
        }
        out
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> {
        let cols = self.cols;
        (0..self.rows * self.cols).map(move |idx| Cell::new(idx / cols, idx % cols))
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.row < self.rows && cell.col < self.cols
    }

    /// In-range 4-neighbours in the order N, S, W, E.
    pub fn neighbors(&self, cell: Cell) -> impl Iterator<Item = Cell> {
        let (rows, cols) = (self.rows, self.cols);
        let Cell { row, col } = cell;
        [
            row.checked_sub(1).map(|r| Cell::new(r, col)),
            (row + 1 < rows).then(|| Cell::new(row + 1, col)),
            col.checked_sub(1).map(|c| Cell::new(row, c)),
            (col + 1 < cols).then(|| Cell::new(row, col + 1)),
        ]
        .into_iter()
        .flatten()
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum InitialTempDoc {
    Uniform(f64),
    Grid(Vec<Vec<f64>>),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    rows: usize,
    cols: usize,
    pattern: Vec<Vec<u8>>,
    initial_temp: InitialTempDoc,
    temp_lower: f64,
    temp_upper: f64,
    alpha: f64,
    heat_input: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    boundary_policy: Option<BoundaryPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bound_window: Option<BoundWindow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    horizon: Option<usize>,
}

/// Parses and validates a JSON scenario document.
pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let doc: ScenarioDoc = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if doc.pattern.len() != doc.rows {
        return Err(ScenarioError::DimensionMismatch {
            field: "pattern".into(),
            expected: format!("{} rows", doc.rows),
            found: format!("{} rows", doc.pattern.len()),
        });
    }
    let pattern = PrintPattern::from_rows(&doc.pattern)?;
    let initial_temp = match doc.initial_temp {
        InitialTempDoc::Uniform(v) => TemperatureField::uniform(doc.rows, doc.cols, v),
        InitialTempDoc::Grid(rows) => {
            if rows.len() != doc.rows {
                return Err(ScenarioError::DimensionMismatch {
                    field: "initial_temp".into(),
                    expected: format!("{} rows", doc.rows),
                    found: format!("{} rows", rows.len()),
                });
            }
            TemperatureField::from_rows(&rows)?
        }
    };
    let scenario = Scenario {
        rows: doc.rows,
        cols: doc.cols,
        pattern,
        initial_temp,
        temp_lower: doc.temp_lower,
        temp_upper: doc.temp_upper,
        alpha: doc.alpha,
        heat_input: doc.heat_input,
        boundary_policy: doc.boundary_policy.unwrap_or_default(),
        bound_window: doc.bound_window.unwrap_or_default(),
        horizon: doc.horizon,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Serializes a scenario to its JSON document form.
pub fn save_scenario(scenario: &Scenario) -> String {
    let initial_temp = match scenario.initial_temp.uniform_value() {
        Some(v) => InitialTempDoc::Uniform(v),
        None => InitialTempDoc::Grid(scenario.initial_temp.to_rows()),
    };
    let doc = ScenarioDoc {
        rows: scenario.rows,
        cols: scenario.cols,
        pattern: scenario.pattern.to_rows(),
        initial_temp,
        temp_lower: scenario.temp_lower,
        temp_upper: scenario.temp_upper,
        alpha: scenario.alpha,
        heat_input: scenario.heat_input,
        boundary_policy: Some(scenario.boundary_policy),
        bound_window: Some(scenario.bound_window),
        horizon: scenario.horizon,
    };
    serde_json::to_string_pretty(&doc).expect("scenario documents always serialize")
}
