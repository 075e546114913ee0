use std::fmt::Write;

use super::lp_format::fmt_num;
use super::model::{MilpModel, VarRef};
use super::MilpError;

/// A value for every variable of one model, indexed by [`VarRef`].
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    values: Vec<f64>,
}

/// A constraint, bound or integrality requirement an assignment breaks.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Row { name: String, activity: f64, excess: f64 },
    Bound { name: String, value: f64, lower: f64, upper: f64 },
    Integrality { name: String, value: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Row { name, activity, excess } => {
                write!(f, "row {name} violated by {excess} (activity {activity})")
            }
            Violation::Bound { name, value, lower, upper } => {
                write!(f, "variable {name} = {value} outside [{lower}, {upper}]")
            }
            Violation::Integrality { name, value } => {
                write!(f, "integer variable {name} has fractional value {value}")
            }
        }
    }
}

impl Assignment {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn get(&self, var: VarRef) -> f64 {
        self.values[var.index()]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Every requirement violated beyond `tol` (rows and bounds) or `int_tol`
    /// (integrality).
    pub fn violations(&self, model: &MilpModel, tol: f64, int_tol: f64) -> Vec<Violation> {
        let mut out = Vec::new();
        for (v, &value) in model.variables().iter().zip(&self.values) {
            if !value.is_finite() || value < v.lower - tol || value > v.upper + tol {
                out.push(Violation::Bound {
                    name: v.name.clone(),
                    value,
                    lower: v.lower,
                    upper: v.upper,
                });
            }
            if v.kind.is_integral() && (value - value.round()).abs() > int_tol {
                out.push(Violation::Integrality {
                    name: v.name.clone(),
                    value,
                });
            }
        }
        for c in model.constraints() {
            let activity = c.activity(&self.values);
            let excess = c.violation(activity);
            if excess > tol || activity.is_nan() {
                out.push(Violation::Row {
                    name: c.name.clone(),
                    activity,
                    excess,
                });
            }
        }
        out
    }
}

/// Parses `name value` lines. `#` starts a comment line. Variables the text
/// does not mention default to 0 and are reported as warnings.
pub fn parse_solution(
    text: &str,
    model: &MilpModel,
) -> Result<(Assignment, Vec<String>), MilpError> {
    let mut values = vec![0.0; model.num_vars()];
    let mut seen = vec![false; model.num_vars()];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || MilpError::BadSolutionLine {
            line: lineno + 1,
            text: line.to_string(),
        };
        let mut toks = line.split_whitespace();
        let (Some(name), Some(value), None) = (toks.next(), toks.next(), toks.next()) else {
            return Err(bad());
        };
        let var = model
            .var_by_name(name)
            .ok_or_else(|| MilpError::UnknownVariable(name.to_string()))?;
        let value: f64 = value.parse().map_err(|_| bad())?;
        values[var.index()] = value;
        seen[var.index()] = true;
    }
    let warnings = model
        .variables()
        .iter()
        .zip(&seen)
        .filter(|(_, &s)| !s)
        .map(|(v, _)| format!("variable {} missing from solution; defaulting to 0", v.name))
        .collect();
    Ok((Assignment::new(values), warnings))
}

/// Writes an assignment in the `name value` solution format.
pub fn write_solution(model: &MilpModel, assignment: &Assignment, objective: Option<f64>) -> String {
    let mut out = String::new();
    if let Some(obj) = objective {
        let _ = writeln!(out, "# objective {}", fmt_num(obj));
    }
    for (v, &x) in model.variables().iter().zip(assignment.values()) {
        let _ = writeln!(out, "{} {}", v.name, fmt_num(x));
    }
    out
}
