//! Runs an external MILP solver as `<command> <model.lp> <solution.sol>`.
//!
//! The command is run through `sh -c`, so it may carry its own arguments. The
//! solution file holds `name value` lines. Optional comment lines
//! `# status optimal|infeasible|timelimit` and `# bound <value>` refine the
//! outcome; without them a present solution means optimal and an absent or
//! empty one means infeasible.

use std::fs;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use crate::milp::{parse_solution, write_lp, Assignment, MilpModel};

use super::{SolveOptions, SolveResult, SolveStats, SolveStatus, SolverError};

/// Row and bound slack accepted from an external solution.
pub const EXTERNAL_TOLERANCE: f64 = 1e-4;

pub fn solve_external(
    model: &MilpModel,
    command: &str,
    options: &SolveOptions,
) -> Result<SolveResult, SolverError> {
    let start = Instant::now();
    let dir = tempfile::tempdir()?;
    let lp_path = dir.path().join("model.lp");
    let sol_path = dir.path().join("model.sol");
    fs::write(&lp_path, write_lp(model))?;

    let mut child = Command::new("sh")
        .arg("-c")
        .arg(format!("{command} \"$@\""))
        .arg("sh")
        .arg(&lp_path)
        .arg(&sol_path)
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()?;
    let deadline = start + options.time_limit;
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break Some(status);
        }
        if Instant::now() >= deadline {
            let _ = child.kill();
            let _ = child.wait();
            break None;
        }
        thread::sleep(Duration::from_millis(5));
    };
    let stats = |start: Instant| SolveStats {
        nodes: 0,
        simplex_iterations: 0,
        wall_time: start.elapsed(),
    };
    let Some(status) = status else {
        return Ok(SolveResult {
            status: SolveStatus::BoundOnly,
            assignment: None,
            objective: None,
            best_bound: f64::NEG_INFINITY,
            stats: stats(start),
        });
    };
    if !status.success() {
        let stderr = child
            .stderr
            .take()
            .map(|mut s| {
                let mut buf = String::new();
                let _ = std::io::Read::read_to_string(&mut s, &mut buf);
                buf
            })
            .unwrap_or_default();
        return Err(SolverError::CommandFailed {
            status: status.to_string(),
            stderr: stderr.trim().to_string(),
        });
    }

    let text = fs::read_to_string(&sol_path).unwrap_or_default();
    let mut declared = None;
    let mut bound = None;
    for line in text.lines() {
        let mut words = line.trim().trim_start_matches('#').split_whitespace();
        if !line.trim_start().starts_with('#') {
            continue;
        }
        match (words.next(), words.next()) {
            (Some("status"), Some(s)) => declared = Some(s.to_ascii_lowercase()),
            (Some("bound"), Some(v)) => bound = v.parse::<f64>().ok(),
            _ => {}
        }
    }
    let has_values = text
        .lines()
        .any(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));

    if declared.as_deref() == Some("infeasible") || !has_values {
        let status = match declared.as_deref() {
            Some("timelimit") => SolveStatus::BoundOnly,
            _ => SolveStatus::Infeasible,
        };
        let best_bound = match status {
            SolveStatus::Infeasible => f64::INFINITY,
            _ => bound.unwrap_or(f64::NEG_INFINITY),
        };
        return Ok(SolveResult {
            status,
            assignment: None,
            objective: None,
            best_bound,
            stats: stats(start),
        });
    }

    let (assignment, _warnings) = parse_solution(&text, model)?;
    let violations = assignment.violations(model, EXTERNAL_TOLERANCE, EXTERNAL_TOLERANCE);
    if !violations.is_empty() {
        let shown: Vec<String> = violations.iter().take(5).map(|v| v.to_string()).collect();
        return Err(SolverError::SolutionRejected(format!(
            "{} violation(s): {}",
            violations.len(),
            shown.join("; ")
        )));
    }
    let mut values = assignment.values().to_vec();
    for (x, var) in values.iter_mut().zip(model.variables()) {
        if var.kind.is_integral() {
            *x = x.round();
        }
    }
    let assignment = Assignment::new(values);
    let objective = model.objective_value(assignment.values());
    let status = match declared.as_deref() {
        Some("timelimit") => SolveStatus::TimedOut,
        _ => SolveStatus::Optimal,
    };
    let best_bound = match status {
        SolveStatus::Optimal => objective,
        _ => bound.unwrap_or(f64::NEG_INFINITY).min(objective),
    };
    Ok(SolveResult {
        status,
        assignment: Some(assignment),
        objective: Some(objective),
        best_bound,
        stats: stats(start),
    })
}
