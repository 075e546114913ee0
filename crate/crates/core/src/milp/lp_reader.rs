//! Minimal reader for the LP subset emitted by `write_lp`. Test-only; it
//! exists to check that the writer's output is a faithful encoding.

use std::collections::HashMap;

use super::model::{LinExpr, MilpModel, Relation, Sense, VarKind};

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Objective,
    Constraints,
    Bounds,
    Generals,
    Binaries,
}

fn parse_num(tok: &str) -> Option<f64> {
    match tok {
        "inf" | "+inf" | "infinity" => Some(f64::INFINITY),
        "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
        _ => tok.parse().ok(),
    }
}

/// Parses `[+|-] [coef] name ...` token streams into (name, coef) pairs.
fn parse_terms(tokens: &[&str]) -> Result<Vec<(String, f64)>, String> {
    let mut out = Vec::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    for &tok in tokens {
        match tok {
            "+" => sign = 1.0,
            "-" => sign = -1.0,
            _ => {
                if let Some(num) = parse_num(tok) {
                    coef = Some(num);
                } else {
                    out.push((tok.to_string(), sign * coef.unwrap_or(1.0)));
                    sign = 1.0;
                    coef = None;
                }
            }
        }
    }
    match coef {
        Some(c) if c != 0.0 => Err(format!("dangling constant {c}")),
        _ => Ok(out),
    }
}

struct PendingVar {
    lower: f64,
    upper: f64,
    kind: VarKind,
}

pub(crate) fn read_lp(text: &str) -> Result<MilpModel, String> {
    let mut section = Section::None;
    let mut statements: Vec<(Section, String)> = Vec::new();
    for raw in text.lines() {
        if raw.starts_with('\\') {
            continue;
        }
        let trimmed = raw.trim();
        let header = match trimmed {
            "Minimize" => Some(Section::Objective),
            "Subject To" => Some(Section::Constraints),
            "Bounds" => Some(Section::Bounds),
            "Generals" => Some(Section::Generals),
            "Binaries" => Some(Section::Binaries),
            "End" => Some(Section::None),
            _ => None,
        };
        if let Some(h) = header {
            section = h;
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        // Continuation lines are indented by two spaces.
        if raw.starts_with("  ") && matches!(section, Section::Objective | Section::Constraints) {
            let last = statements.last_mut().ok_or("continuation without statement")?;
            last.1.push(' ');
            last.1.push_str(trimmed);
        } else {
            statements.push((section, trimmed.to_string()));
        }
    }

    // First pass: collect variable names in order of first appearance.
    let mut order: Vec<String> = Vec::new();
    let mut vars: HashMap<String, PendingVar> = HashMap::new();
    fn note(name: &str, order: &mut Vec<String>, vars: &mut HashMap<String, PendingVar>) {
        if !vars.contains_key(name) {
            vars.insert(
                name.to_string(),
                PendingVar {
                    lower: 0.0,
                    upper: f64::INFINITY,
                    kind: VarKind::Real,
                },
            );
            order.push(name.to_string());
        }
    }
    let mut objective = Vec::new();
    let mut rows = Vec::new();
    let mut bound_lines = Vec::new();
    for (sec, stmt) in &statements {
        match sec {
            Section::Objective => {
                let (_, body) = stmt.split_once(':').ok_or("objective without label")?;
                let toks: Vec<&str> = body.split_whitespace().collect();
                objective = parse_terms(&toks)?;
                for (n, _) in &objective {
                    note(n, &mut order, &mut vars);
                }
            }
            Section::Constraints => {
                let (name, body) = stmt.split_once(':').ok_or("row without label")?;
                let toks: Vec<&str> = body.split_whitespace().collect();
                let pos = toks
                    .iter()
                    .position(|t| matches!(*t, "<=" | ">=" | "="))
                    .ok_or("row without relation")?;
                let rel = match toks[pos] {
                    "<=" => Relation::Le,
                    ">=" => Relation::Ge,
                    _ => Relation::Eq,
                };
                let rhs = parse_num(toks[pos + 1]).ok_or("bad rhs")?;
                let terms = parse_terms(&toks[..pos])?;
                for (n, _) in &terms {
                    note(n, &mut order, &mut vars);
                }
                rows.push((name.trim().to_string(), terms, rel, rhs));
            }
            Section::Bounds => bound_lines.push(stmt.clone()),
            Section::Generals | Section::Binaries => {
                let kind = if *sec == Section::Generals {
                    VarKind::Integer
                } else {
                    VarKind::Binary
                };
                for n in stmt.split_whitespace() {
                    note(n, &mut order, &mut vars);
                    vars.get_mut(n).unwrap().kind = kind;
                }
            }
            Section::None => return Err(format!("statement outside a section: {stmt}")),
        }
    }
    for line in bound_lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            [name, "free"] => {
                note(name, &mut order, &mut vars);
                let v = vars.get_mut(*name).unwrap();
                v.lower = f64::NEG_INFINITY;
                v.upper = f64::INFINITY;
            }
            [name, "=", val] => {
                note(name, &mut order, &mut vars);
                let x = parse_num(val).ok_or("bad bound")?;
                let v = vars.get_mut(*name).unwrap();
                v.lower = x;
                v.upper = x;
            }
            [name, ">=", val] => {
                note(name, &mut order, &mut vars);
                vars.get_mut(*name).unwrap().lower = parse_num(val).ok_or("bad bound")?;
            }
            [lo, "<=", name, "<=", hi] => {
                note(name, &mut order, &mut vars);
                let v = vars.get_mut(*name).unwrap();
                v.lower = parse_num(lo).ok_or("bad bound")?;
                v.upper = parse_num(hi).ok_or("bad bound")?;
            }
            _ => return Err(format!("unsupported bound line: {line}")),
        }
    }

    // The writer lists every variable somewhere only if it is used or bounded;
    // unused default-bounded reals are not recoverable, so callers compare
    // models whose variables all appear.
    let mut model = MilpModel::new();
    let mut refs = HashMap::new();
    for name in &order {
        let v = &vars[name];
        let r = model
            .add_variable(name.clone(), v.kind, v.lower, v.upper)
            .map_err(|e| e.to_string())?;
        refs.insert(name.clone(), r);
    }
    for (name, terms, rel, rhs) in rows {
        let expr: LinExpr = terms.iter().map(|(n, c)| (refs[n], *c)).collect();
        model
            .add_constraint(name, expr, rel, rhs)
            .map_err(|e| e.to_string())?;
    }
    let expr: LinExpr = objective.iter().map(|(n, c)| (refs[n], *c)).collect();
    model
        .set_objective(Sense::Minimize, expr)
        .map_err(|e| e.to_string())?;
    Ok(model)
}
