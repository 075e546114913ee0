//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use thermopath::encoder::encode;
use thermopath::milp::write_lp;
use thermopath::scenario::{diagonal_pattern, BoundWindow, BoundaryPolicy, Scenario, TemperatureField};

/// The 3x3 diagonal scenario with loose bounds and horizon 10.
pub fn worked() -> Scenario {
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

/// `(coefficients, relation, rhs)` with variables on the left, constants on
/// the right, `>=` turned into `<=`, and equalities scaled so the first
/// variable has a positive coefficient.
pub type Row = (BTreeMap<String, i64>, &'static str, i64);

/// Parses `a x + b y ... rel c ...` where both sides are sums of
/// `[coef] name` or constant terms. Coefficients are kept in halves.
pub fn normalize(text: &str) -> Row {
    let (rel, pos) = ["<=", ">=", "="]
        .iter()
        .find_map(|r| text.find(r).map(|p| (*r, p)))
        .expect("relation");
    let (lhs, rhs) = (&text[..pos], &text[pos + rel.len()..]);
    let mut coefs: BTreeMap<String, i64> = BTreeMap::new();
    let mut constant = 0i64;
    for (side, sign) in [(lhs, 1i64), (rhs, -1i64)] {
        let mut s = 1i64;
        let mut toks = side.split_whitespace().peekable();
        while let Some(tok) = toks.next() {
            match tok {
                "+" => s = 1,
                "-" => s = -1,
                _ if tok.starts_with(|c: char| c.is_ascii_alphabetic()) => {
                    *coefs.entry(tok.to_string()).or_default() += sign * s * 2;
                }
                _ => {
                    let v: f64 = tok.parse().expect("number");
                    let halves = sign * s * (2.0 * v) as i64;
                    match toks.peek() {
                        Some(n) if n.starts_with(|c: char| c.is_ascii_alphabetic()) => {
                            *coefs.entry(toks.next().unwrap().to_string()).or_default() += halves;
                        }
                        _ => constant -= halves,
                    }
                }
            }
        }
    }
    coefs.retain(|_, c| *c != 0);
    let mut rel: &'static str = match rel {
        ">=" => ">=",
        "<=" => "<=",
        _ => "=",
    };
    let flip = match rel {
        ">=" => true,
        "=" => coefs.values().next().is_some_and(|&c| c < 0),
        _ => false,
    };
    if flip {
        coefs.values_mut().for_each(|c| *c = -*c);
        constant = -constant;
        if rel == ">=" {
            rel = "<=";
        }
    }
    (coefs, rel, constant)
}

/// The named row of an LP file, continuation lines joined; empty if absent.
pub fn lp_row(lp: &str, name: &str) -> String {
    let head = format!(" {name}:");
    let mut lines = lp.lines().skip_while(|l| !l.starts_with(&head));
    let Some(first) = lines.next() else {
        return String::new();
    };
    let mut row = first[head.len()..].to_string();
    for l in lines.take_while(|l| l.starts_with("   ")) {
        row.push(' ');
        row.push_str(l.trim());
    }
    row
}

pub fn sum(items: impl Iterator<Item = String>) -> String {
    items.collect::<Vec<_>>().join(" + ")
}

fn assert_row(lp: &str, name: &str, expected: &str) {
    assert_eq!(normalize(&lp_row(lp, name)), normalize(expected), "row {name}");
}

/// Checks the example rows of `lp`; returns the names that differ.
pub fn worked_row_mismatches(lp: &str) -> Vec<String> {
    let mut bad = Vec::new();
    let mut check = |lp: &str, name: &str, expected: &str| {
        let got = lp_row(lp, name);
        if got.is_empty() || normalize(&got) != normalize(expected) {
            bad.push(name.to_string());
        }
    };

    // Heat step at the centre and at a corner, instant 0 to 1.
    check(
        lp,
        "c1_1_1_0",
        "T_1_1_1 = T_1_1_0 + 0.5 T_2_1_0 - 0.5 T_0_1_0 + 0.5 T_1_2_0 - 0.5 T_1_0_0 + u_1_1_0",
    );
    check(
        lp,
        "c1_0_0_0",
        "T_0_0_1 = T_0_0_0 + 0.5 T_1_0_0 - 0.5 T_0_0_0 + 0.5 T_0_1_0 - 0.5 T_0_0_0 + u_0_0_0",
    );

    // Coverage for a pattern cell and a blank cell.
    let u = |i: usize, j: usize| sum((0..=10).map(move |k| format!("u_{i}_{j}_{k}")));
    check(lp, "c2_1_1", &format!("{} = 1", u(1, 1)));
    check(lp, "c2_0_1", &format!("{} = 0", u(0, 1)));

    check(lp, "c3_1_1_2", "u_1_1_2 <= p_1_1_2");
    check(lp, "c3_0_1_2", "u_0_1_2 <= p_0_1_2");

    let cells: Vec<(usize, usize)> = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).collect();
    let positions = sum(cells.iter().map(|(i, j)| format!("p_{i}_{j}_2")));
    check(lp, "c4_2", &format!("{positions} = 1"));

    check(
        lp,
        "c5_1_1_1",
        "p_1_1_1 <= p_1_1_2 + p_0_1_2 + p_2_1_2 + p_1_0_2 + p_1_2_2",
    );
    check(lp, "c5_0_0_1", "p_0_0_1 <= p_0_0_2 + p_1_0_2 + p_0_1_2");

    let prints = cells
        .iter()
        .map(|(i, j)| format!("20 u_{i}_{j}_1"))
        .collect::<Vec<_>>()
        .join(" + ");
    check(lp, "mk_1", &format!("m >= 1 - 20 + {prints}"));

    // Temperature bounds are variable bounds.
    if !lp.lines().any(|l| l.trim() == "0 <= T_1_1_1 <= 200") {
        bad.push("bound on T_1_1_1".to_string());
    }
    bad
}

pub fn worked_lp() -> String {
    let (model, _) = encode(&worked(), 10).unwrap();
    write_lp(&model)
}
