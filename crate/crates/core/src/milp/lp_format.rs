use std::fmt::Write;

use super::model::{MilpModel, VarKind, VarRef};

const TERMS_PER_LINE: usize = 8;

/// Formats a double so that parsing it back yields the same bits.
pub(crate) fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x}")
    }
}

fn write_expr(out: &mut String, model: &MilpModel, terms: &[(VarRef, f64)]) {
    if terms.is_empty() {
        out.push_str(" 0");
        return;
    }
    for (k, &(var, coef)) in terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n  ");
        }
        let name = &model.variable(var).name;
        let sign = if coef < 0.0 { "-" } else { "+" };
        let mag = coef.abs();
        if k == 0 && sign == "+" {
            out.push(' ');
        } else {
            let _ = write!(out, " {sign} ");
        }
        if mag != 1.0 {
            let _ = write!(out, "{} ", fmt_num(mag));
        }
        out.push_str(name);
    }
}

/// Serializes the model in CPLEX LP format.
///
/// Rows and variables appear in insertion order, so equal models produce
/// byte-identical text.
pub fn write_lp(model: &MilpModel) -> String {
    let mut out = String::new();
    out.push_str("\\ thermopath MILP model\n");
    out.push_str("Minimize\n obj:");
    write_expr(&mut out, model, model.objective());
    out.push_str("\nSubject To\n");
    for c in model.constraints() {
        let _ = write!(out, " {}:", c.name);
        write_expr(&mut out, model, &c.terms);
        let _ = writeln!(out, " {} {}", c.relation.symbol(), fmt_num(c.rhs));
    }

    out.push_str("Bounds\n");
    for v in model.variables() {
        if v.kind == VarKind::Binary {
            continue;
        }
        let (lo, hi) = (v.lower, v.upper);
        let line = if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            format!(" {} free", v.name)
        } else if lo == hi {
            format!(" {} = {}", v.name, fmt_num(lo))
        } else if hi == f64::INFINITY {
            if lo == 0.0 {
                continue;
            }
            format!(" {} >= {}", v.name, fmt_num(lo))
        } else if lo == f64::NEG_INFINITY {
            format!(" -inf <= {} <= {}", v.name, fmt_num(hi))
        } else {
            format!(" {} <= {} <= {}", fmt_num(lo), v.name, fmt_num(hi))
        };
        out.push_str(&line);
        out.push('\n');
    }

    for (header, kind) in [("Generals", VarKind::Integer), ("Binaries", VarKind::Binary)] {
        let names: Vec<&str> = model
            .variables()
            .iter()
            .filter(|v| v.kind == kind)
            .map(|v| v.name.as_str())
            .collect();
        if names.is_empty() {
            continue;
        }
        out.push_str(header);
        out.push('\n');
        for chunk in names.chunks(TERMS_PER_LINE) {
            out.push(' ');
            out.push_str(&chunk.join(" "));
            out.push('\n');
        }
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::lp_reader::read_lp;
    use crate::milp::{LinExpr, Relation, Sense};
    use proptest::prelude::*;

    #[test]
    fn minimal_model() {
        let mut m = MilpModel::new();
        let x = m.add_variable("x", VarKind::Real, 0.0, f64::INFINITY).unwrap();
        m.add_constraint("c0", LinExpr::new().term(x, 1.0), Relation::Ge, 1.0)
            .unwrap();
        m.set_objective(Sense::Minimize, LinExpr::new().term(x, 1.0))
            .unwrap();
        let text = write_lp(&m);
        let lines: Vec<&str> = text.lines().collect();
        for want in ["Minimize", " obj: x", "Subject To", " c0: x >= 1", "End"] {
            assert!(lines.contains(&want), "missing {want:?} in\n{text}");
        }
    }

    #[test]
    fn sections_for_kinds() {
        let mut m = MilpModel::new();
        m.add_variable("b", VarKind::Binary, 0.0, 1.0).unwrap();
        m.add_variable("n", VarKind::Integer, 0.0, 20.0).unwrap();
        m.add_variable("t", VarKind::Real, f64::NEG_INFINITY, f64::INFINITY)
            .unwrap();
        let text = write_lp(&m);
        let section = |name: &str| -> Vec<String> {
            let start = text.find(&format!("{name}\n")).unwrap() + name.len() + 1;
            text[start..]
                .lines()
                .take_while(|l| l.starts_with(' '))
                .map(str::to_string)
                .collect()
        };
        assert_eq!(section("Binaries"), vec![" b"]);
        assert_eq!(section("Generals"), vec![" n"]);
        assert_eq!(section("Bounds"), vec![" 0 <= n <= 20", " t free"]);
    }

    #[test]
    fn long_rows_wrap_and_signs() {
        let mut m = MilpModel::new();
        let vars: Vec<_> = (0..20)
            .map(|i| m.add_variable(format!("x{i}"), VarKind::Real, 0.0, 1.0).unwrap())
            .collect();
        let expr: LinExpr = vars.iter().enumerate().map(|(i, &v)| (v, if i % 2 == 0 { -0.5 } else { 3.0 })).collect();
        m.add_constraint("big", expr, Relation::Le, -19.0).unwrap();
        let text = write_lp(&m);
        assert!(text.contains(" big: - 0.5 x0 + 3 x1 - 0.5 x2"), "{text}");
        assert!(text.contains("\n   - 0.5 x8 + 3 x9"), "{text}");
        assert!(text.contains("+ 3 x19 <= -19\n"), "{text}");
    }

    fn arb_model() -> impl Strategy<Value = MilpModel> {
        let bound = prop_oneof![
            Just(f64::NEG_INFINITY),
            Just(f64::INFINITY),
            (-1e6f64..1e6),
            Just(0.0),
        ];
        let var = (0u8..3, bound.clone(), bound);
        (
            proptest::collection::vec(var, 1..8),
            proptest::collection::vec(
                (
                    proptest::collection::vec((0usize..8, -1e3f64..1e3), 0..6),
                    0u8..3,
                    -1e4f64..1e4,
                ),
                0..6,
            ),
            proptest::collection::vec((0usize..8, -10f64..10.0), 0..4),
        )
            .prop_map(|(vars, rows, obj)| {
                let mut m = MilpModel::new();
                let mut refs = Vec::new();
                for (i, (kind, a, b)) in vars.into_iter().enumerate() {
                    let kind = [VarKind::Real, VarKind::Integer, VarKind::Binary][kind as usize];
                    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                    let (lo, hi) = if lo == hi && lo.is_infinite() { (0.0, hi.max(0.0)) } else { (lo, hi) };
                    refs.push(m.add_variable(format!("v{i}"), kind, lo, hi).unwrap());
                }
                for (r, (terms, rel, rhs)) in rows.into_iter().enumerate() {
                    let expr: LinExpr = terms.into_iter().map(|(v, c)| (refs[v % refs.len()], c)).collect();
                    let rel = [Relation::Le, Relation::Eq, Relation::Ge][rel as usize];
                    m.add_constraint(format!("r{r}"), expr, rel, rhs).unwrap();
                }
                let expr: LinExpr = obj.into_iter().map(|(v, c)| (refs[v % refs.len()], c)).collect();
                m.set_objective(Sense::Minimize, expr).unwrap();
                m
            })
    }

    proptest! {
        #[test]
        fn written_model_reads_back_equivalent(m in arb_model()) {
            let text = write_lp(&m);
            prop_assert_eq!(&text, &write_lp(&m));
            let back = read_lp(&text).unwrap();
            for v in m.variables() {
                match back.var_by_name(&v.name) {
                    Some(r) => prop_assert_eq!(back.variable(r), v),
                    // Unreferenced reals with default bounds leave no trace in LP text.
                    None => prop_assert!(v.kind == VarKind::Real && v.lower == 0.0 && v.upper == f64::INFINITY),
                }
            }
            let named = |model: &MilpModel, terms: &[(VarRef, f64)]| -> Vec<(String, f64)> {
                terms.iter().map(|&(v, c)| (model.variable(v).name.clone(), c)).collect()
            };
            prop_assert_eq!(back.num_constraints(), m.num_constraints());
            for (a, b) in m.constraints().iter().zip(back.constraints()) {
                prop_assert_eq!(&a.name, &b.name);
                prop_assert_eq!(a.relation, b.relation);
                prop_assert_eq!(a.rhs, b.rhs);
                prop_assert_eq!(named(&m, &a.terms), named(&back, &b.terms));
            }
            prop_assert_eq!(named(&m, m.objective()), named(&back, back.objective()));
        }
    }
}
