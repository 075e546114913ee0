//! Activity-based bound tightening for integral variables.
//!
//! For a row `lo <= sum a_j x_j <= hi`, the minimum and maximum activity over
//! the current box bound what any single term can contribute; integral
//! variables get their bounds rounded inward. Rows are revisited whenever a
//! variable they mention is tightened.

use std::collections::VecDeque;

use crate::milp::{MilpModel, Relation};

const FEAS_TOL: f64 = 1e-6;
const ROUND_TOL: f64 = 1e-6;

struct Row {
    terms: Vec<(usize, f64)>,
    lo: f64,
    hi: f64,
}

pub(crate) struct Propagator {
    rows: Vec<Row>,
    col_rows: Vec<Vec<usize>>,
    integral: Vec<bool>,
}

/// Sum of finite contributions plus the count of infinite ones.
#[derive(Clone, Copy)]
struct Activity {
    finite: f64,
    infinite: u32,
}

impl Propagator {
    pub fn new(model: &MilpModel) -> Self {
        let n = model.num_vars();
        let mut col_rows = vec![Vec::new(); n];
        let rows = model
            .constraints()
            .iter()
            .enumerate()
            .map(|(r, c)| {
                for &(v, _) in &c.terms {
                    col_rows[v.index()].push(r);
                }
                let (lo, hi) = match c.relation {
                    Relation::Le => (f64::NEG_INFINITY, c.rhs),
                    Relation::Ge => (c.rhs, f64::INFINITY),
                    Relation::Eq => (c.rhs, c.rhs),
                };
                Row {
                    terms: c.terms.iter().map(|&(v, a)| (v.index(), a)).collect(),
                    lo,
                    hi,
                }
            })
            .collect();
        let integral = model.variables().iter().map(|v| v.kind.is_integral()).collect();
        Self {
            rows,
            col_rows,
            integral,
        }
    }

    /// Tightens `lo`/`hi` in place. `seeds` lists variables whose bounds
    /// changed; `None` visits every row. Returns false on proven infeasibility.
    pub fn propagate(&self, lo: &mut [f64], hi: &mut [f64], seeds: Option<&[usize]>) -> bool {
        let nrows = self.rows.len();
        let mut queued = vec![false; nrows];
        let mut queue = VecDeque::new();
        match seeds {
            None => {
                queue.extend(0..nrows);
                queued.iter_mut().for_each(|q| *q = true);
            }
            Some(vars) => {
                for &v in vars {
                    for &r in &self.col_rows[v] {
                        if !queued[r] {
                            queued[r] = true;
                            queue.push_back(r);
                        }
                    }
                }
            }
        }
        let mut visits = 0usize;
        let budget = 50 * nrows.max(1);
        while let Some(r) = queue.pop_front() {
            queued[r] = false;
            visits += 1;
            if visits > budget {
                break;
            }
            let row = &self.rows[r];
            let (min_act, max_act) = activities(row, lo, hi);
            if min_act.infinite == 0 && min_act.finite > row.hi + FEAS_TOL * (1.0 + row.hi.abs()) {
                return false;
            }
            if max_act.infinite == 0 && max_act.finite < row.lo - FEAS_TOL * (1.0 + row.lo.abs()) {
                return false;
            }
            for &(j, a) in &row.terms {
                if !self.integral[j] {
                    continue;
                }
                let (cmin, cmax) = if a > 0.0 {
                    (a * lo[j], a * hi[j])
                } else {
                    (a * hi[j], a * lo[j])
                };
                // Residual activity of the other terms.
                let rest_min = residual(min_act, cmin);
                let rest_max = residual(max_act, cmax);
                let mut new_lo = lo[j];
                let mut new_hi = hi[j];
                if row.hi.is_finite() {
                    if let Some(rest) = rest_min {
                        let limit = (row.hi - rest) / a;
                        if a > 0.0 {
                            new_hi = new_hi.min((limit + ROUND_TOL).floor());
                        } else {
                            new_lo = new_lo.max((limit - ROUND_TOL).ceil());
                        }
                    }
                }
                if row.lo.is_finite() {
                    if let Some(rest) = rest_max {
                        let limit = (row.lo - rest) / a;
                        if a > 0.0 {
                            new_lo = new_lo.max((limit - ROUND_TOL).ceil());
                        } else {
                            new_hi = new_hi.min((limit + ROUND_TOL).floor());
                        }
                    }
                }
                if new_lo > lo[j] || new_hi < hi[j] {
                    if new_lo > new_hi {
                        return false;
                    }
                    lo[j] = new_lo;
                    hi[j] = new_hi;
                    for &r2 in &self.col_rows[j] {
                        if !queued[r2] {
                            queued[r2] = true;
                            queue.push_back(r2);
                        }
                    }
                }
            }
        }
        true
    }
}

fn activities(row: &Row, lo: &[f64], hi: &[f64]) -> (Activity, Activity) {
    let mut min = Activity {
        finite: 0.0,
        infinite: 0,
    };
    let mut max = min;
    for &(j, a) in &row.terms {
        let (cmin, cmax) = if a > 0.0 {
            (a * lo[j], a * hi[j])
        } else {
            (a * hi[j], a * lo[j])
        };
        if cmin.is_finite() {
            min.finite += cmin;
        } else {
            min.infinite += 1;
        }
        if cmax.is_finite() {
            max.finite += cmax;
        } else {
            max.infinite += 1;
        }
    }
    (min, max)
}

/// Activity of the row without one term whose contribution is `own`.
fn residual(total: Activity, own: f64) -> Option<f64> {
    match (total.infinite, own.is_finite()) {
        (0, _) => Some(total.finite - own),
        (1, false) => Some(total.finite),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{LinExpr, VarKind};

    #[test]
    fn big_m_row_fixes_late_prints() {
        // m - 20 u >= k - 20 with m <= 3 forces u = 0 for k = 5.
        let mut model = MilpModel::new();
        let m = model.add_variable("m", VarKind::Integer, 0.0, 10.0).unwrap();
        let u = model.add_variable("u", VarKind::Binary, 0.0, 1.0).unwrap();
        model
            .add_constraint("mk", LinExpr::new().term(m, 1.0).term(u, -20.0), Relation::Ge, -15.0)
            .unwrap();
        let p = Propagator::new(&model);
        let mut lo = vec![0.0, 0.0];
        let mut hi = vec![3.0, 1.0];
        assert!(p.propagate(&mut lo, &mut hi, None));
        assert_eq!(hi[1], 0.0);

        let mut lo = vec![0.0, 1.0];
        let mut hi = vec![3.0, 1.0];
        assert!(!p.propagate(&mut lo, &mut hi, Some(&[1])));
    }

    #[test]
    fn cardinality_row_fixes_rest() {
        let mut model = MilpModel::new();
        let vars: Vec<_> = (0..4)
            .map(|i| model.add_variable(format!("p{i}"), VarKind::Binary, 0.0, 1.0).unwrap())
            .collect();
        model
            .add_constraint("one", vars.iter().map(|&v| (v, 1.0)).collect(), Relation::Eq, 1.0)
            .unwrap();
        let p = Propagator::new(&model);
        let mut lo = vec![0.0, 0.0, 1.0, 0.0];
        let mut hi = vec![1.0; 4];
        assert!(p.propagate(&mut lo, &mut hi, Some(&[2])));
        assert_eq!(hi, vec![0.0, 0.0, 1.0, 0.0]);

        let mut lo = vec![0.0; 4];
        let mut hi = vec![0.0, 0.0, 0.0, 1.0];
        assert!(p.propagate(&mut lo, &mut hi, None));
        assert_eq!(lo[3], 1.0);
    }
}
