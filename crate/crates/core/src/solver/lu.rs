//! Sparse LU factorization of a simplex basis with product-form updates.
//!
//! Elimination picks singletons first, then a Markowitz pivot subject to a
//! threshold test. The row operations are stored as L etas and the frozen
//! pivot rows as U. Basis changes append column etas until the next
//! refactorization.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

const PIVOT_THRESHOLD: f64 = 0.01;
const SINGULAR_TOL: f64 = 1e-11;
const DROP_TOL: f64 = 1e-14;
/// Columns examined per Markowitz search.
const SEARCH_COLUMNS: usize = 4;

#[derive(Debug, Clone, Default)]
pub(crate) struct Factor {
    /// Pivot row and basis slot of elimination step `k`.
    prow: Vec<usize>,
    pcol: Vec<usize>,
    /// Row operations of step `k`: `b[i] -= l * b[prow[k]]`.
    lower: Vec<Vec<(usize, f64)>>,
    /// Pivot value and the off-pivot entries (by slot) of the frozen row.
    upper: Vec<(f64, Vec<(usize, f64)>)>,
    /// Product-form updates: slot, pivot entry, other entries.
    etas: Vec<(usize, f64, Vec<(usize, f64)>)>,
}

/// Outcome of a failed factorization: slots left without a pivot, and rows
/// left uncovered. Replacing those slots by the rows' logicals repairs it.
#[derive(Debug)]
pub(crate) struct Singular {
    pub slots: Vec<usize>,
    pub rows: Vec<usize>,
}

impl Factor {
    /// Factorizes the `m x m` matrix whose slot `s` column is `columns[s]`
    /// given as `(row, value)` pairs.
    pub fn new(m: usize, columns: &[Vec<(usize, f64)>]) -> Result<Self, Singular> {
        debug_assert_eq!(columns.len(), m);
        // Active submatrix: row-wise values and exact column patterns.
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (s, col) in columns.iter().enumerate() {
            for &(i, v) in col {
                if v != 0.0 {
                    rows[i].push((s, v));
                    cols[s].push(i);
                }
            }
        }
        let mut row_done = vec![false; m];
        let mut col_done = vec![false; m];
        let mut f = Factor::default();
        let mut singular_slots = Vec::new();
        let mut heap = BinaryHeap::new();
        let mut col_single = Vec::new();
        let mut row_single = Vec::new();
        for s in (0..m).rev() {
            match cols[s].len() {
                0 => {
                    singular_slots.push(s);
                    col_done[s] = true;
                }
                1 => col_single.push(s),
                _ => {}
            }
            heap.push(Reverse((cols[s].len(), s)));
        }
        for i in (0..m).rev() {
            if rows[i].len() == 1 {
                row_single.push(i);
            }
        }
        let value = |rows: &Vec<Vec<(usize, f64)>>, i: usize, s: usize| {
            rows[i].iter().find(|&&(c, _)| c == s).map(|&(_, v)| v).unwrap_or(0.0)
        };

        loop {
            let mut pick: Option<(usize, usize)> = None;
            while let Some(s) = col_single.pop() {
                if !col_done[s] && cols[s].len() == 1 {
                    let i = cols[s][0];
                    if value(&rows, i, s).abs() > SINGULAR_TOL {
                        pick = Some((i, s));
                        break;
                    }
                }
            }
            if pick.is_none() {
                while let Some(i) = row_single.pop() {
                    if !row_done[i] && rows[i].len() == 1 && rows[i][0].1.abs() > SINGULAR_TOL {
                        pick = Some((i, rows[i][0].0));
                        break;
                    }
                }
            }
            if pick.is_none() {
                let mut seen = Vec::new();
                let mut best: Option<(usize, f64, usize, usize)> = None;
                let mut usable = 0;
                while usable < SEARCH_COLUMNS {
                    let Some(Reverse((count, s))) = heap.pop() else {
                        break;
                    };
                    if col_done[s] || cols[s].len() != count {
                        continue;
                    }
                    seen.push(Reverse((count, s)));
                    let max = cols[s].iter().map(|&i| value(&rows, i, s).abs()).fold(0.0, f64::max);
                    if max <= SINGULAR_TOL {
                        continue;
                    }
                    usable += 1;
                    for &i in &cols[s] {
                        let v = value(&rows, i, s).abs();
                        if v < PIVOT_THRESHOLD * max {
                            continue;
                        }
                        let score = (rows[i].len() - 1) * (count - 1);
                        let better = match best {
                            None => true,
                            Some((bs, bv, _, _)) => score < bs || (score == bs && v > bv),
                        };
                        if better {
                            best = Some((score, v, i, s));
                        }
                    }
                }
                heap.extend(seen);
                pick = best.map(|(_, _, i, s)| (i, s));
            }
            let Some((p, q)) = pick else {
                // Whatever is left is numerically singular.
                for s in 0..m {
                    if !col_done[s] {
                        singular_slots.push(s);
                        col_done[s] = true;
                    }
                }
                break;
            };

            let pivot_row = std::mem::take(&mut rows[p]);
            let piv = pivot_row.iter().find(|&&(c, _)| c == q).unwrap().1;
            let others: Vec<(usize, f64)> = pivot_row.iter().copied().filter(|&(c, _)| c != q).collect();
            for &(c, _) in &pivot_row {
                remove(&mut cols[c], p);
            }
            row_done[p] = true;
            col_done[q] = true;
            let mut ops = Vec::new();
            let targets = std::mem::take(&mut cols[q]);
            for &i in &targets {
                let pos = rows[i].iter().position(|&(c, _)| c == q).unwrap();
                let v = rows[i].swap_remove(pos).1;
                let l = v / piv;
                ops.push((i, l));
                for &(c, u) in &others {
                    match rows[i].iter().position(|&(cc, _)| cc == c) {
                        Some(k) => {
                            let nv = rows[i][k].1 - l * u;
                            if nv.abs() < DROP_TOL {
                                rows[i].swap_remove(k);
                                remove(&mut cols[c], i);
                            } else {
                                rows[i][k].1 = nv;
                            }
                        }
                        None => {
                            let nv = -l * u;
                            if nv.abs() >= DROP_TOL {
                                rows[i].push((c, nv));
                                cols[c].push(i);
                            }
                        }
                    }
                }
            }
            for &(c, _) in &others {
                match cols[c].len() {
                    0 => {
                        if !col_done[c] {
                            singular_slots.push(c);
                            col_done[c] = true;
                        }
                    }
                    1 => col_single.push(c),
                    _ => {}
                }
                heap.push(Reverse((cols[c].len(), c)));
            }
            for &i in &targets {
                if rows[i].len() == 1 {
                    row_single.push(i);
                }
            }
            f.prow.push(p);
            f.pcol.push(q);
            f.lower.push(ops);
            f.upper.push((piv, others));
            if f.prow.len() + singular_slots.len() >= m {
                break;
            }
        }

        if singular_slots.is_empty() {
            Ok(f)
        } else {
            let rows = (0..m).filter(|&i| !row_done[i]).collect();
            Err(Singular {
                slots: singular_slots,
                rows,
            })
        }
    }

    pub fn num_updates(&self) -> usize {
        self.etas.len()
    }

    /// Solves `B x = b`; `b` is indexed by row and overwritten, the result is
    /// indexed by slot.
    pub fn ftran(&self, b: &mut [f64], out: &mut [f64]) {
        for k in 0..self.prow.len() {
            let bp = b[self.prow[k]];
            if bp != 0.0 {
                for &(i, l) in &self.lower[k] {
                    b[i] -= l * bp;
                }
            }
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        for k in (0..self.prow.len()).rev() {
            let (piv, ref rest) = self.upper[k];
            let mut v = b[self.prow[k]];
            for &(s, u) in rest {
                v -= u * out[s];
            }
            out[self.pcol[k]] = v / piv;
        }
        for (r, ar, rest) in &self.etas {
            let xr = out[*r] / ar;
            out[*r] = xr;
            if xr != 0.0 {
                for &(i, a) in rest {
                    out[i] -= a * xr;
                }
            }
        }
    }

    /// Solves `B^T y = c`; `c` is indexed by slot and overwritten, the result
    /// is indexed by row.
    pub fn btran(&self, c: &mut [f64], out: &mut [f64]) {
        for (r, ar, rest) in self.etas.iter().rev() {
            let mut v = c[*r];
            for &(i, a) in rest {
                v -= a * c[i];
            }
            c[*r] = v / ar;
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..self.prow.len() {
            let (piv, ref rest) = self.upper[k];
            let z = c[self.pcol[k]] / piv;
            out[self.prow[k]] = z;
            if z != 0.0 {
                for &(s, u) in rest {
                    c[s] -= u * z;
                }
            }
        }
        for k in (0..self.prow.len()).rev() {
            let p = self.prow[k];
            let mut v = out[p];
            for &(i, l) in &self.lower[k] {
                v -= l * out[i];
            }
            out[p] = v;
        }
    }

    /// Records that slot `r` now holds a column whose FTRAN image is `alpha`.
    pub fn update(&mut self, r: usize, alpha: &[f64]) {
        let rest = alpha
            .iter()
            .enumerate()
            .filter(|&(i, &a)| i != r && a.abs() > DROP_TOL)
            .map(|(i, &a)| (i, a))
            .collect();
        self.etas.push((r, alpha[r], rest));
    }
}

fn remove(list: &mut Vec<usize>, x: usize) {
    if let Some(k) = list.iter().position(|&y| y == x) {
        list.swap_remove(k);
    }
}
