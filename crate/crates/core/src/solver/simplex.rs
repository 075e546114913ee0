//! Bounded revised simplex over a sparse LU basis factorization.
//!
//! Every row `r` gets a logical variable `s_r = A_r x` whose bounds encode
//! the relation, so the working system is `A x - s = 0` with bounds on all
//! columns. The engine keeps its basis between solves; after bound changes a
//! dual pass re-optimizes from the previous optimum. Dual passes run on
//! slightly perturbed costs to avoid stalling on the many zero-cost columns,
//! then a primal pass removes any leftover dual infeasibility.

use std::time::Instant;

use crate::milp::{MilpModel, Relation};

use super::lu::Factor;
use super::SolverError;

const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
/// Dual infeasibility accepted at optimality.
const OPT_DUAL_TOL: f64 = 1e-7;
/// Reduced-cost error tolerated when deciding that a warm start is dual feasible.
const LOOSE_DUAL_TOL: f64 = 1e-6;
const PIVOT_TOL: f64 = 1e-7;
/// Bound relaxation used by the primal ratio test.
const HARRIS_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 100;
/// Iterations without objective progress before switching to Bland's rule.
const STALL_LIMIT: usize = 300;
/// Relative size of the dual cost perturbation.
const PERTURBATION: f64 = 1e-7;
const NONBASIC: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    TimedOut,
}

enum Pass {
    Done,
    Infeasible,
    Unbounded,
    TimedOut,
    /// No entering column, but the infeasibility certificate did not hold.
    Suspect,
}

pub(crate) struct Simplex {
    m: usize,
    n: usize,
    width: usize,
    /// Structural columns and rows of `A`.
    cols: Vec<Vec<(usize, f64)>>,
    rows: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    /// Costs driving the current pass; perturbed during dual passes.
    work_cost: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    dj: Vec<f64>,
    basis: Vec<usize>,
    row_of: Vec<usize>,
    factor: Factor,
    /// Dual steepest-edge weights `||e_s^T B^-1||^2` per basis slot.
    weights: Vec<f64>,
    iterations: u64,
    // Scratch buffers.
    buf_m: Vec<f64>,
    buf_m2: Vec<f64>,
    alpha_row: Vec<f64>,
    row_nz: Vec<usize>,
    col: Vec<f64>,
    tau: Vec<f64>,
}

impl Simplex {
    pub fn new(model: &MilpModel) -> Self {
        let n = model.num_vars();
        let m = model.num_constraints();
        let width = n + m;
        let mut lo = Vec::with_capacity(width);
        let mut hi = Vec::with_capacity(width);
        for v in model.variables() {
            lo.push(v.lower);
            hi.push(v.upper);
        }
        let mut rows = Vec::with_capacity(m);
        let mut cols = vec![Vec::new(); n];
        for (r, c) in model.constraints().iter().enumerate() {
            let (l, h) = match c.relation {
                Relation::Le => (f64::NEG_INFINITY, c.rhs),
                Relation::Ge => (c.rhs, f64::INFINITY),
                Relation::Eq => (c.rhs, c.rhs),
            };
            lo.push(l);
            hi.push(h);
            let row: Vec<(usize, f64)> = c.terms.iter().map(|&(v, a)| (v.index(), a)).collect();
            for &(j, a) in &row {
                cols[j].push((r, a));
            }
            rows.push(row);
        }
        let mut cost = vec![0.0; width];
        for &(v, c) in model.objective() {
            cost[v.index()] += c;
        }
        let mut lp = Self {
            m,
            n,
            width,
            cols,
            rows,
            work_cost: cost.clone(),
            dj: cost.clone(),
            cost,
            lo,
            hi,
            x: vec![0.0; width],
            basis: (n..n + m).collect(),
            row_of: Vec::new(),
            factor: Factor::default(),
            weights: vec![1.0; m],
            iterations: 0,
            buf_m: vec![0.0; m],
            buf_m2: vec![0.0; m],
            alpha_row: vec![0.0; width],
            row_nz: Vec::new(),
            col: vec![0.0; m],
            tau: vec![0.0; m],
        };
        lp.row_of = vec![NONBASIC; width];
        for r in 0..m {
            lp.row_of[n + r] = r;
        }
        for j in 0..n {
            lp.x[j] = default_value(lp.lo[j], lp.hi[j]);
        }
        lp.crash(model);
        lp.refactor();
        lp
    }

    /// Triangular crash: each equality row in turn takes a continuous column
    /// that has no entry in the rows already assigned, preferring wide bounds.
    fn crash(&mut self, model: &MilpModel) {
        let mut row_taken = vec![false; self.m];
        let mut col_taken = vec![false; self.n];
        for r in 0..self.m {
            if self.lo[self.n + r] != self.hi[self.n + r] {
                continue;
            }
            let mut best: Option<(f64, f64, usize)> = None;
            for &(j, a) in &self.rows[r] {
                if col_taken[j] || model.variables()[j].kind.is_integral() || a.abs() < 1e-3 {
                    continue;
                }
                if self.cols[j].iter().any(|&(i, _)| row_taken[i]) {
                    continue;
                }
                let width = (self.hi[j] - self.lo[j]).min(1e12);
                let better = match best {
                    None => true,
                    Some((bw, ba, _)) => width > bw || (width == bw && a.abs() > ba),
                };
                if better {
                    best = Some((width, a.abs(), j));
                }
            }
            if let Some((_, _, j)) = best {
                row_taken[r] = true;
                col_taken[j] = true;
                let logical = self.n + r;
                self.row_of[logical] = NONBASIC;
                self.x[logical] = default_value(self.lo[logical], self.hi[logical]);
                self.basis[r] = j;
                self.row_of[j] = r;
            }
        }
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lo[j], self.hi[j])
    }

    /// Changes a structural variable's bounds. Takes effect at the next solve.
    pub fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.lo[j] = lo;
        self.hi[j] = hi;
    }

    pub fn values(&self) -> &[f64] {
        &self.x[..self.n]
    }

    pub fn objective(&self) -> f64 {
        (0..self.n).map(|j| self.cost[j] * self.x[j]).sum()
    }

    fn column_into(&self, j: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        if j < self.n {
            for &(i, a) in &self.cols[j] {
                out[i] = a;
            }
        } else {
            out[j - self.n] = -1.0;
        }
    }

    fn column_entries(&self, j: usize) -> Vec<(usize, f64)> {
        if j < self.n {
            self.cols[j].clone()
        } else {
            vec![(j - self.n, -1.0)]
        }
    }

    /// Rebuilds the factorization and recomputes primal and dual values.
    /// Returns false if the basis was singular and had to be repaired.
    pub fn refactor(&mut self) -> bool {
        let mut repaired = false;
        loop {
            let columns: Vec<Vec<(usize, f64)>> =
                self.basis.iter().map(|&j| self.column_entries(j)).collect();
            match Factor::new(self.m, &columns) {
                Ok(f) => {
                    self.factor = f;
                    break;
                }
                Err(singular) => {
                    repaired = true;
                    for (&s, &r) in singular.slots.iter().zip(&singular.rows) {
                        let old = self.basis[s];
                        self.row_of[old] = NONBASIC;
                        self.x[old] = clamp_finite(self.x[old], self.lo[old], self.hi[old]);
                        let logical = self.n + r;
                        self.basis[s] = logical;
                        self.row_of[logical] = s;
                        self.weights[s] = 1.0;
                    }
                }
            }
        }
        self.recompute_primal();
        self.recompute_duals();
        !repaired
    }

    /// Basic values from the nonbasic ones: `B x_B = -N x_N`.
    fn recompute_primal(&mut self) {
        let mut b = std::mem::take(&mut self.buf_m);
        b.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..self.width {
            if self.row_of[j] != NONBASIC || self.x[j] == 0.0 {
                continue;
            }
            let xj = self.x[j];
            if j < self.n {
                for &(i, a) in &self.cols[j] {
                    b[i] -= a * xj;
                }
            } else {
                b[j - self.n] += xj;
            }
        }
        let mut out = std::mem::take(&mut self.buf_m2);
        self.factor.ftran(&mut b, &mut out);
        for (s, &j) in self.basis.iter().enumerate() {
            self.x[j] = out[s];
        }
        self.buf_m = b;
        self.buf_m2 = out;
    }

    /// Reduced costs `c - A^T y` with `B^T y = c_B`.
    fn recompute_duals(&mut self) {
        let mut c = std::mem::take(&mut self.buf_m);
        for (s, &j) in self.basis.iter().enumerate() {
            c[s] = self.work_cost[j];
        }
        let mut y = std::mem::take(&mut self.buf_m2);
        self.factor.btran(&mut c, &mut y);
        for j in 0..self.n {
            let mut d = self.work_cost[j];
            for &(i, a) in &self.cols[j] {
                d -= y[i] * a;
            }
            self.dj[j] = d;
        }
        for i in 0..self.m {
            self.dj[self.n + i] = self.work_cost[self.n + i] + y[i];
        }
        for &j in &self.basis {
            self.dj[j] = 0.0;
        }
        self.buf_m = c;
        self.buf_m2 = y;
    }

    /// Row `r` of `B^-1 [A | -I]` restricted to nonbasic columns, into
    /// `alpha_row` with its support in `row_nz`. Leaves `rho = e_r^T B^-1` in
    /// `buf_m2`.
    fn compute_pivot_row(&mut self, r: usize) {
        let mut e = std::mem::take(&mut self.buf_m);
        e.iter_mut().for_each(|v| *v = 0.0);
        e[r] = 1.0;
        let mut rho = std::mem::take(&mut self.buf_m2);
        self.factor.btran(&mut e, &mut rho);
        for &j in &self.row_nz {
            self.alpha_row[j] = 0.0;
        }
        self.row_nz.clear();
        for i in 0..self.m {
            let ri = rho[i];
            if ri == 0.0 {
                continue;
            }
            for &(j, a) in &self.rows[i] {
                if self.row_of[j] == NONBASIC {
                    if self.alpha_row[j] == 0.0 {
                        self.row_nz.push(j);
                    }
                    self.alpha_row[j] += ri * a;
                    if self.alpha_row[j] == 0.0 {
                        // Keep exact cancellations in the support list.
                        self.alpha_row[j] = f64::MIN_POSITIVE;
                    }
                }
            }
            let logical = self.n + i;
            if self.row_of[logical] == NONBASIC {
                self.row_nz.push(logical);
                self.alpha_row[logical] = -ri;
            }
        }
        self.buf_m = e;
        self.buf_m2 = rho;
    }

    /// `B^-1 a_q` into `col`.
    fn compute_column(&mut self, q: usize) {
        let mut b = std::mem::take(&mut self.buf_m);
        self.column_into(q, &mut b);
        let mut out = std::mem::take(&mut self.col);
        self.factor.ftran(&mut b, &mut out);
        self.buf_m = b;
        self.col = out;
    }

    /// Places every nonbasic column on the bound its reduced cost prefers.
    /// Returns false when some column would need an infinite bound.
    fn place_nonbasics(&mut self) -> bool {
        let mut dual_feasible = true;
        for j in 0..self.width {
            if self.row_of[j] != NONBASIC {
                continue;
            }
            let (lo, hi, d) = (self.lo[j], self.hi[j], self.dj[j]);
            self.x[j] = if lo == hi {
                lo
            } else if d > DUAL_TOL && lo.is_finite() {
                lo
            } else if d < -DUAL_TOL && hi.is_finite() {
                hi
            } else {
                if d.abs() > LOOSE_DUAL_TOL {
                    dual_feasible = false;
                }
                if self.x[j] == lo || self.x[j] == hi {
                    self.x[j]
                } else {
                    clamp_finite(self.x[j], lo, hi)
                }
            };
        }
        dual_feasible
    }

    fn infeasibility(&self, b: usize) -> f64 {
        let v = self.x[b];
        if v < self.lo[b] - PRIMAL_TOL {
            self.lo[b] - v
        } else if v > self.hi[b] + PRIMAL_TOL {
            v - self.hi[b]
        } else {
            0.0
        }
    }

    fn dual_infeasible(&self) -> bool {
        (0..self.width).any(|j| {
            self.row_of[j] == NONBASIC
                && self.lo[j] != self.hi[j]
                && ((self.dj[j] > OPT_DUAL_TOL && self.x[j] > self.lo[j])
                    || (self.dj[j] < -OPT_DUAL_TOL && self.x[j] < self.hi[j]))
        })
    }

    /// Solves the LP for the current bounds.
    pub fn solve(&mut self, deadline: Option<Instant>) -> Result<LpStatus, SolverError> {
        let cap = 50 * (self.m + self.n) as u64 + 10_000;
        let mut budget = cap;
        self.work_cost.copy_from_slice(&self.cost);
        self.perturb_costs();
        self.recompute_duals();
        let dual_ok = self.place_nonbasics();
        self.recompute_primal();

        let mut dual_done = false;
        if dual_ok {
            match self.dual_simplex(deadline, &mut budget)? {
                Pass::Done => dual_done = true,
                Pass::Infeasible => {
                    self.restore_costs();
                    return Ok(LpStatus::Infeasible);
                }
                Pass::TimedOut => {
                    self.restore_costs();
                    return Ok(LpStatus::TimedOut);
                }
                Pass::Suspect => {}
                Pass::Unbounded => unreachable!("dual pass never reports unbounded"),
            }
        }
        self.restore_costs();
        if dual_done && !self.dual_infeasible() {
            return Ok(LpStatus::Optimal);
        }
        if !dual_done {
            self.place_nonbasics_primal();
            self.recompute_primal();
        }
        Ok(match self.primal_simplex(deadline, &mut budget)? {
            Pass::Done => LpStatus::Optimal,
            Pass::Infeasible => LpStatus::Infeasible,
            Pass::Unbounded => LpStatus::Unbounded,
            Pass::TimedOut => LpStatus::TimedOut,
            Pass::Suspect => unreachable!("primal pass never reports suspect"),
        })
    }

    fn restore_costs(&mut self) {
        self.work_cost.copy_from_slice(&self.cost);
        self.recompute_duals();
    }

    /// Nonbasic columns onto a finite bound (or zero when free).
    fn place_nonbasics_primal(&mut self) {
        for j in 0..self.width {
            if self.row_of[j] == NONBASIC {
                let (lo, hi) = (self.lo[j], self.hi[j]);
                let v = clamp_finite(self.x[j], lo, hi);
                self.x[j] = if v == lo || v == hi { v } else { default_value(lo, hi) };
            }
        }
    }

    /// Shifts costs by small column-specific amounts in the direction that
    /// keeps each column's preferred bound.
    fn perturb_costs(&mut self) {
        for j in 0..self.width {
            let (lo, hi) = (self.lo[j], self.hi[j]);
            let c = self.cost[j];
            if lo == hi || (!lo.is_finite() && !hi.is_finite()) || self.row_of[j] != NONBASIC {
                continue;
            }
            // Deterministic spread in [1, 2).
            let spread = 1.0 + ((j as u64).wrapping_mul(2_654_435_761) % 1000) as f64 / 1000.0;
            let size = PERTURBATION * (1.0 + c.abs()) * spread;
            let up = if !hi.is_finite() {
                true
            } else if !lo.is_finite() {
                false
            } else if c != 0.0 {
                c > 0.0
            } else if self.row_of[j] == NONBASIC {
                self.x[j] <= lo
            } else {
                true
            };
            self.work_cost[j] = if up { c + size } else { c - size };
        }
    }

    /// Checks the Farkas certificate `rho` left in `buf_m2` by the last pivot
    /// row computation: the combination of original rows cannot reach zero
    /// over the current box.
    fn certifies_infeasible(&self) -> bool {
        let rho = &self.buf_m2;
        let mut g = vec![0.0; self.n];
        for (i, row) in self.rows.iter().enumerate() {
            if rho[i] != 0.0 {
                for &(j, a) in row {
                    g[j] += rho[i] * a;
                }
            }
        }
        // sum_j g_j x_j - sum_i rho_i s_i over the box.
        let (mut min, mut max) = (0.0f64, 0.0f64);
        let (mut min_scale, mut max_scale) = (0.0f64, 0.0f64);
        let mut add = |coef: f64, lo: f64, hi: f64| {
            let tiny = if lo.is_finite() && hi.is_finite() { 0.0 } else { PIVOT_TOL };
            if coef.abs() <= tiny {
                return;
            }
            let (a, b) = if coef > 0.0 { (coef * lo, coef * hi) } else { (coef * hi, coef * lo) };
            min += a;
            max += b;
            if a.is_finite() {
                min_scale += a.abs();
            }
            if b.is_finite() {
                max_scale += b.abs();
            }
        };
        for j in 0..self.n {
            add(g[j], self.lo[j], self.hi[j]);
        }
        for i in 0..self.m {
            add(-rho[i], self.lo[self.n + i], self.hi[self.n + i]);
        }
        min > 1e-7 + 1e-9 * min_scale || max < -(1e-7 + 1e-9 * max_scale)
    }

    fn tick(&mut self, deadline: Option<Instant>, budget: &mut u64) -> Result<bool, SolverError> {
        if *budget == 0 {
            return Err(SolverError::Numerical(format!(
                "simplex exceeded its iteration cap ({} rows, {} columns)",
                self.m, self.n
            )));
        }
        *budget -= 1;
        self.iterations += 1;
        if self.iterations % 32 == 0 {
            if let Some(t) = deadline {
                if Instant::now() >= t {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    /// Exchanges slot `r`'s basic column for `q`, given `col = B^-1 a_q` and
    /// the pivot row in `alpha_row`.
    fn pivot(&mut self, r: usize, q: usize) {
        let alpha_q = self.alpha_row[q];
        let t = self.dj[q] / alpha_q;
        if t != 0.0 {
            for &j in &self.row_nz {
                self.dj[j] -= t * self.alpha_row[j];
            }
        }
        let leaving = self.basis[r];
        self.dj[leaving] = -t;
        self.dj[q] = 0.0;
        self.factor.update(r, &self.col);
        self.row_of[leaving] = NONBASIC;
        self.row_of[q] = r;
        self.basis[r] = q;
    }

    /// Steepest-edge update for a pivot on slot `r`, using `col` and the
    /// pivot row's `rho` in `buf_m2`. Must run before the factor update.
    fn update_weights(&mut self, r: usize) {
        let rho = std::mem::take(&mut self.buf_m2);
        let w_r = rho.iter().map(|v| v * v).sum::<f64>();
        let mut rhs = std::mem::take(&mut self.buf_m);
        rhs.copy_from_slice(&rho);
        let mut tau = std::mem::take(&mut self.tau);
        self.factor.ftran(&mut rhs, &mut tau);
        let alpha_r = self.col[r];
        for s in 0..self.m {
            let a = self.col[s];
            if s == r || a == 0.0 {
                continue;
            }
            let ratio = a / alpha_r;
            let w = self.weights[s] - 2.0 * ratio * tau[s] + ratio * ratio * w_r;
            self.weights[s] = w.max(ratio * ratio).max(1e-8);
        }
        self.weights[r] = (w_r / (alpha_r * alpha_r)).max(1e-8);
        self.buf_m = rhs;
        self.buf_m2 = rho;
        self.tau = tau;
    }

    /// Cost shifting: nonbasic columns whose reduced cost has drifted to the
    /// wrong sign for their bound get their working cost moved so it reads zero.
    fn shift_wrong_signs(&mut self) {
        for k in 0..self.row_nz.len() {
            let j = self.row_nz[k];
            if self.row_of[j] != NONBASIC || self.lo[j] == self.hi[j] {
                continue;
            }
            let d = self.dj[j];
            let wrong = (d < -DUAL_TOL && self.x[j] < self.hi[j]) || (d > DUAL_TOL && self.x[j] > self.lo[j]);
            if wrong {
                self.work_cost[j] -= d;
                self.dj[j] = 0.0;
            }
        }
    }

    fn shift_basics(&mut self, delta: f64) {
        if delta == 0.0 {
            return;
        }
        for s in 0..self.m {
            let a = self.col[s];
            if a != 0.0 {
                self.x[self.basis[s]] -= a * delta;
            }
        }
    }

    fn dual_simplex(&mut self, deadline: Option<Instant>, budget: &mut u64) -> Result<Pass, SolverError> {
        let mut bland = false;
        let mut stall = 0usize;
        let mut fresh = false;
        loop {
            if self.factor.num_updates() >= REFACTOR_EVERY {
                self.refactor();
            }
            // Leaving slot: steepest-edge pricing, lowest column under Bland.
            let mut leave = None;
            let mut worst = 0.0;
            for s in 0..self.m {
                let inf = self.infeasibility(self.basis[s]);
                if inf > 0.0 {
                    if bland {
                        if leave.map_or(true, |r: usize| self.basis[s] < self.basis[r]) {
                            leave = Some(s);
                        }
                    } else if inf * inf > worst * self.weights[s] {
                        worst = inf * inf / self.weights[s];
                        leave = Some(s);
                    }
                }
            }
            let Some(r) = leave else {
                if fresh || self.factor.num_updates() == 0 {
                    return Ok(Pass::Done);
                }
                // Confirm on fresh values before declaring optimality.
                self.refactor();
                fresh = true;
                continue;
            };
            if self.tick(deadline, budget)? {
                return Ok(Pass::TimedOut);
            }
            let b = self.basis[r];
            let to_lower = self.x[b] < self.lo[b];
            let target = if to_lower { self.lo[b] } else { self.hi[b] };
            self.compute_pivot_row(r);

            // Candidates carry reduced costs signed so that dual feasibility
            // means nonnegative; slightly wrong signs count as zero.
            let mut cands: Vec<(usize, f64, f64)> = Vec::new();
            for &j in &self.row_nz {
                let a = self.alpha_row[j];
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let up = if to_lower { a < 0.0 } else { a > 0.0 };
                let movable = if up { self.x[j] < self.hi[j] } else { self.x[j] > self.lo[j] };
                if movable {
                    let dd = if up { self.dj[j] } else { -self.dj[j] };
                    cands.push((j, dd.max(0.0), a.abs()));
                }
            }
            if cands.is_empty() {
                if self.factor.num_updates() > 0 && !fresh {
                    self.refactor();
                    fresh = true;
                    continue;
                }
                return Ok(if self.certifies_infeasible() {
                    Pass::Infeasible
                } else {
                    Pass::Suspect
                });
            }
            let q = if bland {
                let min = cands.iter().map(|&(_, dd, a)| dd / a).fold(f64::INFINITY, f64::min);
                cands
                    .iter()
                    .filter(|&&(_, dd, a)| dd / a <= min + 1e-12)
                    .map(|c| c.0)
                    .min()
                    .unwrap_or(cands[0].0)
            } else {
                // Harris: bound the step with relaxed ratios, then take the
                // largest pivot within that bound.
                let theta_max = cands
                    .iter()
                    .map(|&(_, dd, a)| (dd + DUAL_TOL) / a)
                    .fold(f64::INFINITY, f64::min);
                let mut best = cands[0].0;
                let mut best_a = 0.0;
                for &(j, dd, a) in &cands {
                    if dd / a <= theta_max && a > best_a {
                        best_a = a;
                        best = j;
                    }
                }
                best
            };

            self.compute_column(q);
            let alpha_q = self.alpha_row[q];
            if (self.col[r] - alpha_q).abs() > 1e-7 * (1.0 + alpha_q.abs()) {
                // Row and column disagree: the factorization has drifted.
                if fresh {
                    return Err(SolverError::Numerical(
                        "pivot row and column disagree after refactorization".into(),
                    ));
                }
                self.refactor();
                fresh = true;
                continue;
            }
            let delta = (target - self.x[b]) / (-self.col[r]);
            self.shift_basics(delta);
            self.x[q] += delta;
            self.update_weights(r);
            // A wrong-signed entering reduced cost would push the others the
            // wrong way; shift it to zero first.
            let up = if to_lower { alpha_q < 0.0 } else { alpha_q > 0.0 };
            let degenerate = if up { self.dj[q] <= 1e-12 } else { self.dj[q] >= -1e-12 };
            if (up && self.dj[q] < 0.0) || (!up && self.dj[q] > 0.0) {
                self.work_cost[q] -= self.dj[q];
                self.dj[q] = 0.0;
            }
            self.pivot(r, q);
            self.shift_wrong_signs();
            self.x[b] = target;
            fresh = false;

            // Shifted costs move the objective, so progress is judged by
            // the dual step alone.
            if degenerate {
                stall += 1;
                if stall > STALL_LIMIT {
                    bland = true;
                }
            } else {
                stall = 0;
                bland = false;
            }
        }
    }

    /// Phase-one reduced costs for the current infeasibility pattern.
    fn phase_one_costs(&mut self, out: &mut Vec<f64>) -> bool {
        let mut sigma = std::mem::take(&mut self.buf_m);
        let mut any = false;
        for s in 0..self.m {
            let b = self.basis[s];
            sigma[s] = if self.x[b] < self.lo[b] - PRIMAL_TOL {
                any = true;
                -1.0
            } else if self.x[b] > self.hi[b] + PRIMAL_TOL {
                any = true;
                1.0
            } else {
                0.0
            };
        }
        out.clear();
        out.resize(self.width, 0.0);
        if any {
            let mut y = std::mem::take(&mut self.buf_m2);
            self.factor.btran(&mut sigma, &mut y);
            for j in 0..self.n {
                if self.row_of[j] == NONBASIC {
                    let mut d = 0.0;
                    for &(i, a) in &self.cols[j] {
                        d -= y[i] * a;
                    }
                    out[j] = d;
                }
            }
            for i in 0..self.m {
                if self.row_of[self.n + i] == NONBASIC {
                    out[self.n + i] = y[i];
                }
            }
            self.buf_m2 = y;
        }
        self.buf_m = sigma;
        any
    }

    fn primal_simplex(&mut self, deadline: Option<Instant>, budget: &mut u64) -> Result<Pass, SolverError> {
        let w = self.width;
        let mut phase_costs = Vec::with_capacity(w);
        let mut bland = false;
        let mut best_obj = f64::INFINITY;
        let mut stall = 0usize;
        let mut was_phase_one = true;
        let mut fresh = false;
        loop {
            if self.factor.num_updates() >= REFACTOR_EVERY {
                self.refactor();
            }
            let phase_one = self.phase_one_costs(&mut phase_costs);
            if was_phase_one && !phase_one {
                best_obj = f64::INFINITY;
                stall = 0;
                bland = false;
            }
            was_phase_one = phase_one;
            let d: &[f64] = if phase_one { &phase_costs } else { &self.dj };
            let tol = if phase_one { DUAL_TOL } else { OPT_DUAL_TOL };

            let mut enter = None;
            let mut best = 0.0;
            for j in 0..w {
                if self.row_of[j] != NONBASIC {
                    continue;
                }
                let dj = d[j];
                let improving =
                    (dj < -tol && self.x[j] < self.hi[j]) || (dj > tol && self.x[j] > self.lo[j]);
                if !improving {
                    continue;
                }
                if bland {
                    enter = Some(j);
                    break;
                }
                if dj.abs() > best {
                    best = dj.abs();
                    enter = Some(j);
                }
            }
            let Some(q) = enter else {
                if !fresh && self.factor.num_updates() > 0 {
                    self.refactor();
                    fresh = true;
                    continue;
                }
                return Ok(if phase_one { Pass::Infeasible } else { Pass::Done });
            };
            let dir = if d[q] < 0.0 { 1.0 } else { -1.0 };
            if self.tick(deadline, budget)? {
                return Ok(Pass::TimedOut);
            }
            self.compute_column(q);

            // Ratio test; ties prefer the largest pivot, or lowest column under Bland.
            // Harris: bound the step with relaxed bounds, then take the
            // largest pivot (lowest column under Bland) among the rows that
            // block within it.
            let flip = self.hi[q] - self.lo[q];
            let mut limits: Vec<(usize, f64, f64, f64)> = Vec::new();
            let mut relaxed = flip;
            for s in 0..self.m {
                let alpha = -self.col[s] * dir;
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basis[s];
                let (v, lo, hi) = (self.x[b], self.lo[b], self.hi[b]);
                let limit = if phase_one && v < lo - PRIMAL_TOL {
                    (alpha > 0.0).then_some(lo)
                } else if phase_one && v > hi + PRIMAL_TOL {
                    (alpha < 0.0).then_some(hi)
                } else if alpha > 0.0 {
                    hi.is_finite().then_some(hi)
                } else {
                    lo.is_finite().then_some(lo)
                };
                let Some(bound) = limit else { continue };
                let t = ((bound - v) / alpha).max(0.0);
                relaxed = relaxed.min(((bound - v + HARRIS_TOL * alpha.signum()) / alpha).max(0.0));
                limits.push((s, bound, t, alpha.abs()));
            }
            let mut leave: Option<(usize, f64)> = None;
            let mut step = flip;
            if relaxed < flip {
                let mut pick: Option<(usize, f64, f64, f64)> = None;
                for &c in &limits {
                    if c.2 > relaxed {
                        continue;
                    }
                    let better = match pick {
                        None => true,
                        Some(p) if bland => self.basis[c.0] < self.basis[p.0],
                        Some(p) => c.3 > p.3,
                    };
                    if better {
                        pick = Some(c);
                    }
                }
                if let Some((s, bound, t, _)) = pick {
                    leave = Some((s, bound));
                    step = t;
                }
            }
            if step == f64::INFINITY {
                if phase_one {
                    return Err(SolverError::Numerical("unbounded phase-one ray".into()));
                }
                return Ok(Pass::Unbounded);
            }
            let delta_q = dir * step;
            self.shift_basics(delta_q);
            self.x[q] += delta_q;
            match leave {
                None => {
                    // Bound flip: the entering column crosses to its other bound.
                    self.x[q] = if dir > 0.0 { self.hi[q] } else { self.lo[q] };
                }
                Some((r, bound)) => {
                    let b = self.basis[r];
                    self.compute_pivot_row(r);
                    self.update_weights(r);
                    self.pivot(r, q);
                    self.x[b] = bound;
                }
            }
            fresh = false;

            let obj = if phase_one {
                self.basis.iter().map(|&b| self.infeasibility(b)).sum()
            } else {
                self.objective()
            };
            if obj < best_obj - 1e-12 * (1.0 + obj.abs()) {
                best_obj = obj;
                stall = 0;
            } else {
                stall += 1;
                if stall > STALL_LIMIT {
                    bland = true;
                }
            }
        }
    }
}

fn default_value(lo: f64, hi: f64) -> f64 {
    if lo.is_finite() {
        lo
    } else if hi.is_finite() {
        hi
    } else {
        0.0
    }
}

fn clamp_finite(x: f64, lo: f64, hi: f64) -> f64 {
    if x < lo || x > hi || !x.is_finite() {
        default_value(lo, hi)
    } else {
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{LinExpr, Sense, VarKind};

    fn lp(build: impl FnOnce(&mut MilpModel)) -> Simplex {
        let mut m = MilpModel::new();
        build(&mut m);
        Simplex::new(&m)
    }

    #[test]
    fn bounded_minimum() {
        let mut s = lp(|m| {
            let x = m.add_variable("x", VarKind::Real, 0.0, 10.0).unwrap();
            let y = m.add_variable("y", VarKind::Real, 0.0, 10.0).unwrap();
            m.add_constraint("a", LinExpr::new().term(x, 1.0).term(y, 1.0), Relation::Ge, 4.0)
                .unwrap();
            m.add_constraint("b", LinExpr::new().term(x, 1.0).term(y, -1.0), Relation::Le, 1.0)
                .unwrap();
            m.set_objective(Sense::Minimize, LinExpr::new().term(x, 2.0).term(y, 1.0))
                .unwrap();
        });
        assert_eq!(s.solve(None).unwrap(), LpStatus::Optimal);
        assert!((s.objective() - 4.0).abs() < 1e-9);
        assert!((s.values()[1] - 4.0).abs() < 1e-9);
    }

    #[test]
    fn primal_path_for_negative_costs() {
        // max x + y over a triangle; needs the primal route (x, y unbounded above).
        let mut s = lp(|m| {
            let x = m.add_variable("x", VarKind::Real, 0.0, f64::INFINITY).unwrap();
            let y = m.add_variable("y", VarKind::Real, 0.0, f64::INFINITY).unwrap();
            m.add_constraint("a", LinExpr::new().term(x, 1.0).term(y, 2.0), Relation::Le, 4.0)
                .unwrap();
            m.add_constraint("b", LinExpr::new().term(x, 3.0).term(y, 1.0), Relation::Le, 6.0)
                .unwrap();
            m.set_objective(Sense::Minimize, LinExpr::new().term(x, -1.0).term(y, -1.0))
                .unwrap();
        });
        assert_eq!(s.solve(None).unwrap(), LpStatus::Optimal);
        assert!((s.objective() + 2.8).abs() < 1e-9, "{}", s.objective());
    }

    #[test]
    fn warm_restart_after_bound_change() {
        let mut s = lp(|m| {
            let x = m.add_variable("x", VarKind::Real, 0.0, 10.0).unwrap();
            let y = m.add_variable("y", VarKind::Real, 0.0, 10.0).unwrap();
            m.add_constraint("a", LinExpr::new().term(x, 1.0).term(y, 1.0), Relation::Ge, 3.5)
                .unwrap();
            m.set_objective(Sense::Minimize, LinExpr::new().term(x, 1.0).term(y, 2.0))
                .unwrap();
        });
        assert_eq!(s.solve(None).unwrap(), LpStatus::Optimal);
        assert!((s.objective() - 3.5).abs() < 1e-9);
        s.set_bounds(0, 0.0, 3.0);
        assert_eq!(s.solve(None).unwrap(), LpStatus::Optimal);
        assert!((s.objective() - 4.0).abs() < 1e-9);
        s.set_bounds(1, 0.0, 0.0);
        assert_eq!(s.solve(None).unwrap(), LpStatus::Infeasible);
        s.set_bounds(0, 0.0, 10.0);
        s.set_bounds(1, 0.0, 10.0);
        assert_eq!(s.solve(None).unwrap(), LpStatus::Optimal);
        assert!((s.objective() - 3.5).abs() < 1e-9);
        assert!(s.refactor());
        assert_eq!(s.solve(None).unwrap(), LpStatus::Optimal);
        assert!((s.objective() - 3.5).abs() < 1e-9);
    }

    #[test]
    fn equality_chain() {
        // x1 = x0 + 1, x2 = x1 + 1 with x0 free; min x2 subject to x2 >= 0.
        let mut s = lp(|m| {
            let x: Vec<_> = (0..3)
                .map(|i| {
                    m.add_variable(format!("x{i}"), VarKind::Real, f64::NEG_INFINITY, f64::INFINITY)
                        .unwrap()
                })
                .collect();
            m.add_constraint("e1", LinExpr::new().term(x[1], 1.0).term(x[0], -1.0), Relation::Eq, 1.0)
                .unwrap();
            m.add_constraint("e2", LinExpr::new().term(x[2], 1.0).term(x[1], -1.0), Relation::Eq, 1.0)
                .unwrap();
            m.add_constraint("p", LinExpr::new().term(x[2], 1.0), Relation::Ge, 0.0).unwrap();
            m.set_objective(Sense::Minimize, LinExpr::new().term(x[2], 1.0)).unwrap();
        });
        assert_eq!(s.solve(None).unwrap(), LpStatus::Optimal);
        assert!(s.objective().abs() < 1e-9);
        assert!((s.values()[0] + 2.0).abs() < 1e-9);
    }
}
