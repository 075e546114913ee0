//! Best-first branch-and-bound with depth-first plunging.
//!
//! Each node is the root box plus a list of branching decisions. Activating a
//! node re-applies the decisions, propagates bounds, and re-optimizes the
//! shared simplex engine from whatever basis it holds. After a node is
//! branched, the child on the rounding side of the branching value is
//! processed next; the sibling waits in a heap ordered by LP bound.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use crate::milp::{Assignment, MilpModel};

use super::propagate::Propagator;
use super::simplex::{LpStatus, Simplex};
use super::{BranchingRule, SolveOptions, SolveResult, SolveStats, SolveStatus, SolverError};

/// Row/bound tolerance for accepting an incumbent.
const VERIFY_TOL: f64 = 1e-6;
/// Run the rounding heuristic on every node until this many nodes, then every
/// `HEURISTIC_PERIOD` nodes.
const HEURISTIC_WARMUP: u64 = 50;
const HEURISTIC_PERIOD: u64 = 20;

#[derive(Debug, Clone)]
struct Node {
    bound: f64,
    depth: u32,
    seq: u64,
    decisions: Vec<(u32, f64, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Max-heap order: lower bound first, then deeper, then older.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

struct Search<'a> {
    model: &'a MilpModel,
    options: &'a SolveOptions,
    lp: Simplex,
    prop: Propagator,
    int_vars: Vec<usize>,
    root_lo: Vec<f64>,
    root_hi: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    integral_objective: bool,
    incumbent: Option<(Vec<f64>, f64)>,
    nodes: u64,
    seq: u64,
}

enum NodeOutcome {
    Pruned,
    Branched(Node, Node),
    Interrupted(f64),
}

/// Solves the MILP by branch-and-bound over LP relaxations.
pub fn solve(model: &MilpModel, options: &SolveOptions) -> Result<SolveResult, SolverError> {
    let start = Instant::now();
    let deadline = start + options.time_limit;
    let mut search = Search::new(model, options);
    let mut result = search.run(deadline)?;
    result.stats.wall_time = start.elapsed();
    Ok(result)
}

impl<'a> Search<'a> {
    fn new(model: &'a MilpModel, options: &'a SolveOptions) -> Self {
        let root_lo: Vec<f64> = model.variables().iter().map(|v| v.lower).collect();
        let root_hi: Vec<f64> = model.variables().iter().map(|v| v.upper).collect();
        let int_vars = model
            .variables()
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind.is_integral())
            .map(|(j, _)| j)
            .collect();
        Self {
            model,
            options,
            lp: Simplex::new(model),
            prop: Propagator::new(model),
            int_vars,
            lo: root_lo.clone(),
            hi: root_hi.clone(),
            root_lo,
            root_hi,
            integral_objective: model.has_integral_objective(),
            incumbent: None,
            nodes: 0,
            seq: 0,
        }
    }

    fn cutoff(&self) -> f64 {
        match &self.incumbent {
            None => f64::INFINITY,
            Some((_, obj)) if self.integral_objective => obj - 1.0 + 1e-6,
            Some((_, obj)) => obj - 1e-6 * obj.abs().max(1.0),
        }
    }

    fn round_bound(&self, lp_obj: f64) -> f64 {
        if self.integral_objective {
            (lp_obj - 1e-6).ceil()
        } else {
            lp_obj
        }
    }

    fn result(&self, status: SolveStatus, best_bound: f64) -> SolveResult {
        let (assignment, objective) = match &self.incumbent {
            Some((x, obj)) => (Some(Assignment::new(x.clone())), Some(*obj)),
            None => (None, None),
        };
        SolveResult {
            status,
            assignment,
            objective,
            best_bound,
            stats: SolveStats {
                nodes: self.nodes,
                simplex_iterations: self.lp.iterations(),
                wall_time: Default::default(),
            },
        }
    }

    fn run(&mut self, deadline: Instant) -> Result<SolveResult, SolverError> {
        let (mut lo, mut hi) = (self.root_lo.clone(), self.root_hi.clone());
        if !self.prop.propagate(&mut lo, &mut hi, None) {
            return Ok(self.result(SolveStatus::Infeasible, f64::INFINITY));
        }
        self.root_lo = lo;
        self.root_hi = hi;

        let mut heap: BinaryHeap<Node> = BinaryHeap::new();
        let mut next = Some(Node {
            bound: f64::NEG_INFINITY,
            depth: 0,
            seq: 0,
            decisions: Vec::new(),
        });
        loop {
            let node = match next.take().or_else(|| heap.pop()) {
                Some(n) => n,
                None => break,
            };
            if node.bound >= self.cutoff() {
                continue;
            }
            let limit_hit = self.options.node_limit.is_some_and(|l| self.nodes >= l);
            if limit_hit || Instant::now() >= deadline {
                let open = heap.iter().map(|n| n.bound).fold(node.bound, f64::min);
                return Ok(self.stopped(open));
            }
            match self.process(&node, deadline)? {
                NodeOutcome::Pruned => {}
                NodeOutcome::Branched(first, second) => {
                    if first.bound < self.cutoff() {
                        next = Some(first);
                    }
                    if second.bound < self.cutoff() {
                        heap.push(second);
                    }
                }
                NodeOutcome::Interrupted(bound) => {
                    let open = heap.iter().map(|n| n.bound).fold(bound, f64::min);
                    return Ok(self.stopped(open));
                }
            }
        }
        Ok(match &self.incumbent {
            Some((_, obj)) => self.result(SolveStatus::Optimal, *obj),
            None => self.result(SolveStatus::Infeasible, f64::INFINITY),
        })
    }

    fn stopped(&self, open_bound: f64) -> SolveResult {
        match &self.incumbent {
            Some((_, obj)) => self.result(SolveStatus::TimedOut, open_bound.min(*obj)),
            None => self.result(SolveStatus::BoundOnly, open_bound),
        }
    }

    /// Applies a node's decisions to the working box and propagates.
    fn activate(&mut self, decisions: &[(u32, f64, f64)]) -> bool {
        self.lo.copy_from_slice(&self.root_lo);
        self.hi.copy_from_slice(&self.root_hi);
        let mut seeds = Vec::with_capacity(decisions.len());
        for &(v, l, h) in decisions {
            let v = v as usize;
            self.lo[v] = self.lo[v].max(l);
            self.hi[v] = self.hi[v].min(h);
            if self.lo[v] > self.hi[v] {
                return false;
            }
            seeds.push(v);
        }
        self.prop.propagate(&mut self.lo, &mut self.hi, Some(&seeds))
    }

    fn load_box(&mut self) {
        for &j in &self.int_vars {
            if self.lp.bounds(j) != (self.lo[j], self.hi[j]) {
                self.lp.set_bounds(j, self.lo[j], self.hi[j]);
            }
        }
    }

    fn process(&mut self, node: &Node, deadline: Instant) -> Result<NodeOutcome, SolverError> {
        self.nodes += 1;
        if !self.activate(&node.decisions) {
            return Ok(NodeOutcome::Pruned);
        }
        self.load_box();
        match self.lp.solve(Some(deadline))? {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return Ok(NodeOutcome::Pruned),
            LpStatus::Unbounded => return Err(SolverError::Unbounded),
            LpStatus::TimedOut => return Ok(NodeOutcome::Interrupted(node.bound)),
        }
        let bound = self.round_bound(self.lp.objective()).max(node.bound);
        if bound >= self.cutoff() {
            return Ok(NodeOutcome::Pruned);
        }
        let x = self.lp.values().to_vec();
        let tol = self.options.integer_tolerance;
        let fractional: Vec<usize> = self
            .int_vars
            .iter()
            .copied()
            .filter(|&j| (x[j] - x[j].round()).abs() > tol)
            .collect();
        if fractional.is_empty() {
            if !self.try_incumbent(&x) {
                // Drifted tableau: rebuild and retry once before giving up on the node.
                self.lp.refactor();
                if self.lp.solve(Some(deadline))? == LpStatus::Optimal {
                    let x = self.lp.values().to_vec();
                    self.try_incumbent(&x);
                }
            }
            return Ok(NodeOutcome::Pruned);
        }
        if self.nodes <= HEURISTIC_WARMUP || self.nodes % HEURISTIC_PERIOD == 0 {
            self.rounding_heuristic(&x, deadline)?;
            if bound >= self.cutoff() {
                return Ok(NodeOutcome::Pruned);
            }
        }

        let var = match self.options.branching_rule {
            BranchingRule::FirstFractional => fractional[0],
            BranchingRule::MostFractional => {
                let mut best = fractional[0];
                let mut best_score = -1.0;
                for &j in &fractional {
                    let f = x[j] - x[j].floor();
                    let score = f.min(1.0 - f);
                    if score > best_score + 1e-12 {
                        best_score = score;
                        best = j;
                    }
                }
                best
            }
        };
        let value = x[var];
        let (down_hi, up_lo) = (value.floor(), value.ceil());
        let mut child = |l: f64, h: f64| {
            self.seq += 1;
            let mut decisions = node.decisions.clone();
            decisions.push((var as u32, l, h));
            Node {
                bound,
                depth: node.depth + 1,
                seq: self.seq,
                decisions,
            }
        };
        let down = child(f64::NEG_INFINITY, down_hi);
        let up = child(up_lo, f64::INFINITY);
        Ok(if value - down_hi >= 0.5 {
            NodeOutcome::Branched(up, down)
        } else {
            NodeOutcome::Branched(down, up)
        })
    }

    /// Accepts `x` (integers snapped) as incumbent if it verifies and improves.
    fn try_incumbent(&mut self, x: &[f64]) -> bool {
        let mut snapped = x.to_vec();
        for &j in &self.int_vars {
            snapped[j] = snapped[j].round();
        }
        let candidate = Assignment::new(snapped);
        if !candidate
            .violations(self.model, VERIFY_TOL, self.options.integer_tolerance)
            .is_empty()
        {
            return false;
        }
        let obj = self.model.objective_value(candidate.values());
        let improves = self.incumbent.as_ref().map_or(true, |(_, best)| obj < *best - 1e-9);
        if improves {
            self.incumbent = Some((candidate.values().to_vec(), obj));
        }
        true
    }

    /// Rounds every integral variable, propagates, and re-solves for the
    /// continuous part. Leaves the engine's bounds dirty; the next activation
    /// resets them.
    fn rounding_heuristic(&mut self, x: &[f64], deadline: Instant) -> Result<(), SolverError> {
        let (mut lo, mut hi) = (self.lo.clone(), self.hi.clone());
        for &j in &self.int_vars {
            let v = x[j].round().clamp(lo[j], hi[j]);
            lo[j] = v;
            hi[j] = v;
        }
        if !self.prop.propagate(&mut lo, &mut hi, None) {
            return Ok(());
        }
        for &j in &self.int_vars {
            self.lp.set_bounds(j, lo[j], hi[j]);
        }
        if self.lp.solve(Some(deadline))? == LpStatus::Optimal {
            let y = self.lp.values().to_vec();
            self.try_incumbent(&y);
        }
        Ok(())
    }
}
