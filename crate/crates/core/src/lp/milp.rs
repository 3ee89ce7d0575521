//! Best-first branch-and-bound over binary variables.
//!
//! Node order is fully deterministic: smallest parent bound first, ties
//! broken by creation order; the branching variable is the lowest-index
//! fractional binary and the down child is created before the up child.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::{LinearProgram, LpStatus, SimplexSolver, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    NodeLimit,
    /// An LP relaxation failed (unbounded, iteration limit or numerics).
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpOutcome {
    pub status: MilpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub nodes: usize,
    /// Proven lower bound on the optimum.
    pub bound: f64,
}

struct Node {
    bound: f64,
    id: usize,
    fixings: Vec<(usize, f64)>,
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
    // BinaryHeap is a max-heap: invert so the smallest bound pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then_with(|| other.id.cmp(&self.id))
    }
}

pub fn solve_milp(lp: &LinearProgram, binaries: &[usize], tol: &Tolerances, node_limit: usize) -> MilpOutcome {
    let mut binaries = binaries.to_vec();
    binaries.sort_unstable();
    binaries.dedup();
    let mut root = lp.clone();
    for &j in &binaries {
        root.lower[j] = root.lower[j].max(0.0);
        root.upper[j] = root.upper[j].min(1.0);
    }
    let root_bounds: Vec<(f64, f64)> = binaries.iter().map(|&j| (root.lower[j], root.upper[j])).collect();
    let mut solver = SimplexSolver::new(&root, *tol);

    let mut heap = BinaryHeap::new();
    heap.push(Node { bound: f64::NEG_INFINITY, id: 0, fixings: Vec::new() });
    let mut next_id = 1;
    let mut nodes = 0usize;
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut failed = false;

    let cutoff = |inc: &Option<(f64, Vec<f64>)>| -> f64 {
        match inc {
            Some((z, _)) => z - tol.mip_gap_abs.max(tol.mip_gap_rel * z.abs()),
            None => f64::INFINITY,
        }
    };

    while let Some(node) = heap.pop() {
        if node.bound >= cutoff(&incumbent) {
            continue;
        }
        if nodes >= node_limit {
            heap.push(node);
            break;
        }
        nodes += 1;
        for (k, &j) in binaries.iter().enumerate() {
            solver.set_var_bounds(j, root_bounds[k].0, root_bounds[k].1);
        }
        for &(j, v) in &node.fixings {
            solver.set_var_bounds(j, v, v);
        }
        let out = solver.solve();
        match out.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => continue,
            _ => {
                log::warn!("branch-and-bound relaxation ended with {:?}", out.status);
                failed = true;
                continue;
            }
        }
        if out.objective >= cutoff(&incumbent) {
            continue;
        }
        let frac = binaries.iter().copied().find(|&j| {
            let v = out.x[j];
            (v - v.round()).abs() > tol.integrality
        });
        match frac {
            None => {
                let mut x = out.x.clone();
                for &j in &binaries {
                    x[j] = x[j].round();
                }
                incumbent = Some((out.objective, x));
            }
            Some(j) => {
                for v in [0.0, 1.0] {
                    let mut fixings = node.fixings.clone();
                    fixings.push((j, v));
                    heap.push(Node { bound: out.objective, id: next_id, fixings });
                    next_id += 1;
                }
            }
        }
    }

    let open_bound = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    match incumbent {
        Some((z, x)) => {
            let status = if failed {
                MilpStatus::Failed
            } else if heap.is_empty() {
                MilpStatus::Optimal
            } else {
                MilpStatus::NodeLimit
            };
            MilpOutcome { status, x, objective: z, nodes, bound: open_bound.min(z) }
        }
        None => {
            let status = if !heap.is_empty() {
                MilpStatus::NodeLimit
            } else if failed {
                MilpStatus::Failed
            } else {
                MilpStatus::Infeasible
            };
            MilpOutcome { status, x: vec![0.0; lp.num_vars()], objective: f64::INFINITY, nodes, bound: open_bound }
        }
    }
}
