//! Linear and mixed-binary programming kernel.
//!
//! The simplex solver works on the bounded form `min c'x` subject to row
//! activities `r = A x` lying in `[row_lo, row_hi]` and `x` in `[lo, hi]`.
//! Every row gets a logical variable so that the constraint matrix becomes
//! `[A  -I]` with a zero right-hand side; that keeps the slack basis trivially
//! invertible and turns right-hand-side edits into bound edits, which is what
//! makes warm starts (branch-and-bound nodes, Benders subproblems) cheap.
//!
//! Dual sign convention: `duals[i] >= 0` on `Ge` rows, `<= 0` on `Le` rows and
//! free on `Eq` rows, with reduced costs `d = c - A'y`.

mod duality;
mod milp;
pub mod mps;
mod simplex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use duality::{duality_report, farkas_margin, DualityReport};
pub use milp::{solve_milp, MilpOutcome, MilpStatus};
pub use mps::{read_mps, write_mps};
pub use simplex::SimplexSolver;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    Eq,
    Ge,
    Le,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Interval the row activity must lie in.
    pub fn bounds(&self) -> (f64, f64) {
        match self.sense {
            RowSense::Eq => (self.rhs, self.rhs),
            RowSense::Ge => (self.rhs, f64::INFINITY),
            RowSense::Le => (f64::NEG_INFINITY, self.rhs),
        }
    }
}

/// `min cost'x + offset` over rows and variable bounds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub names: Vec<String>,
    pub cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Row>,
    pub offset: f64,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, cost: f64, lower: f64, upper: f64) -> usize {
        self.names.push(name.into());
        self.cost.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.cost.len() - 1
    }

    pub fn add_row(&mut self, name: impl Into<String>, coeffs: Vec<(usize, f64)>, sense: RowSense, rhs: f64) -> usize {
        self.rows.push(Row { name: name.into(), coeffs, sense, rhs });
        self.rows.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.offset + self.cost.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n || self.names.len() != n {
            return Err(Error::Numerical("variable vectors have inconsistent lengths".into()));
        }
        for j in 0..n {
            if !self.cost[j].is_finite() {
                return Err(Error::Numerical(format!("non-finite cost on {}", self.names[j])));
            }
            if self.lower[j] > self.upper[j] || self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return Err(Error::Numerical(format!("empty bound interval on {}", self.names[j])));
            }
        }
        for row in &self.rows {
            if !row.rhs.is_finite() {
                return Err(Error::Numerical(format!("non-finite rhs on row {}", row.name)));
            }
            for &(j, a) in &row.coeffs {
                if j >= n || !a.is_finite() {
                    return Err(Error::Numerical(format!("bad coefficient in row {}", row.name)));
                }
            }
        }
        Ok(())
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.num_vars() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        for row in &self.rows {
            let (lo, hi) = row.bounds();
            let a = row.activity(x);
            worst = worst.max(lo - a).max(a - hi);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Primal feasibility, scaled by `max(1, |bound|)`.
    pub feasibility: f64,
    /// Reduced-cost tolerance, scaled by `max(1, max|c|)`.
    pub optimality: f64,
    pub integrality: f64,
    /// Relative strong-duality gap accepted on optimal solves.
    pub duality_gap: f64,
    pub pivot: f64,
    pub mip_gap_abs: f64,
    pub mip_gap_rel: f64,
    /// Simplex iteration cap; `0` picks a size-dependent default.
    pub max_iterations: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            feasibility: 1e-7,
            optimality: 1e-9,
            integrality: 1e-6,
            duality_gap: 1e-8,
            pivot: 1e-9,
            mip_gap_abs: 1e-6,
            mip_gap_rel: 1e-9,
            max_iterations: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpOutcome {
    pub status: LpStatus,
    pub x: Vec<f64>,
    /// One multiplier per row.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    /// Row multipliers proving infeasibility (see [`farkas_margin`]).
    pub farkas: Option<Vec<f64>>,
    /// Improving direction in `x` when unbounded.
    pub ray: Option<Vec<f64>>,
    pub iterations: usize,
}

/// Cold-start solve.
pub fn solve_lp(lp: &LinearProgram, tol: &Tolerances) -> LpOutcome {
    SimplexSolver::new(lp, *tol).solve()
}
