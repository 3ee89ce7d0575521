use serde::{Deserialize, Serialize};

use super::{LinearProgram, LpOutcome};

/// Optimality certificate residuals recomputed from the problem data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `|primal - dual|`.
    pub gap: f64,
    /// `gap / (1 + |primal|)`.
    pub relative_gap: f64,
    pub max_complementarity: f64,
    /// Worst sign violation of row duals or reduced costs.
    pub max_dual_infeasibility: f64,
}

pub fn duality_report(lp: &LinearProgram, outcome: &LpOutcome) -> DualityReport {
    let x = &outcome.x;
    let y = &outcome.duals;
    let mut reduced = lp.cost.clone();
    for (row, &yi) in lp.rows.iter().zip(y) {
        for &(j, a) in &row.coeffs {
            reduced[j] -= a * yi;
        }
    }
    let mut dual_obj = lp.offset;
    let mut comp: f64 = 0.0;
    let mut dinf: f64 = 0.0;
    for (row, &yi) in lp.rows.iter().zip(y) {
        let (lo, hi) = row.bounds();
        let act = row.activity(x);
        let bound = if yi > 0.0 {
            lo
        } else if yi < 0.0 {
            hi
        } else {
            row.rhs
        };
        if bound.is_finite() {
            dual_obj += yi * bound;
            comp = comp.max(yi.abs() * (act - bound).abs());
        } else {
            dinf = dinf.max(yi.abs());
            dual_obj += yi * act;
        }
    }
    for j in 0..lp.num_vars() {
        let d = reduced[j];
        let bound = if d > 0.0 {
            lp.lower[j]
        } else if d < 0.0 {
            lp.upper[j]
        } else {
            x[j]
        };
        if bound.is_finite() {
            dual_obj += d * bound;
            comp = comp.max(d.abs() * (x[j] - bound).abs());
        } else {
            dinf = dinf.max(d.abs());
            dual_obj += d * x[j];
        }
    }
    let primal = lp.objective_value(x);
    let gap = (primal - dual_obj).abs();
    DualityReport {
        primal_objective: primal,
        dual_objective: dual_obj,
        gap,
        relative_gap: gap / (1.0 + primal.abs()),
        max_complementarity: comp,
        max_dual_infeasibility: dinf,
    }
}

/// Certificate margin of row multipliers `y` for infeasibility:
/// `min over row intervals of y'r  -  max over the variable box of (A'y)'x`.
///
/// A strictly positive value proves that no `x` in the box satisfies the rows.
/// Multipliers below `1e-9 * max|y|` are dropped, and components of `A'y`
/// below `1e-9` of their largest term are treated as zero.
pub fn farkas_margin(lp: &LinearProgram, y: &[f64]) -> f64 {
    let ymax = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if ymax == 0.0 {
        return f64::NEG_INFINITY;
    }
    let zero = 1e-9 * ymax;
    let mut lhs = 0.0;
    for (row, &yi) in lp.rows.iter().zip(y) {
        if yi.abs() <= zero {
            continue;
        }
        let (lo, hi) = row.bounds();
        let b = if yi > 0.0 { lo } else { hi };
        if !b.is_finite() {
            return f64::NEG_INFINITY;
        }
        lhs += yi * b;
    }
    let mut aty = vec![0.0; lp.num_vars()];
    let mut scale = vec![0.0f64; lp.num_vars()];
    for (row, &yi) in lp.rows.iter().zip(y) {
        if yi.abs() <= zero {
            continue;
        }
        for &(j, a) in &row.coeffs {
            aty[j] += a * yi;
            scale[j] = scale[j].max((a * yi).abs());
        }
    }
    let mut rhs = 0.0;
    for j in 0..lp.num_vars() {
        let g = aty[j];
        if g.abs() <= 1e-9 * scale[j].max(ymax) {
            continue;
        }
        let b = if g > 0.0 { lp.upper[j] } else { lp.lower[j] };
        if !b.is_finite() {
            return f64::NEG_INFINITY;
        }
        rhs += g * b;
    }
    lhs - rhs
}
