//! Bounded-variable revised simplex with an explicit dense basis inverse.
//!
//! Primal phase 1 minimises the sum of bound violations of the basic
//! variables (no artificial columns), phase 2 is the textbook bounded primal
//! method, and a dual simplex takes over whenever the starting basis is dual
//! feasible but primal infeasible. Both ratio tests use the two-pass Harris
//! rule; after a run of degenerate steps pricing falls back to Bland's rule.

use super::{LinearProgram, LpOutcome, LpStatus, Tolerances};

const NONBASIC: usize = usize::MAX;
const REFACTOR_INTERVAL: usize = 100;
const STALL_LIMIT: usize = 50;
const SINGULAR_PIVOT: f64 = 1e-11;
const DUAL_REL: f64 = 1e-10;
const MAX_VERIFY_ROUNDS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Lower,
    Upper,
    /// Free nonbasic variable parked at zero.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Phase1,
    Primal,
    Dual,
}

enum Step {
    Moved(f64),
    Done,
    Infeasible(Vec<f64>),
    Unbounded(Vec<f64>),
    Stuck,
}

/// Persistent solver: bounds may be edited between calls to [`solve`],
/// and the next call starts from the last basis.
///
/// [`solve`]: SimplexSolver::solve
#[derive(Debug, Clone)]
pub struct SimplexSolver {
    n: usize,
    m: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    cost: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    x: Vec<f64>,
    head: Vec<usize>,
    pos: Vec<usize>,
    slot: Vec<Slot>,
    /// Column-major: `binv[k * m + p]` is entry (p, k) of the basis inverse.
    binv: Vec<f64>,
    since_refactor: usize,
    tol: Tolerances,
    dual_tol: f64,
    offset: f64,
    fresh: bool,
}

impl SimplexSolver {
    pub fn new(lp: &LinearProgram, tol: Tolerances) -> Self {
        let n = lp.num_vars();
        let m = lp.num_rows();
        let mut counts = vec![0usize; n + 1];
        for row in &lp.rows {
            for &(j, _) in &row.coeffs {
                counts[j + 1] += 1;
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_start = counts.clone();
        let mut fill = counts;
        let nnz = col_start[n];
        let mut col_row = vec![0usize; nnz];
        let mut col_val = vec![0.0; nnz];
        for (i, row) in lp.rows.iter().enumerate() {
            for &(j, a) in &row.coeffs {
                if a != 0.0 {
                    col_row[fill[j]] = i;
                    col_val[fill[j]] = a;
                    fill[j] += 1;
                }
            }
        }
        // Explicit zeros were skipped above; compact each column.
        let (col_start, col_row, col_val) = compact_columns(&col_start, &fill, col_row, col_val);

        let mut cost = lp.cost.clone();
        cost.resize(n + m, 0.0);
        let mut lo = lp.lower.clone();
        let mut up = lp.upper.clone();
        for row in &lp.rows {
            let (l, u) = row.bounds();
            lo.push(l);
            up.push(u);
        }
        let cmax = lp.cost.iter().fold(1.0f64, |a, c| a.max(c.abs()));
        Self {
            n,
            m,
            col_start,
            col_row,
            col_val,
            cost,
            lo,
            up,
            x: vec![0.0; n + m],
            head: Vec::new(),
            pos: vec![NONBASIC; n + m],
            slot: vec![Slot::Lower; n + m],
            binv: Vec::new(),
            since_refactor: 0,
            tol,
            dual_tol: tol.optimality * cmax,
            offset: lp.offset,
            fresh: true,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn num_rows(&self) -> usize {
        self.m
    }

    pub fn var_bounds(&self, j: usize) -> (f64, f64) {
        (self.lo[j], self.up[j])
    }

    pub fn set_var_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.set_bounds_internal(j, lower, upper);
    }

    /// Replaces the activity interval of row `i`.
    pub fn set_row_bounds(&mut self, i: usize, lower: f64, upper: f64) {
        self.set_bounds_internal(self.n + i, lower, upper);
    }

    fn set_bounds_internal(&mut self, j: usize, lower: f64, upper: f64) {
        self.lo[j] = lower;
        self.up[j] = upper;
        if self.pos[j] == NONBASIC && !self.fresh {
            let slot = match self.slot[j] {
                Slot::Lower if lower.is_finite() => Slot::Lower,
                Slot::Upper if upper.is_finite() => Slot::Upper,
                _ => initial_slot(lower, upper),
            };
            self.slot[j] = slot;
            self.x[j] = slot_value(slot, lower, upper);
        }
    }

    fn column(&self, j: usize) -> ColumnIter<'_> {
        if j < self.n {
            let (a, b) = (self.col_start[j], self.col_start[j + 1]);
            ColumnIter::Structural(self.col_row[a..b].iter().zip(&self.col_val[a..b]))
        } else {
            ColumnIter::Logical(Some(j - self.n))
        }
    }

    fn col_dot(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.n {
            let (a, b) = (self.col_start[j], self.col_start[j + 1]);
            let mut s = 0.0;
            for k in a..b {
                s += self.col_val[k] * y[self.col_row[k]];
            }
            s
        } else {
            -y[j - self.n]
        }
    }

    /// `Σ|a_ij y_i|`, the magnitude behind a reduced cost's rounding error.
    fn col_dot_abs(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.n {
            let (a, b) = (self.col_start[j], self.col_start[j + 1]);
            (a..b).map(|k| (self.col_val[k] * y[self.col_row[k]]).abs()).sum()
        } else {
            y[j - self.n].abs()
        }
    }

    /// Dual tolerance for column `j`, widened by the size of the terms it sums.
    fn col_dual_tol(&self, base: f64, c: f64, j: usize, y: &[f64]) -> f64 {
        base + DUAL_REL * (c.abs() + self.col_dot_abs(j, y))
    }

    fn slack_basis(&mut self) {
        let (n, m) = (self.n, self.m);
        self.head = (n..n + m).collect();
        self.pos = vec![NONBASIC; n + m];
        for (p, &j) in self.head.iter().enumerate() {
            self.pos[j] = p;
        }
        for j in 0..n {
            let slot = initial_slot(self.lo[j], self.up[j]);
            self.slot[j] = slot;
            self.x[j] = slot_value(slot, self.lo[j], self.up[j]);
        }
        self.binv = vec![0.0; m * m];
        for p in 0..m {
            self.binv[p * m + p] = -1.0;
        }
        self.since_refactor = 0;
        self.fresh = false;
    }

    /// Rebuilds the basis inverse by Gauss-Jordan elimination with partial
    /// pivoting. Returns `false` when the basis is numerically singular.
    /// Refactors, dropping back to the slack basis when the current one has gone singular.
    fn refactor_or_reset(&mut self) -> bool {
        if self.refactor() {
            return true;
        }
        log::debug!("basis singular, restarting from slack basis");
        self.slack_basis();
        self.refactor()
    }

    fn refactor(&mut self) -> bool {
        let m = self.m;
        let mut a = vec![0.0; m * m];
        for (p, &j) in self.head.iter().enumerate() {
            for (i, v) in self.column(j) {
                a[i * m + p] = v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let mut piv = c;
            let mut best = a[c * m + c].abs();
            for r in c + 1..m {
                let v = a[r * m + c].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best < SINGULAR_PIVOT {
                return false;
            }
            if piv != c {
                for k in 0..m {
                    a.swap(c * m + k, piv * m + k);
                    inv.swap(c * m + k, piv * m + k);
                }
            }
            let d = 1.0 / a[c * m + c];
            for k in c..m {
                a[c * m + k] *= d;
            }
            for k in 0..m {
                inv[c * m + k] *= d;
            }
            let pivot_row_a: Vec<(usize, f64)> = (c + 1..m).filter_map(|k| nz(a[c * m + k]).map(|v| (k, v))).collect();
            let pivot_row_inv: Vec<(usize, f64)> = (0..m).filter_map(|k| nz(inv[c * m + k]).map(|v| (k, v))).collect();
            for r in 0..m {
                if r == c {
                    continue;
                }
                let f = a[r * m + c];
                if f == 0.0 {
                    continue;
                }
                a[r * m + c] = 0.0;
                for &(k, v) in &pivot_row_a {
                    a[r * m + k] -= f * v;
                }
                for &(k, v) in &pivot_row_inv {
                    inv[r * m + k] -= f * v;
                }
            }
        }
        let mut binv = vec![0.0; m * m];
        for p in 0..m {
            for k in 0..m {
                binv[k * m + p] = inv[p * m + k];
            }
        }
        self.binv = binv;
        self.since_refactor = 0;
        true
    }

    fn compute_xb(&mut self) {
        let m = self.m;
        let mut rhs = vec![0.0; m];
        for j in 0..self.n + self.m {
            if self.pos[j] == NONBASIC && self.x[j] != 0.0 {
                let xj = self.x[j];
                for (i, v) in self.column(j) {
                    rhs[i] -= v * xj;
                }
            }
        }
        let mut xb = vec![0.0; m];
        for (k, &r) in rhs.iter().enumerate() {
            if r != 0.0 {
                let col = &self.binv[k * m..(k + 1) * m];
                for p in 0..m {
                    xb[p] += r * col[p];
                }
            }
        }
        for p in 0..m {
            self.x[self.head[p]] = xb[p];
        }
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut alpha = vec![0.0; m];
        for (k, v) in self.column(j) {
            let col = &self.binv[k * m..(k + 1) * m];
            for p in 0..m {
                alpha[p] += v * col[p];
            }
        }
        alpha
    }

    fn btran(&self, cb: &[f64]) -> Vec<f64> {
        let m = self.m;
        let nzb: Vec<(usize, f64)> = cb.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(p, c)| (p, *c)).collect();
        (0..m)
            .map(|k| {
                let col = &self.binv[k * m..(k + 1) * m];
                nzb.iter().map(|&(p, c)| c * col[p]).sum()
            })
            .collect()
    }

    fn binv_row(&self, r: usize) -> Vec<f64> {
        let m = self.m;
        (0..m).map(|k| self.binv[k * m + r]).collect()
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[f64]) {
        let m = self.m;
        let ar = alpha[r];
        let nzp: Vec<usize> = (0..m).filter(|&p| p != r && alpha[p] != 0.0).collect();
        for k in 0..m {
            let col = &mut self.binv[k * m..(k + 1) * m];
            let v = col[r];
            if v == 0.0 {
                continue;
            }
            let v = v / ar;
            for &p in &nzp {
                col[p] -= alpha[p] * v;
            }
            col[r] = v;
        }
        let leaving = self.head[r];
        self.pos[leaving] = NONBASIC;
        self.head[r] = q;
        self.pos[q] = r;
        self.since_refactor += 1;
    }

    fn feas_tol(&self, j: usize) -> f64 {
        let mut s: f64 = 1.0;
        if self.lo[j].is_finite() {
            s = s.max(self.lo[j].abs());
        }
        if self.up[j].is_finite() {
            s = s.max(self.up[j].abs());
        }
        self.tol.feasibility * s
    }

    fn violation(&self, j: usize) -> f64 {
        let t = self.feas_tol(j);
        let x = self.x[j];
        if x < self.lo[j] - t {
            self.lo[j] - x
        } else if x > self.up[j] + t {
            x - self.up[j]
        } else {
            0.0
        }
    }

    fn primal_feasible(&self) -> bool {
        self.head.iter().all(|&j| self.violation(j) == 0.0)
    }

    fn phase2_duals(&self) -> Vec<f64> {
        let cb: Vec<f64> = self.head.iter().map(|&j| self.cost[j]).collect();
        self.btran(&cb)
    }

    fn dual_feasible(&self, y: &[f64]) -> bool {
        (0..self.n + self.m).all(|j| {
            if self.pos[j] != NONBASIC || self.lo[j] == self.up[j] {
                return true;
            }
            let d = self.cost[j] - self.col_dot(j, y);
            let t = self.col_dual_tol(self.dual_tol, self.cost[j], j, y);
            match self.slot[j] {
                Slot::Lower => d >= -t,
                Slot::Upper => d <= t,
                Slot::Zero => d.abs() <= t,
            }
        })
    }

    /// Runs the simplex method from the current basis (or the slack basis on
    /// the first call).
    pub fn solve(&mut self) -> LpOutcome {
        let max_iter =
            if self.tol.max_iterations > 0 { self.tol.max_iterations } else { 50 * (self.n + self.m) + 1000 };
        if self.fresh {
            self.slack_basis();
        }
        if !self.refactor() {
            log::debug!("warm basis singular, restarting from slack basis");
            self.slack_basis();
        }
        self.compute_xb();

        let mut mode = self.pick_mode();
        let mut iters = 0usize;
        let mut stall = 0usize;
        let mut bland = false;
        let mut verified = false;
        let mut verify_rounds = 0usize;
        let mut restarts = 0usize;
        loop {
            if iters >= max_iter {
                return self.outcome(LpStatus::IterationLimit, iters, None, None);
            }
            if self.since_refactor >= REFACTOR_INTERVAL {
                if !self.refactor_or_reset() {
                    return self.outcome(LpStatus::NumericalFailure, iters, None, None);
                }
                self.compute_xb();
            }
            let step = match mode {
                Mode::Dual => self.dual_step(bland),
                Mode::Phase1 => self.primal_step(true, bland),
                Mode::Primal => self.primal_step(false, bland),
            };
            match step {
                Step::Moved(t) => {
                    iters += 1;
                    verified = false;
                    if t <= 1e-12 {
                        stall += 1;
                        if stall > STALL_LIMIT {
                            bland = true;
                        }
                    } else {
                        stall = 0;
                        bland = false;
                    }
                }
                Step::Done => {
                    if mode != Mode::Primal {
                        mode = Mode::Primal;
                        continue;
                    }
                    if !verified {
                        verified = true;
                        verify_rounds += 1;
                        if !self.refactor_or_reset() {
                            return self.outcome(LpStatus::NumericalFailure, iters, None, None);
                        }
                        self.compute_xb();
                        mode = self.pick_mode();
                        // Bases that keep trading places over rounding-level reduced costs are optimal.
                        if mode == Mode::Primal && verify_rounds > MAX_VERIFY_ROUNDS {
                            return self.outcome(LpStatus::Optimal, iters, None, None);
                        }
                        continue;
                    }
                    return self.outcome(LpStatus::Optimal, iters, None, None);
                }
                Step::Infeasible(y) => {
                    if !verified {
                        verified = true;
                        if !self.refactor_or_reset() {
                            return self.outcome(LpStatus::NumericalFailure, iters, None, None);
                        }
                        self.compute_xb();
                        if mode == Mode::Dual {
                            // re-derive the certificate from a clean factorisation
                            mode = self.pick_mode();
                        }
                        continue;
                    }
                    return self.outcome(LpStatus::Infeasible, iters, Some(y), None);
                }
                Step::Unbounded(ray) => {
                    return self.outcome(LpStatus::Unbounded, iters, None, Some(ray));
                }
                Step::Stuck => {
                    if mode == Mode::Dual {
                        mode = Mode::Phase1;
                        continue;
                    }
                    // Refactor first; if that is not enough, start over from the slack basis.
                    restarts += 1;
                    match restarts {
                        1 => {}
                        2 => self.slack_basis(),
                        _ => return self.outcome(LpStatus::NumericalFailure, iters, None, None),
                    }
                    log::debug!("simplex stuck in {mode:?}, restart {restarts}");
                    if !self.refactor_or_reset() {
                        return self.outcome(LpStatus::NumericalFailure, iters, None, None);
                    }
                    self.compute_xb();
                    mode = self.pick_mode();
                    bland = true;
                    verified = false;
                }
            }
        }
    }

    fn pick_mode(&self) -> Mode {
        if self.primal_feasible() {
            Mode::Primal
        } else if self.dual_feasible(&self.phase2_duals()) {
            Mode::Dual
        } else {
            Mode::Phase1
        }
    }

    fn primal_step(&mut self, phase1: bool, bland: bool) -> Step {
        let m = self.m;
        let cb: Vec<f64> = if phase1 {
            self.head
                .iter()
                .map(|&j| {
                    let t = self.feas_tol(j);
                    if self.x[j] < self.lo[j] - t {
                        -1.0
                    } else if self.x[j] > self.up[j] + t {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        } else {
            self.head.iter().map(|&j| self.cost[j]).collect()
        };
        if phase1 && cb.iter().all(|&c| c == 0.0) {
            return Step::Done;
        }
        let y = self.btran(&cb);
        let dtol = if phase1 { 1e-9 } else { self.dual_tol };

        let mut entering: Option<(usize, f64)> = None;
        let mut best = 0.0;
        for j in 0..self.n + m {
            if self.pos[j] != NONBASIC || self.lo[j] == self.up[j] {
                continue;
            }
            let c = if phase1 { 0.0 } else { self.cost[j] };
            let d = c - self.col_dot(j, &y);
            let dtol = self.col_dual_tol(dtol, c, j, &y);
            let dir = match self.slot[j] {
                Slot::Lower if d < -dtol => 1.0,
                Slot::Upper if d > dtol => -1.0,
                Slot::Zero if d.abs() > dtol => -d.signum(),
                _ => continue,
            };
            if bland {
                entering = Some((j, dir));
                break;
            }
            if d.abs() > best {
                best = d.abs();
                entering = Some((j, dir));
            }
        }
        let Some((q, dir)) = entering else {
            return if phase1 { Step::Infeasible(y) } else { Step::Done };
        };
        let alpha = self.ftran(q);

        // Pass 1: relaxed bound on the step length.
        let piv = self.tol.pivot;
        let mut tmax = f64::INFINITY;
        for p in 0..m {
            if alpha[p].abs() <= piv {
                continue;
            }
            let j = self.head[p];
            let slack = if bland { 0.0 } else { self.feas_tol(j) };
            if let Some((t, _)) = self.primal_ratio(j, -alpha[p] * dir, slack, phase1) {
                tmax = tmax.min(t);
            }
        }
        let flip = self.up[q] - self.lo[q];
        if tmax.is_infinite() && flip.is_infinite() {
            if phase1 {
                return Step::Stuck;
            }
            let mut ray = vec![0.0; self.n];
            if q < self.n {
                ray[q] = dir;
            }
            for p in 0..m {
                let j = self.head[p];
                if j < self.n {
                    ray[j] = -alpha[p] * dir;
                }
            }
            return Step::Unbounded(ray);
        }
        if flip <= tmax {
            self.x[q] += dir * flip;
            for p in 0..m {
                if alpha[p] != 0.0 {
                    let j = self.head[p];
                    self.x[j] -= alpha[p] * dir * flip;
                }
            }
            self.slot[q] = if dir > 0.0 { Slot::Upper } else { Slot::Lower };
            return Step::Moved(flip);
        }

        // Pass 2: among ratios within the relaxed bound take the largest pivot.
        let mut chosen: Option<(usize, f64, Slot)> = None;
        let mut best_piv = 0.0;
        for p in 0..m {
            if alpha[p].abs() <= piv {
                continue;
            }
            let j = self.head[p];
            if let Some((t, slot)) = self.primal_ratio(j, -alpha[p] * dir, 0.0, phase1) {
                if t <= tmax + if bland { 1e-12 } else { 0.0 } {
                    let better = if bland {
                        chosen.map_or(true, |(cp, _, _)| j < self.head[cp])
                    } else {
                        alpha[p].abs() > best_piv
                    };
                    if better {
                        best_piv = alpha[p].abs();
                        chosen = Some((p, t.max(0.0), slot));
                    }
                }
            }
        }
        let Some((r, t, slot)) = chosen else {
            return Step::Stuck;
        };
        self.x[q] += dir * t;
        for p in 0..m {
            if alpha[p] != 0.0 {
                let j = self.head[p];
                self.x[j] -= alpha[p] * dir * t;
            }
        }
        let leaving = self.head[r];
        self.slot[leaving] = slot;
        self.x[leaving] = slot_value(slot, self.lo[leaving], self.up[leaving]);
        self.pivot(r, q, &alpha);
        Step::Moved(t)
    }

    /// Step length at which basic variable `j`, moving at `rate` per unit of
    /// the entering variable, hits a blocking bound.
    fn primal_ratio(&self, j: usize, rate: f64, slack: f64, phase1: bool) -> Option<(f64, Slot)> {
        let (lo, up, x) = (self.lo[j], self.up[j], self.x[j]);
        let t = self.feas_tol(j);
        if phase1 && x < lo - t {
            return (rate > 0.0).then(|| ((lo - x + slack) / rate, Slot::Lower));
        }
        if phase1 && x > up + t {
            return (rate < 0.0).then(|| ((x - up + slack) / -rate, Slot::Upper));
        }
        if rate > 0.0 && up.is_finite() {
            Some((((up + slack - x) / rate).max(0.0), Slot::Upper))
        } else if rate < 0.0 && lo.is_finite() {
            Some((((x - lo + slack) / -rate).max(0.0), Slot::Lower))
        } else {
            None
        }
    }

    fn dual_step(&mut self, bland: bool) -> Step {
        let m = self.m;
        let mut leave: Option<usize> = None;
        let mut worst = 0.0;
        for p in 0..m {
            let j = self.head[p];
            let v = self.violation(j);
            if v <= 0.0 {
                continue;
            }
            let better = if bland { leave.map_or(true, |lp| j < self.head[lp]) } else { v > worst };
            if better {
                worst = v;
                leave = Some(p);
            }
        }
        let Some(r) = leave else {
            return Step::Done;
        };
        let jr = self.head[r];
        let below = self.x[jr] < self.lo[jr];
        let y = self.phase2_duals();
        let rho = self.binv_row(r);
        let piv = self.tol.pivot;

        let mut cands: Vec<(usize, f64, f64)> = Vec::new();
        let mut tmax = f64::INFINITY;
        for j in 0..self.n + m {
            if self.pos[j] != NONBASIC || self.lo[j] == self.up[j] {
                continue;
            }
            let arj = self.col_dot(j, &rho);
            if arj.abs() <= piv {
                continue;
            }
            let d = self.cost[j] - self.col_dot(j, &y);
            let slot = self.slot[j];
            let up_move = matches!(slot, Slot::Lower | Slot::Zero);
            let down_move = matches!(slot, Slot::Upper | Slot::Zero);
            let eligible = if below {
                (up_move && arj < 0.0) || (down_move && arj > 0.0)
            } else {
                (up_move && arj > 0.0) || (down_move && arj < 0.0)
            };
            if !eligible {
                continue;
            }
            let dd = match slot {
                Slot::Lower => d.max(0.0),
                Slot::Upper => (-d).max(0.0),
                Slot::Zero => d.abs(),
            };
            let slack = if bland { 0.0 } else { self.dual_tol };
            tmax = tmax.min((dd + slack) / arj.abs());
            cands.push((j, arj, dd / arj.abs()));
        }
        if cands.is_empty() {
            let ray: Vec<f64> = if below { rho.iter().map(|v| -v).collect() } else { rho };
            return Step::Infeasible(ray);
        }
        let mut chosen: Option<(usize, f64)> = None;
        let mut best = 0.0;
        for &(j, arj, ratio) in &cands {
            if ratio <= tmax + if bland { 1e-12 } else { 0.0 } {
                let better = if bland { chosen.is_none() } else { arj.abs() > best };
                if better {
                    best = arj.abs();
                    chosen = Some((j, ratio));
                }
            }
        }
        let Some((q, ratio)) = chosen else {
            return Step::Stuck;
        };
        let alpha = self.ftran(q);
        if alpha[r].abs() <= piv {
            return Step::Stuck;
        }
        let target = if below { self.lo[jr] } else { self.up[jr] };
        let delta = (self.x[jr] - target) / alpha[r];
        self.x[q] += delta;
        for p in 0..m {
            if alpha[p] != 0.0 {
                let j = self.head[p];
                self.x[j] -= alpha[p] * delta;
            }
        }
        self.slot[jr] = if below { Slot::Lower } else { Slot::Upper };
        self.x[jr] = target;
        self.pivot(r, q, &alpha);
        // Dual progress is the reduced-cost step; a zero ratio is a degenerate pivot.
        Step::Moved(ratio)
    }

    fn outcome(
        &self,
        status: LpStatus,
        iterations: usize,
        farkas: Option<Vec<f64>>,
        ray: Option<Vec<f64>>,
    ) -> LpOutcome {
        let y = self.phase2_duals();
        let reduced_costs: Vec<f64> = (0..self.n).map(|j| self.cost[j] - self.col_dot(j, &y)).collect();
        let x: Vec<f64> = self.x[..self.n].to_vec();
        let objective = self.offset + self.cost[..self.n].iter().zip(&x).map(|(c, v)| c * v).sum::<f64>();
        LpOutcome { status, x, duals: y, reduced_costs, objective, farkas, ray, iterations }
    }
}

fn nz(v: f64) -> Option<f64> {
    (v != 0.0).then_some(v)
}

fn initial_slot(lo: f64, up: f64) -> Slot {
    if lo.is_finite() {
        Slot::Lower
    } else if up.is_finite() {
        Slot::Upper
    } else {
        Slot::Zero
    }
}

fn slot_value(slot: Slot, lo: f64, up: f64) -> f64 {
    match slot {
        Slot::Lower => lo,
        Slot::Upper => up,
        Slot::Zero => 0.0,
    }
}

fn compact_columns(
    start: &[usize],
    fill: &[usize],
    rows: Vec<usize>,
    vals: Vec<f64>,
) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
    let n = start.len() - 1;
    let mut new_start = Vec::with_capacity(n + 1);
    let mut new_rows = Vec::with_capacity(rows.len());
    let mut new_vals = Vec::with_capacity(vals.len());
    new_start.push(0);
    for j in 0..n {
        for k in start[j]..fill[j] {
            new_rows.push(rows[k]);
            new_vals.push(vals[k]);
        }
        new_start.push(new_rows.len());
    }
    (new_start, new_rows, new_vals)
}

enum ColumnIter<'a> {
    Structural(std::iter::Zip<std::slice::Iter<'a, usize>, std::slice::Iter<'a, f64>>),
    Logical(Option<usize>),
}

impl Iterator for ColumnIter<'_> {
    type Item = (usize, f64);

    fn next(&mut self) -> Option<(usize, f64)> {
        match self {
            ColumnIter::Structural(it) => it.next().map(|(&i, &v)| (i, v)),
            ColumnIter::Logical(slot) => slot.take().map(|i| (i, -1.0)),
        }
    }
}
