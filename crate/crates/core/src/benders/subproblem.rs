use crate::formulation::{Block, CompactMilp, Partition};
use crate::lp::{LinearProgram, LpOutcome, RowSense, SimplexSolver, Tolerances};

/// Operating subproblem for fixed binaries, with its rows grouped as equality (λ),
/// inequality (μ) and balance (σ) blocks.
#[derive(Debug, Clone)]
pub struct Subproblem {
    /// Model positions of the continuous columns.
    pub cols: Vec<usize>,
    /// Model positions of the binaries, in master order.
    pub ys: Vec<usize>,
    /// Model positions of the rows, λ rows then μ rows then σ rows.
    pub rows: Vec<usize>,
    pub n_eq: usize,
    pub n_ineq: usize,
    pub n_bal: usize,
    /// Per row, coefficients on local continuous columns.
    a: Vec<Vec<(usize, f64)>>,
    /// Per row, coefficients on local binaries.
    c: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    pub cost: Vec<f64>,
    pub free: Vec<bool>,
    /// Primal form: continuous columns, then one free copy per binary fixed by its own row.
    pub primal: LinearProgram,
}

impl Subproblem {
    pub fn new(milp: &CompactMilp) -> Self {
        let ys = milp.binaries();
        let cols: Vec<usize> = (0..milp.num_vars()).filter(|&j| milp.vars[j].partition() != Partition::Y).collect();
        let mut col_local = vec![usize::MAX; milp.num_vars()];
        let mut y_local = vec![usize::MAX; milp.num_vars()];
        for (k, &j) in cols.iter().enumerate() {
            col_local[j] = k;
        }
        for (k, &j) in ys.iter().enumerate() {
            y_local[j] = k;
        }
        let eq = milp.rows_in(Block::Equality);
        let ineq = milp.rows_in(Block::Inequality);
        let bal = milp.rows_in(Block::Balance);
        let (n_eq, n_ineq, n_bal) = (eq.len(), ineq.len(), bal.len());
        let rows: Vec<usize> = eq.into_iter().chain(ineq).chain(bal).collect();

        let mut a = Vec::with_capacity(rows.len());
        let mut c = Vec::with_capacity(rows.len());
        let mut rhs = Vec::with_capacity(rows.len());
        for &i in &rows {
            let r = &milp.rows[i];
            let mut ar = Vec::new();
            let mut cr = Vec::new();
            for &(j, v) in &r.coeffs {
                if y_local[j] != usize::MAX {
                    cr.push((y_local[j], v));
                } else {
                    ar.push((col_local[j], v));
                }
            }
            a.push(ar);
            c.push(cr);
            rhs.push(r.rhs);
        }
        let cost: Vec<f64> = cols.iter().map(|&j| milp.cost[j]).collect();
        let free: Vec<bool> = cols.iter().map(|&j| milp.vars[j].partition() == Partition::F).collect();

        let mut primal = LinearProgram::new();
        for (k, &j) in cols.iter().enumerate() {
            let (lo, up) = milp.bounds(j);
            primal.add_var(milp.vars[j].name(), cost[k], lo, up);
        }
        let ny = ys.len();
        let ncol = cols.len();
        for &j in &ys {
            primal.add_var(format!("{}_sp", milp.vars[j].name()), 0.0, f64::NEG_INFINITY, f64::INFINITY);
        }
        for (k, &i) in rows.iter().enumerate() {
            let r = &milp.rows[i];
            let mut coeffs = a[k].clone();
            coeffs.extend(c[k].iter().map(|&(y, v)| (ncol + y, v)));
            primal.add_row(r.name(), coeffs, r.sense, rhs[k]);
        }
        for k in 0..ny {
            primal.add_row(format!("fix_{k}"), vec![(ncol + k, 1.0)], RowSense::Eq, 0.0);
        }
        Self { cols, ys, rows, n_eq, n_ineq, n_bal, a, c, rhs, cost, free, primal }
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_y(&self) -> usize {
        self.ys.len()
    }

    pub fn is_ge(&self, i: usize) -> bool {
        i >= self.n_eq && i < self.n_eq + self.n_ineq
    }

    /// `H` stacked over the three blocks.
    pub fn h(&self) -> &[f64] {
        &self.rhs
    }

    /// Right-hand side with binaries moved over: `H − C·y`.
    pub fn rhs_at(&self, y: &[f64]) -> Vec<f64> {
        (0..self.rows.len()).map(|i| self.rhs[i] - self.c[i].iter().map(|&(k, v)| v * y[k]).sum::<f64>()).collect()
    }

    /// Fixing-row duals implied by `u` when the binary copies are free: `π = −Cᵀu`.
    pub fn pi_from(&self, u: &[f64]) -> Vec<f64> {
        let mut pi = vec![0.0; self.ys.len()];
        for (i, row) in self.c.iter().enumerate() {
            if u[i] != 0.0 {
                for &(k, v) in row {
                    pi[k] -= v * u[i];
                }
            }
        }
        pi
    }

    /// Largest violation of dual feasibility for `u` against costs `c` (zero for rays).
    pub fn dual_infeasibility(&self, u: &[f64], homogeneous: bool) -> f64 {
        let mut aty = vec![0.0; self.cols.len()];
        for (i, row) in self.a.iter().enumerate() {
            for &(j, v) in row {
                aty[j] += v * u[i];
            }
        }
        let mut worst: f64 = 0.0;
        for j in 0..self.cols.len() {
            let c = if homogeneous { 0.0 } else { self.cost[j] };
            let d = c - aty[j];
            worst = worst.max(if self.free[j] { d.abs() } else { -d });
        }
        for (i, &v) in u.iter().enumerate() {
            if self.is_ge(i) {
                worst = worst.max(-v);
            }
        }
        worst
    }

    /// `max bᵀu` over the dual feasible set, as a minimisation LP in `u`.
    ///
    /// With `homogeneous` the costs are dropped and every multiplier is boxed to `[-1, 1]`
    /// (`[0, 1]` on inequality rows), which normalises extreme rays.
    pub fn dual_form(&self, b: &[f64], homogeneous: bool) -> LinearProgram {
        let mut lp = LinearProgram::new();
        for i in 0..self.rows.len() {
            let lo = if self.is_ge(i) {
                0.0
            } else if homogeneous {
                -1.0
            } else {
                f64::NEG_INFINITY
            };
            let up = if homogeneous { 1.0 } else { f64::INFINITY };
            lp.add_var(format!("u{i}"), -b[i], lo, up);
        }
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.cols.len()];
        for (i, row) in self.a.iter().enumerate() {
            for &(j, v) in row {
                cols[j].push((i, v));
            }
        }
        for (j, coeffs) in cols.into_iter().enumerate() {
            let sense = if self.free[j] { RowSense::Eq } else { RowSense::Le };
            let rhs = if homogeneous { 0.0 } else { self.cost[j] };
            lp.add_row(format!("col{j}"), coeffs, sense, rhs);
        }
        lp
    }
}

/// Warm-started primal subproblem solver; only the fixing rows change between calls.
pub struct PrimalSolver {
    solver: SimplexSolver,
    fix0: usize,
}

impl PrimalSolver {
    pub fn new(sp: &Subproblem, tol: Tolerances) -> Self {
        Self { solver: SimplexSolver::new(&sp.primal, tol), fix0: sp.num_rows() }
    }

    pub fn solve_at(&mut self, y: &[f64]) -> LpOutcome {
        for (k, &v) in y.iter().enumerate() {
            self.solver.set_row_bounds(self.fix0 + k, v, v);
        }
        self.solver.solve()
    }
}
