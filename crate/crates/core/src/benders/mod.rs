//! Benders dual decomposition over the binary block, with optional Pareto-optimal cuts.

mod subproblem;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulation::{Block, CompactMilp, PlanSolution};
use crate::lp::{solve_lp, solve_milp, LinearProgram, LpOutcome, LpStatus, MilpStatus, RowSense, Tolerances};
use crate::system::SystemData;

pub use subproblem::{PrimalSolver, Subproblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BendersMode {
    Plain,
    Pareto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BendersOptions {
    pub mode: BendersMode,
    /// Relative gap `(UB − LB)/UB` at which the loop stops.
    pub tau: f64,
    pub iteration_limit: usize,
    pub master_node_limit: usize,
    pub tolerances: Tolerances,
}

impl Default for BendersOptions {
    fn default() -> Self {
        Self {
            mode: BendersMode::Pareto,
            tau: 1e-6,
            iteration_limit: 200,
            master_node_limit: 100_000,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutKind {
    Optimality,
    Feasibility,
}

/// Optimality: `Z ≥ constant + coeffsᵀY`. Feasibility: `constant + coeffsᵀY ≤ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub kind: CutKind,
    pub coeffs: Vec<f64>,
    pub constant: f64,
}

impl Cut {
    pub fn value(&self, y: &[f64]) -> f64 {
        self.constant + self.coeffs.iter().zip(y).map(|(a, b)| a * b).sum::<f64>()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MasterState {
    pub ybar: Vec<f64>,
    pub lb_history: Vec<f64>,
    pub cuts: Vec<Cut>,
    pub iteration: usize,
}

/// Subproblem dual multipliers: λ on equality rows, μ ≥ 0 on inequality rows,
/// σ on balance rows and π on the fixing rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPoint {
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub pi: Vec<f64>,
    pub is_ray: bool,
}

impl DualPoint {
    fn from_u(sp: &Subproblem, u: &[f64], is_ray: bool) -> Self {
        let (a, b) = (sp.n_eq, sp.n_eq + sp.n_ineq);
        Self { lambda: u[..a].to_vec(), mu: u[a..b].to_vec(), sigma: u[b..].to_vec(), pi: sp.pi_from(u), is_ray }
    }

    pub fn u(&self) -> Vec<f64> {
        self.lambda.iter().chain(&self.mu).chain(&self.sigma).copied().collect()
    }

    /// `H1ᵀλ + H2ᵀμ + Mᵀσ`.
    pub fn bracket(&self, sp: &Subproblem) -> f64 {
        self.u().iter().zip(sp.h()).map(|(u, h)| u * h).sum()
    }

    /// Dual objective at `y`: bracket plus `yᵀπ`.
    pub fn value_at(&self, sp: &Subproblem, y: &[f64]) -> f64 {
        self.bracket(sp) + self.pi.iter().zip(y).map(|(p, v)| p * v).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorePoint {
    pub y: Vec<f64>,
}

impl CorePoint {
    pub fn new(n: usize) -> Self {
        Self { y: vec![0.5; n] }
    }

    /// Moves halfway towards `ybar`.
    pub fn update(&mut self, ybar: &[f64]) {
        for (c, &y) in self.y.iter_mut().zip(ybar) {
            *c = 0.5 * (*c + y);
        }
    }
}

#[derive(Debug, Clone)]
pub enum DspOutcome {
    /// Optimal dual point, its value `Z̄` and the primal operating solution.
    Bounded { dual: DualPoint, value: f64, primal: Vec<f64> },
    /// Primal infeasible; carries the normalised ray from the modified subproblem.
    Unbounded { ray: DualPoint },
}

/// Master objective row `Z − IᵀY ≥ offset` plus the `A Y ≥ B` block and every cut.
pub fn master_lp(milp: &CompactMilp, cuts: &[Cut]) -> (LinearProgram, Vec<usize>) {
    let ys = milp.binaries();
    let mut local = vec![usize::MAX; milp.num_vars()];
    let mut lp = LinearProgram::new();
    for (k, &j) in ys.iter().enumerate() {
        local[j] = k;
        lp.add_var(milp.vars[j].name(), 0.0, 0.0, 1.0);
    }
    let z = lp.add_var("Z_LB", 1.0, f64::NEG_INFINITY, f64::INFINITY);
    for i in milp.rows_in(Block::Master) {
        let r = &milp.rows[i];
        let coeffs = r.coeffs.iter().map(|&(j, v)| (local[j], v)).collect();
        lp.add_row(r.name(), coeffs, r.sense, r.rhs);
    }
    let mut base = vec![(z, 1.0)];
    base.extend(ys.iter().enumerate().map(|(k, &j)| (k, -milp.cost[j])));
    add_scaled(&mut lp, "z_floor".into(), base, milp.objective_offset);
    for (n, cut) in cuts.iter().enumerate() {
        match cut.kind {
            CutKind::Optimality => {
                let mut t = vec![(z, 1.0)];
                t.extend(cut.coeffs.iter().enumerate().filter(|(_, a)| **a != 0.0).map(|(k, a)| (k, -a)));
                add_scaled(&mut lp, format!("opt_cut{n}"), t, cut.constant);
            }
            CutKind::Feasibility => {
                let t = cut.coeffs.iter().enumerate().filter(|(_, a)| **a != 0.0).map(|(k, a)| (k, -a)).collect();
                add_scaled(&mut lp, format!("feas_cut{n}"), t, cut.constant);
            }
        }
    }
    (lp, (0..ys.len()).collect())
}

/// Adds `coeffs·x ≥ rhs` divided through by its largest coefficient; cut
/// coefficients span many orders of magnitude and the master mixes them with unit rows.
fn add_scaled(lp: &mut LinearProgram, name: String, coeffs: Vec<(usize, f64)>, rhs: f64) {
    let s = coeffs.iter().fold(0.0f64, |a, &(_, v)| a.max(v.abs()));
    let s = if s > 0.0 { s } else { 1.0 };
    lp.add_row(name, coeffs.into_iter().map(|(j, v)| (j, v / s)).collect(), RowSense::Ge, rhs / s);
}

/// Returns `(Ȳ, Z_LB, nodes)`.
pub fn solve_master(state: &MasterState, milp: &CompactMilp, opts: &BendersOptions) -> Result<(Vec<f64>, f64, usize)> {
    let (lp, bin) = master_lp(milp, &state.cuts);
    let out = solve_milp(&lp, &bin, &opts.tolerances, opts.master_node_limit);
    match out.status {
        MilpStatus::Optimal => Ok((out.x[..bin.len()].to_vec(), out.objective, out.nodes)),
        MilpStatus::Infeasible => Err(Error::Infeasible("master problem has no feasible binary assignment".into())),
        MilpStatus::NodeLimit => Err(Error::Numerical("master node limit reached".into())),
        MilpStatus::Failed => Err(Error::Numerical("master relaxation failed".into())),
    }
}

fn u_from_duals(sp: &Subproblem, out: &LpOutcome) -> Vec<f64> {
    out.duals[..sp.num_rows()].to_vec()
}

/// Solves the subproblem in primal form at `ybar` and reads its duals; infeasible
/// subproblems go through the modified dual for a normalised ray.
pub fn solve_dsp(sp: &Subproblem, solver: &mut PrimalSolver, ybar: &[f64], tol: &Tolerances) -> Result<DspOutcome> {
    let out = solver.solve_at(ybar);
    match out.status {
        LpStatus::Optimal => {
            let u = u_from_duals(sp, &out);
            let dual = DualPoint::from_u(sp, &u, false);
            let value = dual.value_at(sp, ybar);
            Ok(DspOutcome::Bounded { dual, value, primal: out.x[..sp.cols.len()].to_vec() })
        }
        LpStatus::Infeasible => Ok(DspOutcome::Unbounded { ray: solve_mdsp(sp, ybar, tol)? }),
        s => Err(Error::Numerical(format!("subproblem ended with {s:?}"))),
    }
}

/// Solves the dual subproblem directly in dual form; used to cross-check `solve_dsp`.
pub fn solve_dsp_direct(sp: &Subproblem, ybar: &[f64], tol: &Tolerances) -> Result<DspOutcome> {
    let lp = sp.dual_form(&sp.rhs_at(ybar), false);
    let out = solve_lp(&lp, tol);
    match out.status {
        LpStatus::Optimal => {
            let dual = DualPoint::from_u(sp, &out.x, false);
            let value = dual.value_at(sp, ybar);
            Ok(DspOutcome::Bounded { dual, value, primal: Vec::new() })
        }
        LpStatus::Unbounded => Ok(DspOutcome::Unbounded { ray: solve_mdsp(sp, ybar, tol)? }),
        s => Err(Error::Numerical(format!("dual subproblem ended with {s:?}"))),
    }
}

/// `UB = Z̄ + IᵀȲ + offset`.
pub fn upper_bound(dual: &DualPoint, sp: &Subproblem, ybar: &[f64], milp: &CompactMilp) -> f64 {
    let inv: f64 = sp.ys.iter().zip(ybar).map(|(&j, y)| milp.cost[j] * y).sum();
    dual.value_at(sp, ybar) + inv + milp.objective_offset
}

/// Homogeneous dual with every multiplier boxed; a positive optimum is a ray proving
/// the subproblem infeasible at `ybar`.
pub fn solve_mdsp(sp: &Subproblem, ybar: &[f64], tol: &Tolerances) -> Result<DualPoint> {
    let b = sp.rhs_at(ybar);
    let out = solve_lp(&sp.dual_form(&b, true), tol);
    if out.status != LpStatus::Optimal {
        return Err(Error::Numerical(format!("modified dual subproblem ended with {:?}", out.status)));
    }
    let value: f64 = -out.objective;
    if !(value > 1e-9) {
        return Err(Error::Consistency(format!(
            "modified dual subproblem optimum {value:.3e} contradicts an infeasible subproblem"
        )));
    }
    Ok(DualPoint::from_u(sp, &out.x, true))
}

/// Re-optimises the dual objective at the core point over the optimal face at `ybar`.
/// Returns `None` when the face restriction cannot be met numerically.
pub fn solve_sdsp(
    sp: &Subproblem,
    core: &CorePoint,
    ybar: &[f64],
    zbar: f64,
    tol: &Tolerances,
) -> Result<Option<DualPoint>> {
    let mut lp = sp.dual_form(&sp.rhs_at(&core.y), false);
    let b = sp.rhs_at(ybar);
    let face: Vec<(usize, f64)> = b.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, v)| (i, *v)).collect();
    lp.add_row("optimal_face", face, RowSense::Ge, zbar - 1e-9 * zbar.abs().max(1.0));
    let out = solve_lp(&lp, tol);
    match out.status {
        LpStatus::Optimal => Ok(Some(DualPoint::from_u(sp, &out.x, false))),
        LpStatus::Infeasible | LpStatus::Unbounded => {
            log::info!("Pareto subproblem ended with {:?}; using the plain dual point", out.status);
            Ok(None)
        }
        s => Err(Error::Numerical(format!("Pareto subproblem ended with {s:?}"))),
    }
}

pub fn optimality_cut(dual: &DualPoint, sp: &Subproblem, milp: &CompactMilp) -> Cut {
    Cut {
        kind: CutKind::Optimality,
        coeffs: sp.ys.iter().zip(&dual.pi).map(|(&j, p)| milp.cost[j] + p).collect(),
        constant: milp.objective_offset + dual.bracket(sp),
    }
}

pub fn feasibility_cut(ray: &DualPoint, sp: &Subproblem) -> Cut {
    Cut { kind: CutKind::Feasibility, coeffs: ray.pi.clone(), constant: ray.bracket(sp) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub lower_bound: f64,
    /// Incumbent, `inf` until the first feasible binary assignment.
    pub upper_bound: f64,
    pub gap: f64,
    pub cut: CutKind,
    pub master_nodes: usize,
    /// Pareto subproblem fell back to the plain dual point.
    pub fallback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BendersStatus {
    Converged,
    IterationLimit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BendersResult {
    pub status: BendersStatus,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub trace: Vec<TraceRecord>,
    pub state: MasterState,
    /// Incumbent binaries and the recovered full solution, when any assignment was feasible.
    pub incumbent: Option<Vec<f64>>,
    pub solution: Option<PlanSolution>,
}

impl BendersResult {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

fn gap(lb: f64, ub: f64) -> f64 {
    if !ub.is_finite() {
        return f64::INFINITY;
    }
    (ub - lb) / ub.abs().max(1e-12)
}

pub fn run(sys: &SystemData, milp: &CompactMilp, opts: &BendersOptions) -> Result<BendersResult> {
    let tol = &opts.tolerances;
    let sp = Subproblem::new(milp);
    let mut solver = PrimalSolver::new(&sp, *tol);
    let mut state = MasterState::default();
    let mut core = CorePoint::new(sp.num_y());
    let mut trace = Vec::new();
    let mut ub = f64::INFINITY;
    let mut best: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut lb = f64::NEG_INFINITY;
    let mut status = BendersStatus::IterationLimit;

    while state.iteration < opts.iteration_limit {
        state.iteration += 1;
        let (ybar, z_lb, nodes) = solve_master(&state, milp, opts)?;
        lb = z_lb;
        state.lb_history.push(z_lb);
        state.ybar = ybar.clone();
        let mut fallback = false;
        let kind = match solve_dsp(&sp, &mut solver, &ybar, tol)? {
            DspOutcome::Bounded { dual, value, primal } => {
                let this_ub = upper_bound(&dual, &sp, &ybar, milp);
                if this_ub < ub {
                    ub = this_ub;
                    best = Some((ybar.clone(), primal));
                }
                let point = match opts.mode {
                    BendersMode::Plain => dual,
                    BendersMode::Pareto => {
                        core.update(&ybar);
                        match solve_sdsp(&sp, &core, &ybar, value, tol)? {
                            Some(p) => p,
                            None => {
                                fallback = true;
                                dual
                            }
                        }
                    }
                };
                state.cuts.push(optimality_cut(&point, &sp, milp));
                CutKind::Optimality
            }
            DspOutcome::Unbounded { ray } => {
                state.cuts.push(feasibility_cut(&ray, &sp));
                CutKind::Feasibility
            }
        };
        let g = gap(lb, ub);
        log::debug!("iteration {}: LB {lb:.6} UB {ub:.6} gap {g:.3e}", state.iteration);
        trace.push(TraceRecord {
            iteration: state.iteration,
            lower_bound: lb,
            upper_bound: ub,
            gap: g,
            cut: kind,
            master_nodes: nodes,
            fallback,
        });
        if g <= opts.tau || ub - lb <= tol.mip_gap_abs {
            status = BendersStatus::Converged;
            break;
        }
    }

    let (incumbent, solution) = match best {
        Some((y, primal)) => {
            let mut x = vec![0.0; milp.num_vars()];
            for (k, &j) in sp.ys.iter().enumerate() {
                x[j] = y[k];
            }
            for (k, &j) in sp.cols.iter().enumerate() {
                x[j] = primal[k];
            }
            (Some(y), Some(PlanSolution::new(sys, milp, x)?))
        }
        None => (None, None),
    };
    Ok(BendersResult { status, lower_bound: lb, upper_bound: ub, trace, state, incumbent, solution })
}

/// Exact subproblem value at `y`, `None` when infeasible.
pub fn subproblem_value(solver: &mut PrimalSolver, y: &[f64]) -> Result<Option<f64>> {
    let out = solver.solve_at(y);
    match out.status {
        LpStatus::Optimal => Ok(Some(out.objective)),
        LpStatus::Infeasible => Ok(None),
        s => Err(Error::Numerical(format!("subproblem ended with {s:?}"))),
    }
}

/// Convergence trace as CSV: `iteration,lower_bound,upper_bound,gap,cut,master_nodes,fallback`.
pub fn write_trace<W: Write>(trace: &[TraceRecord], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in trace {
        wr.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    wr.flush().map_err(|e| Error::io("trace", e))
}

pub fn write_trace_file(trace: &[TraceRecord], path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_trace(trace, f)
}
