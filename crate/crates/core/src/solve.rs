//! Build-and-solve pipeline shared by the command line and the bindings.

use serde::{Deserialize, Serialize};

use crate::benders::{self, BendersOptions, BendersStatus, TraceRecord};
use crate::error::{Error, Result};
use crate::formulation::{CompactMilp, PlanSolution};
use crate::lp::{solve_milp, MilpStatus};
use crate::system::SystemData;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Benders,
    Monolithic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStatus {
    Optimal,
    Infeasible,
    /// Stopped on an iteration or node limit; bounds are still reported.
    NotConverged,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub method: Method,
    pub status: PlanStatus,
    pub lower_bound: Option<f64>,
    pub upper_bound: Option<f64>,
    pub iterations: usize,
    pub trace: Vec<TraceRecord>,
    pub solution: Option<PlanSolution>,
    /// Why no plan exists, when infeasible.
    pub diagnosis: Option<String>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

pub fn solve(sys: &SystemData, milp: &CompactMilp, method: Method, opts: &BendersOptions) -> Result<SolveOutcome> {
    let mut out = SolveOutcome {
        method,
        status: PlanStatus::Optimal,
        lower_bound: None,
        upper_bound: None,
        iterations: 0,
        trace: Vec::new(),
        solution: None,
        diagnosis: None,
    };
    match method {
        Method::Monolithic => {
            let (lp, bins) = milp.to_linear_program();
            let r = solve_milp(&lp, &bins, &opts.tolerances, opts.master_node_limit);
            out.iterations = r.nodes;
            out.lower_bound = finite(r.bound);
            match r.status {
                MilpStatus::Optimal | MilpStatus::NodeLimit if r.objective.is_finite() => {
                    out.upper_bound = Some(r.objective);
                    out.solution = Some(PlanSolution::new(sys, milp, r.x)?);
                    if r.status == MilpStatus::NodeLimit {
                        out.status = PlanStatus::NotConverged;
                    }
                }
                MilpStatus::NodeLimit => out.status = PlanStatus::NotConverged,
                MilpStatus::Infeasible => out.status = PlanStatus::Infeasible,
                _ => return Err(Error::Numerical("an LP relaxation failed during branch and bound".into())),
            }
        }
        Method::Benders => match benders::run(sys, milp, opts) {
            Ok(r) => {
                out.iterations = r.iterations();
                out.lower_bound = finite(r.lower_bound);
                out.upper_bound = finite(r.upper_bound);
                out.trace = r.trace;
                out.solution = r.solution;
                if r.status == BendersStatus::IterationLimit {
                    out.status = PlanStatus::NotConverged;
                }
            }
            Err(Error::Infeasible(_)) => out.status = PlanStatus::Infeasible,
            Err(e) => return Err(e),
        },
    }
    if out.status == PlanStatus::Infeasible {
        out.diagnosis = Some(diagnose(sys));
    }
    Ok(out)
}

/// Names the requirement that rules out every plan, falling back to a generic message.
pub fn diagnose(sys: &SystemData) -> String {
    let peak = sys.total_peak();
    let mut firm: f64 =
        sys.thermal_types.iter().map(|u| u.capacity * (u.existing_count + u.candidate_slots) as f64).sum();
    firm += sys.renewable_sites.iter().map(|w| w.cap_max).sum::<f64>();
    for s in 1..=sys.economics.stage_count {
        let need = (1.0 + sys.policy.reserve_margin) * sys.economics.load_factor(s) * peak;
        if firm < need {
            return format!(
                "capacity adequacy cannot be met at stage {s}: {firm:.3} MW installable, {need:.3} MW required"
            );
        }
    }
    "no investment plan satisfies all operating constraints".into()
}
