//! Stored solutions, plan reports and plot-ready series.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulation::build::Ctx;
use crate::formulation::{
    evaluate_objective, BuildOptions, CompactMilp, ObjectiveBreakdown, StageCosts, VarKind, View,
};
use crate::solve::{Method, PlanStatus, SolveOutcome};
use crate::system::{instance_digest, RenewableKind, SystemData};

pub const SCHEMA_VERSION: u32 = 1;

/// Below this a cumulative build difference counts as nothing new.
const BUILD_EPS: f64 = 1e-6;

/// A solved plan as written to disk: variable values by name plus what is needed to rebuild the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDocument {
    pub schema_version: u32,
    pub instance_digest: String,
    pub instance_name: String,
    pub options: BuildOptions,
    pub method: Method,
    pub status: PlanStatus,
    pub lower_bound: Option<f64>,
    pub upper_bound: Option<f64>,
    pub values: BTreeMap<String, f64>,
}

impl SolutionDocument {
    pub fn new(sys: &SystemData, milp: &CompactMilp, outcome: &SolveOutcome) -> Self {
        let values = match &outcome.solution {
            Some(sol) => milp.vars.iter().zip(&sol.values).map(|(v, &x)| (v.name(), x)).collect(),
            None => BTreeMap::new(),
        };
        Self {
            schema_version: SCHEMA_VERSION,
            instance_digest: instance_digest(sys),
            instance_name: sys.name.clone(),
            options: milp.options.clone(),
            method: outcome.method,
            status: outcome.status,
            lower_bound: outcome.lower_bound,
            upper_bound: outcome.upper_bound,
            values,
        }
    }

    /// Refuses documents written for another instance or schema.
    pub fn check_instance(&self, sys: &SystemData) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Stale(format!(
                "solution schema {} but this build reads {SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        let d = instance_digest(sys);
        if d != self.instance_digest {
            return Err(Error::Stale(format!(
                "solution was computed for instance {} but the given instance hashes to {d}",
                self.instance_digest
            )));
        }
        Ok(())
    }

    /// Values in model column order; fails on any missing name.
    pub fn values_for(&self, milp: &CompactMilp) -> Result<Vec<f64>> {
        milp.vars
            .iter()
            .map(|v| {
                let n = v.name();
                self.values.get(&n).copied().ok_or(Error::MissingValue(n))
            })
            .collect()
    }

    pub fn has_plan(&self) -> bool {
        !self.values.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineBuild {
    pub line: u32,
    pub from_bus: u32,
    pub to_bus: u32,
    pub circuits: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitBuild {
    pub bus: u32,
    pub tech: String,
    pub units: u32,
    pub mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewableBuild {
    pub bus: u32,
    pub kind: RenewableKind,
    pub mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageBuild {
    pub bus: u32,
    pub type_id: u32,
    pub mw: f64,
    pub mwh: f64,
}

/// Fractions of injected energy; they sum to one whenever anything is injected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyShares {
    pub thermal: f64,
    pub wind: f64,
    pub pv: f64,
    pub discharge: f64,
}

impl EnergyShares {
    pub fn from_costs(st: &StageCosts) -> Self {
        let total = st.thermal_mwh + st.wind_mwh + st.pv_mwh + st.discharge_mwh;
        if total <= 0.0 {
            return Self::default();
        }
        Self {
            thermal: st.thermal_mwh / total,
            wind: st.wind_mwh / total,
            pv: st.pv_mwh / total,
            discharge: st.discharge_mwh / total,
        }
    }

    pub fn sum(&self) -> f64 {
        self.thermal + self.wind + self.pv + self.discharge
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: u32,
    pub new_lines: Vec<LineBuild>,
    pub new_units: Vec<UnitBuild>,
    pub new_renewables: Vec<RenewableBuild>,
    pub new_storage: Vec<StorageBuild>,
    pub costs: StageCosts,
    pub shares: EnergyShares,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostSummary {
    pub line_invest: f64,
    pub thermal_invest: f64,
    pub renewable_invest: f64,
    pub storage_invest: f64,
    pub tc_inv: f64,
    pub tc_o: f64,
    pub tc_m: f64,
    pub tc_e: f64,
    pub tc_p: f64,
}

/// Cumulative series through each stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub cost: Vec<f64>,
    pub served_mwh: Vec<f64>,
    pub emission_tons: Vec<f64>,
    /// $/MWh served.
    pub lcoe: Vec<f64>,
    /// ton/MWh served.
    pub emission_factor: Vec<f64>,
}

impl Trajectory {
    pub fn from_stages(stages: &[StageCosts]) -> Self {
        let mut t = Self::default();
        let (mut c, mut e, mut m) = (0.0, 0.0, 0.0);
        for st in stages {
            c += st.total();
            e += st.served_mwh;
            m += st.emission_tons;
            t.cost.push(c);
            t.served_mwh.push(e);
            t.emission_tons.push(m);
            t.lcoe.push(if e > 0.0 { c / e } else { 0.0 });
            t.emission_factor.push(if e > 0.0 { m / e } else { 0.0 });
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub schema_version: u32,
    pub instance_digest: String,
    pub instance_name: String,
    pub method: Method,
    pub status: PlanStatus,
    pub lower_bound: Option<f64>,
    pub upper_bound: Option<f64>,
    pub stages: Vec<StageReport>,
    pub costs: CostSummary,
    pub trajectory: Trajectory,
}

fn whole(v: f64) -> u32 {
    v.round().max(0.0) as u32
}

impl PlanReport {
    pub fn new(sys: &SystemData, milp: &CompactMilp, doc: &SolutionDocument) -> Result<Self> {
        doc.check_instance(sys)?;
        if !doc.has_plan() {
            return Err(Error::MissingValue(format!("solution has no plan (status {:?})", doc.status)));
        }
        let x = doc.values_for(milp)?;
        let b = evaluate_objective(sys, milp, &x)?;
        let v = View { milp, x: &x };
        let stages = (1..=milp.stage_count)
            .map(|s| StageReport {
                stage: s,
                new_lines: line_builds(sys, &v, s),
                new_units: unit_builds(sys, &v, s),
                new_renewables: renewable_builds(sys, &v, s),
                new_storage: storage_builds(sys, &v, s),
                shares: EnergyShares::from_costs(&b.stages[s as usize - 1]),
                costs: b.stages[s as usize - 1].clone(),
            })
            .collect();
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            instance_digest: doc.instance_digest.clone(),
            instance_name: doc.instance_name.clone(),
            method: doc.method,
            status: doc.status,
            lower_bound: doc.lower_bound,
            upper_bound: doc.upper_bound,
            stages,
            costs: summary(&b),
            trajectory: Trajectory::from_stages(&b.stages),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn shares_csv(&self) -> String {
        let mut s = String::from("stage,thermal,wind,pv,bes_discharge\n");
        for st in &self.stages {
            let e = &st.shares;
            let _ = writeln!(s, "{},{},{},{},{}", st.stage, e.thermal, e.wind, e.pv, e.discharge);
        }
        s
    }

    pub fn trajectory_csv(&self) -> String {
        let t = &self.trajectory;
        let mut s =
            String::from("stage,cumulative_cost,cumulative_served_mwh,lcoe,cumulative_emission_tons,emission_factor\n");
        for (k, st) in self.stages.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                st.stage, t.cost[k], t.served_mwh[k], t.lcoe[k], t.emission_tons[k], t.emission_factor[k]
            );
        }
        s
    }

    /// Plain-text plan and cost tables.
    pub fn render_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "instance {} ({})", self.instance_name, self.instance_digest);
        let _ = writeln!(s, "method {:?}, status {:?}", self.method, self.status);
        if let (Some(lb), Some(ub)) = (self.lower_bound, self.upper_bound) {
            let _ = writeln!(s, "bounds [{lb:.6}, {ub:.6}]");
        }
        let _ = writeln!(
            s,
            "\n{:<6} {:<28} {:<28} {:<28} {:<28}",
            "stage", "new line (from-to)", "new thermal (bus-MW)", "new RES (bus-MW)", "new BES (MW-MWh)"
        );
        for st in &self.stages {
            let lines: Vec<String> =
                st.new_lines.iter().map(|l| format!("{}-{} x{}", l.from_bus, l.to_bus, l.circuits)).collect();
            let units: Vec<String> = st.new_units.iter().map(|u| format!("{} {}-{:.1}", u.tech, u.bus, u.mw)).collect();
            let res: Vec<String> = st
                .new_renewables
                .iter()
                .map(|r| format!("{}{}-{:.1}", if r.kind == RenewableKind::Wind { "W" } else { "PV" }, r.bus, r.mw))
                .collect();
            let bes: Vec<String> =
                st.new_storage.iter().map(|b| format!("{}:{:.1}-{:.1}", b.bus, b.mw, b.mwh)).collect();
            let cell = |v: Vec<String>| if v.is_empty() { "-".to_string() } else { v.join(", ") };
            let _ = writeln!(
                s,
                "{:<6} {:<28} {:<28} {:<28} {:<28}",
                st.stage,
                cell(lines),
                cell(units),
                cell(res),
                cell(bes)
            );
        }
        let c = &self.costs;
        let _ = writeln!(s, "\ncost ($)");
        for (k, v) in [
            ("line investment", c.line_invest),
            ("thermal investment", c.thermal_invest),
            ("renewable investment", c.renewable_invest),
            ("storage investment", c.storage_invest),
            ("TC_Inv", c.tc_inv),
            ("TC_O", c.tc_o),
            ("TC_M", c.tc_m),
            ("TC_E", c.tc_e),
            ("TC_P", c.tc_p),
        ] {
            let _ = writeln!(s, "  {k:<22} {v:>20.2}");
        }
        let _ = writeln!(
            s,
            "\n{:<6} {:>16} {:>16} {:>14} {:>12}",
            "stage", "served MWh", "emission t", "LCOE $/MWh", "t/MWh"
        );
        for (k, st) in self.stages.iter().enumerate() {
            let _ = writeln!(
                s,
                "{:<6} {:>16.1} {:>16.1} {:>14.4} {:>12.6}",
                st.stage,
                st.costs.served_mwh,
                st.costs.emission_tons,
                self.trajectory.lcoe[k],
                self.trajectory.emission_factor[k]
            );
        }
        s
    }
}

fn summary(b: &ObjectiveBreakdown) -> CostSummary {
    let mut c = CostSummary::default();
    for st in &b.stages {
        c.line_invest += st.line_invest;
        c.thermal_invest += st.thermal_invest;
        c.renewable_invest += st.renewable_invest;
        c.storage_invest += st.storage_invest;
    }
    c.tc_inv = b.tc_inv;
    c.tc_o = b.tc_o;
    c.tc_m = b.tc_m;
    c.tc_e = b.tc_e;
    c.tc_p = b.z;
    c
}

fn line_builds(sys: &SystemData, v: &View, s: u32) -> Vec<LineBuild> {
    let count = |s: u32, l: u32, slots: u32| -> u32 {
        if s == 0 {
            return 0;
        }
        whole((1..=slots).map(|c| v.get(VarKind::Line, &[s, l, c])).sum())
    };
    let mut out = Vec::new();
    for (i, line) in sys.lines.iter().enumerate().filter(|(_, l)| !l.is_existing) {
        let l = i as u32 + 1;
        let n = count(s, l, line.corridor_slots).saturating_sub(count(s - 1, l, line.corridor_slots));
        if n > 0 {
            out.push(LineBuild { line: line.id, from_bus: line.from_bus, to_bus: line.to_bus, circuits: n });
        }
    }
    out
}

fn unit_builds(sys: &SystemData, v: &View, s: u32) -> Vec<UnitBuild> {
    let mut out = Vec::new();
    for (g, u) in sys.thermal_types.iter().enumerate().filter(|(_, u)| u.is_candidate()) {
        let at = |s: u32| if s == 0 { 0 } else { whole(v.get(VarKind::NewUnits, &[s, g as u32 + 1])) };
        let n = at(s).saturating_sub(at(s - 1));
        if n > 0 {
            out.push(UnitBuild { bus: u.bus, tech: u.tech.clone(), units: n, mw: n as f64 * u.capacity });
        }
    }
    out
}

fn renewable_builds(sys: &SystemData, v: &View, s: u32) -> Vec<RenewableBuild> {
    let mut out = Vec::new();
    for (w, site) in sys.renewable_sites.iter().enumerate() {
        let kind = match site.kind {
            RenewableKind::Wind => VarKind::Wind,
            RenewableKind::Pv => VarKind::Pv,
        };
        let at = |s: u32| if s == 0 { 0.0 } else { v.get(kind, &[s, w as u32 + 1]) };
        let mw = at(s) - at(s - 1);
        if mw > BUILD_EPS {
            out.push(RenewableBuild { bus: site.bus, kind: site.kind, mw });
        }
    }
    out
}

fn storage_builds(sys: &SystemData, v: &View, s: u32) -> Vec<StorageBuild> {
    let mut out = Vec::new();
    for (t, sto) in sys.storage_types.iter().enumerate() {
        let at = |s: u32| if s == 0 { 0 } else { whole(v.get(VarKind::Storage, &[s, t as u32 + 1])) };
        if at(s) > at(s - 1) {
            out.push(StorageBuild { bus: sto.bus, type_id: sto.type_id, mw: sto.power_cap, mwh: sto.energy_cap });
        }
    }
    out
}

/// System totals in MW for one representative hour.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DispatchRow {
    pub hour: u32,
    pub weight: f64,
    pub demand: f64,
    pub thermal: f64,
    pub wind: f64,
    pub pv: f64,
    pub discharge: f64,
    pub charge: f64,
    pub shed: f64,
    pub curtailed: f64,
}

/// Hour-by-hour supply stack of stage `s`.
pub fn dispatch_stack(
    sys: &SystemData,
    milp: &CompactMilp,
    doc: &SolutionDocument,
    s: u32,
) -> Result<Vec<DispatchRow>> {
    doc.check_instance(sys)?;
    if s == 0 || s > milp.stage_count {
        return Err(Error::Domain(format!("stage {s} outside 1..={}", milp.stage_count)));
    }
    let x = doc.values_for(milp)?;
    let v = View { milp, x: &x };
    let c = Ctx::new(sys)?;
    let mut rows = Vec::new();
    for h in c.hour_iter() {
        let mut r = DispatchRow { hour: h, weight: c.rho[h as usize - 1], ..Default::default() };
        for g in 0..sys.thermal_types.len() {
            r.thermal += v.get(VarKind::Gen, &[s, g as u32 + 1, h]);
        }
        for (w, site) in sys.renewable_sites.iter().enumerate() {
            let sub = [s, w as u32 + 1];
            match site.kind {
                RenewableKind::Wind => {
                    let pc = v.get(VarKind::Curtail, &[s, w as u32 + 1, h]);
                    r.wind += c.wf[h as usize - 1] * v.get(VarKind::Wind, &sub) - pc;
                    r.curtailed += pc;
                }
                RenewableKind::Pv => r.pv += c.pvf[h as usize - 1] * v.get(VarKind::Pv, &sub),
            }
        }
        for t in 0..sys.storage_types.len() {
            r.discharge += v.get(VarKind::Discharge, &[s, t as u32 + 1, h]);
            r.charge += v.get(VarKind::Charge, &[s, t as u32 + 1, h]);
        }
        for j in 0..sys.buses.len() {
            r.demand += c.demand(s, j, h);
            r.shed += v.get(VarKind::Shed, &[s, j as u32 + 1, h]);
        }
        rows.push(r);
    }
    Ok(rows)
}

pub fn dispatch_csv(rows: &[DispatchRow]) -> String {
    let mut s =
        String::from("hour,weight,demand_mw,thermal_mw,wind_mw,pv_mw,discharge_mw,charge_mw,shed_mw,curtailed_mw\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.hour, r.weight, r.demand, r.thermal, r.wind, r.pv, r.discharge, r.charge, r.shed, r.curtailed
        );
    }
    s
}
