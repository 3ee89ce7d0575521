mod common;

use tgsep_core::benders::BendersOptions;
use tgsep_core::corpus;
use tgsep_core::formulation::{build_milp, BuildOptions, CompactMilp, VarKind};
use tgsep_core::report::{dispatch_stack, PlanReport, SolutionDocument};
use tgsep_core::solve::{solve, Method, PlanStatus};
use tgsep_core::system::{RenewableKind, SystemData};

fn solved(sys: &SystemData, opts: &BuildOptions, method: Method) -> (CompactMilp, SolutionDocument) {
    let milp = build_milp(sys, opts).unwrap();
    let out = solve(sys, &milp, method, &BendersOptions::default()).unwrap();
    assert_eq!(out.status, PlanStatus::Optimal);
    let doc = SolutionDocument::new(sys, &milp, &out);
    (milp, doc)
}

/// Per-stage physical totals summed straight from the variable list.
#[derive(Debug, Default, Clone)]
struct Totals {
    served: f64,
    shed: f64,
    tons: f64,
    thermal: f64,
    wind: f64,
    pv: f64,
    discharge: f64,
}

fn aggregate(sys: &SystemData, milp: &CompactMilp, x: &[f64]) -> Vec<Totals> {
    let rep = sys.timeseries.representatives.as_ref().unwrap();
    let scale = |h: u32| sys.economics.years_per_stage as f64 * 8760.0 * rep.hours[h as usize - 1].weight;
    let mut t = vec![Totals::default(); milp.stage_count as usize];
    let mut cap = std::collections::HashMap::new();
    for (v, &val) in milp.vars.iter().zip(x) {
        if matches!(v.kind, VarKind::Wind | VarKind::Pv) {
            cap.insert((v.subscripts[0], v.subscripts[1]), val);
        }
    }
    for s in 1..=milp.stage_count {
        let lm = sys.economics.load_factor(s);
        for (h, rh) in rep.hours.iter().enumerate() {
            let d: f64 = sys.buses.iter().map(|b| b.peak_load).sum::<f64>() * lm * rh.load_factor;
            t[s as usize - 1].served += scale(h as u32 + 1) * d;
            for (w, site) in sys.renewable_sites.iter().enumerate() {
                let c = cap.get(&(s, w as u32 + 1)).copied().unwrap_or(0.0);
                let e = scale(h as u32 + 1) * c;
                match site.kind {
                    RenewableKind::Wind => t[s as usize - 1].wind += e * rh.wind_factor,
                    RenewableKind::Pv => t[s as usize - 1].pv += e * rh.pv_factor,
                }
            }
        }
    }
    for (v, &val) in milp.vars.iter().zip(x) {
        let sub = &v.subscripts;
        let st = &mut t[sub[0] as usize - 1];
        match v.kind {
            VarKind::Gen => {
                let e = scale(sub[2]) * val;
                st.thermal += e;
                st.tons += e * sys.thermal_types[sub[1] as usize - 1].emission_rate;
            }
            VarKind::Shed => {
                st.shed += scale(sub[2]) * val;
                st.served -= scale(sub[2]) * val;
            }
            VarKind::Curtail => st.wind -= scale(sub[2]) * val,
            VarKind::Discharge => st.discharge += scale(sub[2]) * val,
            _ => {}
        }
    }
    t
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn report_matches_independent_aggregation() {
    for seed in [0, 3, 6] {
        let sys = corpus::generate(seed);
        let (milp, doc) = solved(&sys, &BuildOptions::default(), Method::Monolithic);
        let r = PlanReport::new(&sys, &milp, &doc).unwrap();
        let x = doc.values_for(&milp).unwrap();
        let agg = aggregate(&sys, &milp, &x);
        let (mut tons, mut served) = (0.0, 0.0);
        for (k, st) in r.stages.iter().enumerate() {
            let a = &agg[k];
            tons += a.tons;
            served += a.served;
            assert!(close(st.costs.served_mwh, a.served, 1e-9), "seed {seed} stage {k}");
            assert!(close(st.costs.shed_mwh, a.shed, 1e-9));
            assert!(close(r.trajectory.emission_factor[k], tons / served, 1e-9), "seed {seed} stage {k}");
            let inj = a.thermal + a.wind + a.pv + a.discharge;
            assert!(close(st.shares.thermal, a.thermal / inj, 1e-9));
            assert!(close(st.shares.wind, a.wind / inj, 1e-9));
            assert!(close(st.shares.pv, a.pv / inj, 1e-9));
            assert!(close(st.shares.discharge, a.discharge / inj, 1e-9));
            assert!((st.shares.sum() - 1.0).abs() <= 1e-9);
        }
        let c = &r.costs;
        assert!(close(c.tc_p, c.tc_inv + c.tc_o + c.tc_m + c.tc_e, 1e-12));
        assert!(close(c.tc_inv, c.line_invest + c.thermal_invest + c.renewable_invest + c.storage_invest, 1e-12));
        assert!(close(c.tc_p, doc.upper_bound.unwrap(), 1e-9));
        let s = sys.economics.stage_count as usize;
        assert_eq!((r.trajectory.lcoe.len(), r.trajectory.emission_factor.len(), r.stages.len()), (s, s, s));
        let cum: f64 = r.stages.iter().map(|st| st.costs.total()).sum();
        assert!(close(r.trajectory.lcoe[s - 1], cum / served, 1e-9));
    }
}

#[test]
fn all_thermal_plan_has_no_renewable_share() {
    let sys = common::one_bus(100.0, 0.0);
    let (milp, doc) = solved(&sys, &BuildOptions::default(), Method::Monolithic);
    let r = PlanReport::new(&sys, &milp, &doc).unwrap();
    for st in &r.stages {
        assert_eq!((st.shares.wind, st.shares.pv, st.shares.discharge), (0.0, 0.0, 0.0));
        assert_eq!(st.shares.thermal, 1.0);
    }
}

#[test]
fn builds_are_stage_differences() {
    let sys = common::short_of_capacity();
    let (milp, doc) = solved(&sys, &BuildOptions::default(), Method::Benders);
    let r = PlanReport::new(&sys, &milp, &doc).unwrap();
    let u = &r.stages[0].new_units;
    assert_eq!(u.len(), 1);
    assert_eq!((u[0].tech.as_str(), u[0].units, u[0].mw), ("coal", 3, 75.0));

    let sys = common::one_line_toy();
    let (milp, doc) = solved(&sys, &BuildOptions::default(), Method::Monolithic);
    let r = PlanReport::new(&sys, &milp, &doc).unwrap();
    let l = &r.stages[0].new_lines;
    assert_eq!((l.len(), l[0].circuits), (1, 1));
    assert_eq!((l[0].from_bus, l[0].to_bus), (sys.lines[0].from_bus, sys.lines[0].to_bus));
}

#[test]
fn dispatch_stack_balances_served_energy() {
    let sys = corpus::generate(3);
    let (milp, doc) = solved(&sys, &BuildOptions::default(), Method::Monolithic);
    let r = PlanReport::new(&sys, &milp, &doc).unwrap();
    let yrs = sys.economics.years_per_stage as f64;
    for st in &r.stages {
        let rows = dispatch_stack(&sys, &milp, &doc, st.stage).unwrap();
        let mut served = 0.0;
        for row in &rows {
            let supply = row.thermal + row.wind + row.pv + row.discharge - row.charge;
            assert!((supply - (row.demand - row.shed)).abs() <= 1e-6 * row.demand.max(1.0), "{row:?}");
            served += yrs * 8760.0 * row.weight * (row.demand - row.shed);
        }
        assert!(close(served, st.costs.served_mwh, 1e-9));
    }
    assert!(dispatch_stack(&sys, &milp, &doc, 0).is_err());
}

#[test]
fn mismatched_instance_is_refused() {
    let sys = common::one_bus(100.0, 0.0);
    let (milp, doc) = solved(&sys, &BuildOptions::default(), Method::Monolithic);
    let mut other = sys.clone();
    other.buses[0].peak_load = 101.0;
    let err = PlanReport::new(&other, &milp, &doc).unwrap_err();
    assert!(err.to_string().contains("stale"), "{err}");
    let mut old = doc.clone();
    old.schema_version = 0;
    assert!(PlanReport::new(&sys, &milp, &old).is_err());
}

#[test]
fn documents_round_trip_and_repeat_byte_for_byte() {
    let sys = corpus::generate(1);
    let (milp, doc) = solved(&sys, &BuildOptions::default(), Method::Benders);
    let (_, again) = solved(&sys, &BuildOptions::default(), Method::Benders);
    assert_eq!(doc.to_json().unwrap(), again.to_json().unwrap());
    let back = SolutionDocument::from_json(&doc.to_json().unwrap()).unwrap();
    assert_eq!(back, doc);
    let a = PlanReport::new(&sys, &milp, &doc).unwrap();
    let b = PlanReport::new(&sys, &milp, &back).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    assert_eq!(a.shares_csv(), b.shares_csv());
    assert_eq!(a.trajectory_csv(), b.trajectory_csv());
    assert_eq!(PlanReport::from_json(&a.to_json().unwrap()).unwrap(), a);
    assert!(a.render_table().contains("TC_P"));
}

#[test]
fn infeasible_instance_names_adequacy() {
    let mut sys = common::short_of_capacity();
    sys.thermal_types[1].candidate_slots = 1;
    let milp = build_milp(&sys, &BuildOptions::default()).unwrap();
    for m in [Method::Monolithic, Method::Benders] {
        let out = solve(&sys, &milp, m, &BendersOptions::default()).unwrap();
        assert_eq!(out.status, PlanStatus::Infeasible);
        assert!(out.diagnosis.as_ref().unwrap().contains("adequacy"));
        let doc = SolutionDocument::new(&sys, &milp, &out);
        assert!(!doc.has_plan());
        assert!(PlanReport::new(&sys, &milp, &doc).is_err());
    }
}
