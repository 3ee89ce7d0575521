mod common;

use common::one_bus;
use tgsep_core::corpus;
use tgsep_core::formulation::*;
use tgsep_core::lp::{read_mps, solve_milp, MilpStatus, Tolerances};
use tgsep_core::system::*;

fn rows_of(m: &CompactMilp, f: Family) -> Vec<&BlockRow> {
    m.rows.iter().filter(|r| r.family == f).collect()
}

struct Solved {
    milp: CompactMilp,
    x: Vec<f64>,
    z: f64,
}

fn solve(sys: &SystemData, opts: &BuildOptions) -> Solved {
    let milp = build_milp(sys, opts).unwrap();
    let (lp, bin) = milp.to_linear_program();
    let out = solve_milp(&lp, &bin, &Tolerances::default(), 200_000);
    assert_eq!(out.status, MilpStatus::Optimal, "{}", sys.name);
    Solved { milp, x: out.x, z: out.objective }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

#[test]
fn segment_bound_is_share_of_capacity() {
    let m = build_milp(&one_bus(100.0, 0.1), &BuildOptions::default()).unwrap();
    let rows = rows_of(&m, Family::SegmentCap);
    assert_eq!(rows.len(), 4);
    for r in rows {
        assert_eq!(r.coeffs.len(), 1);
        assert_eq!(r.coeffs[0].1, -1.0);
        assert!((-r.rhs - 40.0).abs() < 1e-12);
    }
}

#[test]
fn adequacy_requirement() {
    let m = build_milp(&one_bus(100.0, 0.1), &BuildOptions::default()).unwrap();
    let rows = rows_of(&m, Family::Adequacy);
    assert_eq!(rows.len(), 1);
    // Existing capacity is moved to the right-hand side.
    assert!((rows[0].rhs + 160.0 - 126.5).abs() < 1e-9);
}

#[test]
fn reserve_floor_from_renewables_and_load() {
    let mut sys = one_bus(1000.0, 0.0);
    sys.renewable_sites.push(RenewableSite {
        bus: 1,
        kind: RenewableKind::Wind,
        cap_max: 400.0,
        invest_cost: 1.0,
        maint_cost: 0.0,
    });
    let m = build_milp(&sys, &BuildOptions::default()).unwrap();
    let pw = m.index_of(VarKind::Wind, &[1, 1]).unwrap();
    // wind factor 0.5, so 200 MW installed is 100 MW expected.
    let pw_val = 200.0;
    for f in [Family::ReserveUpFloor, Family::ReserveDnFloor] {
        let r = rows_of(&m, f)[0];
        let other: f64 = r.coeffs.iter().filter(|(j, _)| *j == pw).map(|(_, a)| a * pw_val).sum();
        assert!((r.rhs - other - 35.0).abs() < 1e-9, "{f}");
    }
}

#[test]
fn storage_toggle_removes_everything() {
    let sys = corpus::generate(3);
    assert!(!sys.storage_types.is_empty());
    let on = build_milp(&sys, &BuildOptions::default()).unwrap();
    let off = build_milp(&sys, &BuildOptions { with_bes: false, ..BuildOptions::default() }).unwrap();
    let kinds = [VarKind::Storage, VarKind::Mode, VarKind::Discharge, VarKind::Charge, VarKind::Energy];
    assert!(kinds.iter().all(|&k| on.count_kind(k) > 0));
    assert!(kinds.iter().all(|&k| off.count_kind(k) == 0));
    let fams = [
        Family::ChargeCap,
        Family::DischargeCap,
        Family::ChargeMode,
        Family::DischargeMode,
        Family::StorageBalance,
        Family::EnergyCap,
    ];
    assert!(fams.iter().all(|&f| !rows_of(&on, f).is_empty()));
    assert!(off.rows.iter().all(|r| !fams.contains(&r.family) && r.family != Family::StoragePersist));
}

#[test]
fn zero_everything_costs_nothing() {
    let mut sys = one_bus(0.0, 0.1);
    sys.thermal_types[0].existing_count = 0;
    sys.thermal_types[0].candidate_slots = 1;
    let m = build_milp(&sys, &BuildOptions::default()).unwrap();
    let b = evaluate_objective(&sys, &m, &vec![0.0; m.num_vars()]).unwrap();
    assert_eq!(b.z, 0.0);
}

#[test]
fn existing_fleet_maintenance() {
    let sys = one_bus(100.0, 0.1);
    let m = build_milp(&sys, &BuildOptions::default()).unwrap();
    let b = evaluate_objective(&sys, &m, &vec![0.0; m.num_vars()]).unwrap();
    let expect = 2.0 / 1.05f64.powi(2) * 1600.0;
    assert!((expect - 2902.494331).abs() < 1e-6);
    assert!((b.tc_m - expect).abs() < 1e-6);
    assert!((m.objective_offset - expect).abs() < 1e-6);
}

#[test]
fn fuel_cost_of_one_segment() {
    let sys = one_bus(100.0, 0.1);
    let m = build_milp(&sys, &BuildOptions::default()).unwrap();
    let mut x = vec![0.0; m.num_vars()];
    x[m.index_of(VarKind::Seg, &[1, 1, 1, 1]).unwrap()] = 40.0;
    let b = evaluate_objective(&sys, &m, &x).unwrap();
    let expect = 2.0 / 1.05f64.powi(2) * 8760.0 * 800.0;
    assert!((expect - 12_712_925.17).abs() < 0.01);
    assert!((b.tc_o - expect).abs() < 1e-6);
    assert!((m.objective(&x) - b.z).abs() < 1e-6);
}

#[test]
fn big_m_example() {
    let mut line = corpus::three_bus().lines.into_iter().find(|l| !l.is_existing).unwrap();
    line.susceptance = 2.0;
    assert!((big_m_value(&line, 100.0, 0.6) - 120.0).abs() < 1e-12);
}

#[test]
fn built_circuit_makes_flow_exact() {
    let m = build_milp(&corpus::three_bus(), &BuildOptions::default()).unwrap();
    let rows = rows_of(&m, Family::CandidateFlowDef);
    assert!(!rows.is_empty());
    for r in rows {
        let y = r.coeffs.iter().find(|(j, _)| m.vars[*j].kind == VarKind::Line).unwrap();
        // Y = 1 cancels the big-M term exactly, leaving a homogeneous flow inequality.
        assert_eq!(y.1, r.rhs);
    }
}

#[test]
fn doubling_angle_spread_keeps_optimum() {
    let sys = corpus::three_bus();
    let a = solve(&sys, &BuildOptions::default());
    let b = solve(&sys, &BuildOptions { max_angle: 2.0 * DEFAULT_MAX_ANGLE, ..BuildOptions::default() });
    assert!(rel(a.z, b.z) <= 1e-6, "{} vs {}", a.z, b.z);
}

#[test]
fn optimal_solution_passes_checker() {
    for seed in [3, 4, 7] {
        let sys = corpus::generate(seed);
        let s = solve(&sys, &BuildOptions::default());
        let v = check_solution(&sys, &s.milp, &s.x, 1e-6);
        assert!(v.is_empty(), "seed {seed}: {:?}", v);
    }
}

#[test]
fn checker_flags_storage_faults() {
    let sys = corpus::generate(3);
    let s = solve(&sys, &BuildOptions::default());
    let h = s.milp.hour_count as u32;

    let mut x = s.x.clone();
    x[s.milp.index_of(VarKind::Discharge, &[1, 1, 2]).unwrap()] += 1.0;
    let v = check_solution(&sys, &s.milp, &x, 1e-6);
    assert!(v.iter().any(|c| c.family == Family::StorageBalance && c.subscripts == [1, 1, 2]), "{v:?}");

    let mut x = s.x.clone();
    x[s.milp.index_of(VarKind::Energy, &[1, 1, h]).unwrap()] += 1.0;
    let v = check_solution(&sys, &s.milp, &x, 1e-6);
    assert!(v.iter().any(|c| c.family == Family::StorageBalance && c.subscripts == [1, 1, 1]), "{v:?}");
    assert!(v.iter().any(|c| c.family == Family::StorageBalance && c.subscripts == [1, 1, h]), "{v:?}");
}

#[test]
fn checker_flags_balance_and_binary_domain() {
    let sys = corpus::three_bus();
    let s = solve(&sys, &BuildOptions::default());
    let mut x = s.x.clone();
    x[s.milp.index_of(VarKind::Gen, &[1, 1, 1]).unwrap()] += 5.0;
    let v = check_solution(&sys, &s.milp, &x, 1e-6);
    assert!(v.iter().any(|c| c.family == Family::Balance && c.subscripts == [1, 1, 1]), "{v:?}");

    let mut x = s.x.clone();
    x[s.milp.binaries()[0]] = 0.5;
    let v = check_solution(&sys, &s.milp, &x, 1e-6);
    assert!(v.iter().any(|c| c.family == Family::Domain));
}

/// Solves every corpus instance once and runs the per-solution properties.
#[test]
fn corpus_solution_properties() {
    for sys in corpus::corpus() {
        let s = solve(&sys, &BuildOptions::default());
        let m = &s.milp;
        let b = evaluate_objective(&sys, m, &s.x).unwrap();
        assert!(rel(b.z, s.z) <= 1e-6, "{}: objective {} vs {}", sys.name, b.z, s.z);
        assert!((b.tc_inv + b.tc_o + b.tc_m + b.tc_e - b.z).abs() <= 1e-6 * b.z.abs());

        let v = |k: VarKind, subs: &[u32]| m.index_of(k, subs).map_or(0.0, |j| s.x[j]);
        let stages = sys.economics.stage_count;
        let hours = m.hour_count as u32;
        for st in 2..=stages {
            for (l, line) in sys.lines.iter().enumerate().filter(|(_, l)| !l.is_existing) {
                for c in 1..=line.corridor_slots {
                    let sub = |s| [s, l as u32 + 1, c];
                    assert!(v(VarKind::Line, &sub(st)) >= v(VarKind::Line, &sub(st - 1)) - 1e-9);
                }
            }
            for (g, u) in sys.thermal_types.iter().enumerate() {
                for d in 1..=u.candidate_slots {
                    assert!(
                        v(VarKind::Unit, &[st, g as u32 + 1, d]) >= v(VarKind::Unit, &[st - 1, g as u32 + 1, d]) - 1e-9
                    );
                }
            }
            for t in 1..=sys.storage_types.len() as u32 {
                assert!(v(VarKind::Storage, &[st, t]) >= v(VarKind::Storage, &[st - 1, t]) - 1e-9);
            }
            for (w, site) in sys.renewable_sites.iter().enumerate() {
                let k = if site.kind == RenewableKind::Wind { VarKind::Wind } else { VarKind::Pv };
                assert!(v(k, &[st, w as u32 + 1]) >= v(k, &[st - 1, w as u32 + 1]) - 1e-6);
            }
        }

        for (t, store) in sys.storage_types.iter().enumerate() {
            for st in 1..=stages {
                for h in 1..=hours {
                    let sub = [st, t as u32 + 1, h];
                    let u = v(VarKind::Mode, &sub);
                    let pc = v(VarKind::Charge, &sub);
                    let pd = v(VarKind::Discharge, &sub);
                    assert!(store.eta_charge * pc <= store.power_cap * u + 1e-6);
                    assert!(pd / store.eta_discharge <= store.power_cap * (1.0 - u) + 1e-6);
                    assert!(pc * pd <= 1e-6);
                }
            }
        }

        let reps = sys.timeseries.representatives.as_ref().unwrap();
        let peak = sys.total_peak();
        for st in 1..=stages {
            let lm = sys.economics.load_factor(st);
            let mut renewable = 0.0;
            let mut wind_avail = 0.0;
            let mut curtailed = 0.0;
            for (w, site) in sys.renewable_sites.iter().enumerate() {
                let wi = w as u32 + 1;
                for (h, rh) in reps.hours.iter().enumerate() {
                    let (k, f) = match site.kind {
                        RenewableKind::Wind => (VarKind::Wind, rh.wind_factor),
                        RenewableKind::Pv => (VarKind::Pv, rh.pv_factor),
                    };
                    renewable += f * v(k, &[st, wi]);
                    if site.kind == RenewableKind::Wind {
                        let pc = v(VarKind::Curtail, &[st, wi, h as u32 + 1]);
                        renewable -= pc;
                        curtailed += pc;
                        wind_avail += f * v(k, &[st, wi]);
                    }
                }
            }
            let demand: f64 = reps.hours.iter().map(|h| h.load_factor).sum::<f64>() * lm * peak;
            let alpha = sys.policy.rps_alpha * st as f64 / stages as f64;
            assert!(renewable >= alpha * demand - 1e-6, "{} stage {st}: rps", sys.name);
            assert!(curtailed <= sys.policy.wind_curtail_beta * wind_avail + 1e-6, "{} stage {st}: curtail", sys.name);
        }
    }
}

#[test]
fn storage_never_hurts() {
    for sys in corpus::corpus().into_iter().filter(|s| !s.storage_types.is_empty()) {
        let with = solve(&sys, &BuildOptions::default());
        let without = solve(&sys, &BuildOptions { with_bes: false, ..BuildOptions::default() });
        assert!(with.z <= without.z * (1.0 + 1e-9), "{}: {} > {}", sys.name, with.z, without.z);
    }
}

#[test]
fn carbon_price_never_raises_emissions() {
    for sys in corpus::corpus() {
        let tons = |with_lcp| {
            let s = solve(&sys, &BuildOptions { with_lcp, ..BuildOptions::default() });
            let b = evaluate_objective(&sys, &s.milp, &s.x).unwrap();
            if !with_lcp {
                assert_eq!(b.tc_e, 0.0);
            }
            b.stages.iter().map(|c| c.emission_tons).sum::<f64>()
        };
        let (on, off) = (tons(true), tons(false));
        assert!(on <= off + 1e-6 * off.max(1.0), "{}: {on} > {off}", sys.name);
    }
}

#[test]
fn constant_rps_reading_is_never_looser() {
    let sys = corpus::generate(4);
    assert!(sys.economics.stage_count > 1);
    let ramp = build_milp(&sys, &BuildOptions::default()).unwrap();
    let flat =
        build_milp(&sys, &BuildOptions { rps_reading: RpsReading::Constant, ..BuildOptions::default() }).unwrap();
    let (r, f) = (rows_of(&ramp, Family::Rps), rows_of(&flat, Family::Rps));
    assert_eq!(r.len(), f.len());
    let stages = sys.economics.stage_count as f64;
    for (a, b) in r.iter().zip(&f) {
        let s = a.subscripts[0] as f64;
        assert!((a.rhs - b.rhs * s / stages).abs() <= 1e-9 * b.rhs.abs());
    }
}

#[test]
fn shedding_variables_follow_gamma() {
    let sys = corpus::three_bus();
    assert_eq!(sys.policy.shed_gamma, 0.0);
    let off = build_milp(&sys, &BuildOptions::default()).unwrap();
    assert_eq!(off.count_kind(VarKind::Shed), 0);
    let on = build_milp(&sys, &BuildOptions { shed_gamma: Some(0.1), shed_phi: Some(0.03), ..BuildOptions::default() })
        .unwrap();
    assert_eq!(on.count_kind(VarKind::Shed), 2 * 3 * 4);
}

#[test]
fn partitions_and_names_are_consistent() {
    let m = build_milp(&corpus::generate(3), &BuildOptions::default()).unwrap();
    let mut names = std::collections::HashSet::new();
    for (j, v) in m.vars.iter().enumerate() {
        assert!(names.insert(v.name()), "duplicate {}", v.name());
        assert_eq!(m.index_of(v.kind, &v.subscripts), Some(j));
        let expect = match v.kind {
            VarKind::Line | VarKind::Unit | VarKind::Storage | VarKind::Mode => Partition::Y,
            VarKind::Wind | VarKind::Pv => Partition::R,
            VarKind::ExistingFlow | VarKind::CandidateFlow | VarKind::Angle => Partition::F,
            _ => Partition::P,
        };
        assert_eq!(v.partition(), expect);
    }
    let mut rows = std::collections::HashSet::new();
    for r in &m.rows {
        assert!(rows.insert(r.name()), "duplicate row {}", r.name());
        assert!(r.rhs.is_finite());
    }
    for block in [Block::Master, Block::Equality, Block::Inequality, Block::Balance] {
        for p in [Partition::Y, Partition::R, Partition::P, Partition::F] {
            let a = m.block_matrix(block, p);
            assert_eq!(a.rows, m.rows_in(block).len());
            assert_eq!(a.cols, m.partition(p).len());
        }
        assert_eq!(m.block_rhs(block).len(), m.rows_in(block).len());
    }
    // Master rows touch binaries only; the balance block has no binaries.
    assert_eq!(m.block_matrix(Block::Master, Partition::P).entries.len(), 0);
    assert_eq!(m.block_matrix(Block::Balance, Partition::Y).entries.len(), 0);
}

#[test]
fn mps_export_round_trips() {
    let m = build_milp(&corpus::three_bus(), &BuildOptions::default()).unwrap();
    let text = m.to_mps("three_bus");
    assert!(text.contains("balance_1.1.1"));
    let (lp, bin) = read_mps(&text).unwrap();
    let (orig, obin) = m.to_linear_program();
    assert_eq!(bin, obin);
    assert_eq!(lp.num_vars(), orig.num_vars());
    assert_eq!(lp.num_rows(), orig.num_rows());
    let a = solve_milp(&lp, &bin, &Tolerances::default(), 100_000);
    let b = solve_milp(&orig, &obin, &Tolerances::default(), 100_000);
    assert!(rel(a.objective, b.objective) <= 1e-9);
}

#[test]
fn missing_representatives_is_an_error() {
    let mut sys = corpus::three_bus();
    sys.timeseries.representatives = None;
    assert!(build_milp(&sys, &BuildOptions::default()).is_err());
    let mut x = one_bus(100.0, 0.1);
    x.thermal_types.clear();
    assert!(build_milp(&x, &BuildOptions::default()).is_err());
}
