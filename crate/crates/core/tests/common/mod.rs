#![allow(dead_code)]

use tgsep_core::benders::{subproblem_value, PrimalSolver, Subproblem};
use tgsep_core::corpus;
use tgsep_core::formulation::{Block, CompactMilp};
use tgsep_core::lp::{solve_milp, LinearProgram, MilpStatus, RowSense, Tolerances};
use tgsep_core::rephours::{RepresentativeHour, RepresentativeSet};
use tgsep_core::system::*;

/// One bus, one existing 160 MW unit split into four equal fuel segments, one representative hour.
pub fn one_bus(peak: f64, lg: f64) -> SystemData {
    let mut sys = corpus::three_bus();
    sys.economics.stage_count = 1;
    sys.economics.load_growth = LoadGrowth::Scalar(lg);
    sys.buses = vec![Bus { id: 1, peak_load: peak, is_expansion_bus: false }];
    sys.lines.clear();
    sys.renewable_sites.clear();
    sys.storage_types.clear();
    sys.policy.rps_alpha = 0.0;
    let mut u = sys.thermal_types[0].clone();
    u.bus = 1;
    u.capacity = 160.0;
    u.existing_count = 1;
    u.candidate_slots = 0;
    u.maint_cost = 10.0;
    u.segments = vec![CostSegment { fuel_price: 2.0, heat_rate: 10.0, emission_price: 0.0 }; 4];
    sys.thermal_types = vec![u];
    sys.timeseries.representatives = Some(RepresentativeSet {
        hours: vec![RepresentativeHour {
            index: 1,
            load_factor: 1.0,
            wind_factor: 0.5,
            pv_factor: 0.0,
            weight: 1.0,
            span_hours: 1,
        }],
        source_hash: String::new(),
    });
    assert!(validate(&sys).is_empty(), "{:?}", validate(&sys));
    sys
}

/// One bus with 100 MW of load, a 50 MW existing unit and three 25 MW candidate slots.
/// Reserve margin makes every slot necessary, so only one binary assignment is feasible.
pub fn short_of_capacity() -> SystemData {
    let mut sys = one_bus(100.0, 0.0);
    let u = &mut sys.thermal_types[0];
    u.capacity = 50.0;
    u.ramp_up = 50.0;
    u.ramp_down = 50.0;
    u.frsr_up_max = 20.0;
    u.frsr_dn_max = 20.0;
    let mut c = u.clone();
    c.tech = "coal".into();
    c.capacity = 25.0;
    c.existing_count = 0;
    c.candidate_slots = 3;
    c.ramp_up = 25.0;
    c.ramp_down = 25.0;
    c.frsr_up_max = 10.0;
    c.frsr_dn_max = 10.0;
    sys.thermal_types.push(c);
    assert!(validate(&sys).is_empty(), "{:?}", validate(&sys));
    sys
}

/// Two buses joined only by one candidate circuit, with free operation: the circuit is the
/// single feasible binary assignment and the optimum is its investment cost plus maintenance.
pub fn one_line_toy() -> SystemData {
    let mut sys = corpus::generate_from(&corpus::GenSpec {
        seed: 5,
        stages: 1,
        hours: 4,
        buses: 2,
        line_slots: 1,
        unit_slots: 1,
        storage: false,
        island: true,
        shed_gamma: 0.0,
    });
    sys.renewable_sites.clear();
    sys.policy.rps_alpha = 0.0;
    sys.thermal_types.retain(|u| u.existing_count > 0);
    let u = &mut sys.thermal_types[0];
    u.existing_count = 3;
    u.frsr_cost = 0.0;
    for s in &mut u.segments {
        s.fuel_price = 0.0;
        s.emission_price = 0.0;
    }
    assert_eq!(sys.lines.len(), 1);
    sys.lines[0].capacity = 1000.0;
    assert!(validate(&sys).is_empty(), "{:?}", validate(&sys));
    sys
}

/// Branch-and-bound optimum of the whole model.
pub fn oracle(milp: &CompactMilp) -> f64 {
    let (lp, bin) = milp.to_linear_program();
    let out = solve_milp(&lp, &bin, &Tolerances::default(), 200_000);
    assert_eq!(out.status, MilpStatus::Optimal);
    out.objective
}

/// Every binary vector that satisfies the master rows, with its true value (`None` if the
/// operating problem is infeasible).
pub fn value_table(milp: &CompactMilp) -> Vec<(Vec<f64>, Option<f64>)> {
    let sp = Subproblem::new(milp);
    let n = sp.num_y();
    assert!(n <= 12);
    let mut local = vec![usize::MAX; milp.num_vars()];
    for (k, &j) in sp.ys.iter().enumerate() {
        local[j] = k;
    }
    let master = milp.rows_in(Block::Master);
    let mut solver = PrimalSolver::new(&sp, Tolerances::default());
    let mut out = Vec::new();
    for mask in 0u32..1 << n {
        let y: Vec<f64> = (0..n).map(|k| ((mask >> k) & 1) as f64).collect();
        let ok = master.iter().all(|&i| {
            let r = &milp.rows[i];
            let lhs: f64 = r.coeffs.iter().map(|&(j, a)| a * y[local[j]]).sum();
            match r.sense {
                RowSense::Ge => lhs >= r.rhs - 1e-9,
                RowSense::Le => lhs <= r.rhs + 1e-9,
                RowSense::Eq => (lhs - r.rhs).abs() <= 1e-9,
            }
        });
        if !ok {
            continue;
        }
        let inv: f64 = sp.ys.iter().zip(&y).map(|(&j, v)| milp.cost[j] * v).sum();
        let v = subproblem_value(&mut solver, &y).unwrap().map(|z| z + inv + milp.objective_offset);
        out.push((y, v));
    }
    out
}

// Deterministic pseudo-random instances, independent of proptest's shrinking.
pub fn lcg(seed: &mut u64) -> f64 {
    *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    ((*seed >> 11) as f64) / ((1u64 << 53) as f64)
}

/// Feasible by construction around a hidden point; bounded because every
/// variable with an open side has a cost pushing toward its closed side.
pub fn random_feasible_lp(n: usize, m: usize, seed: u64) -> LinearProgram {
    let mut s = seed.wrapping_add(17);
    let mut lp = LinearProgram::new();
    let mut x0 = Vec::new();
    for j in 0..n {
        let kind = (lcg(&mut s) * 4.0) as usize;
        let c = (lcg(&mut s) * 10.0 - 5.0).round();
        let (lo, up, c) = match kind {
            0 => (0.0, f64::INFINITY, c.abs()),
            1 => (f64::NEG_INFINITY, 3.0, -c.abs()),
            2 => (-2.0, 2.0 + (lcg(&mut s) * 4.0).round(), c),
            _ => (0.0, 1.0, c),
        };
        let v = if lo.is_finite() && up.is_finite() {
            lo + (up - lo) * lcg(&mut s)
        } else if lo.is_finite() {
            lo + 2.0 * lcg(&mut s)
        } else {
            up - 2.0 * lcg(&mut s)
        };
        x0.push(v);
        lp.add_var(format!("x{j}"), c, lo, up);
    }
    for i in 0..m {
        let mut coeffs = Vec::new();
        for j in 0..n {
            if lcg(&mut s) < 0.4 {
                coeffs.push((j, (lcg(&mut s) * 8.0 - 4.0).round()));
            }
        }
        let act: f64 = coeffs.iter().map(|&(j, a)| a * x0[j]).sum();
        let slack = (lcg(&mut s) * 3.0).round();
        let (sense, rhs) = match i % 3 {
            0 => (RowSense::Ge, act - slack),
            1 => (RowSense::Le, act + slack),
            _ => (RowSense::Eq, act),
        };
        lp.add_row(format!("r{i}"), coeffs, sense, rhs);
    }
    lp
}

pub fn random_infeasible_lp(n: usize, m: usize, seed: u64) -> LinearProgram {
    let mut lp = random_feasible_lp(n, m, seed);
    let mut s = seed ^ 0x9e37_79b9;
    // Nonnegative combination of the >= view of some rows, contradicted.
    let mut comb = vec![0.0; n];
    let mut rhs = 0.0;
    for row in &lp.rows {
        let w = (lcg(&mut s) * 3.0).round();
        if w == 0.0 {
            continue;
        }
        let sign = match row.sense {
            RowSense::Ge => 1.0,
            RowSense::Le => -1.0,
            RowSense::Eq => {
                if lcg(&mut s) < 0.5 {
                    1.0
                } else {
                    -1.0
                }
            }
        };
        for &(j, a) in &row.coeffs {
            comb[j] += sign * w * a;
        }
        rhs += sign * w * row.rhs;
    }
    let coeffs: Vec<(usize, f64)> = comb.iter().enumerate().map(|(j, &a)| (j, -a)).collect();
    let gap = 1.0 + (lcg(&mut s) * 5.0).round();
    lp.add_row("contra", coeffs, RowSense::Ge, -rhs + gap);
    lp
}
