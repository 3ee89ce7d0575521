mod common;

use common::{oracle, value_table};

use tgsep_core::benders::*;
use tgsep_core::corpus;
use tgsep_core::formulation::*;
use tgsep_core::lp::{solve_milp, Tolerances};
use tgsep_core::system::SystemData;
use tgsep_core::Error;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn build(sys: &SystemData) -> CompactMilp {
    build_milp(sys, &BuildOptions::default()).unwrap()
}

fn run_mode(sys: &SystemData, milp: &CompactMilp, mode: BendersMode) -> BendersResult {
    run(sys, milp, &BendersOptions { mode, ..BendersOptions::default() }).unwrap()
}

#[test]
fn first_master_takes_cheapest_binaries() {
    let sys = corpus::three_bus();
    let milp = build(&sys);
    let (y, z, _) = solve_master(&MasterState::default(), &milp, &BendersOptions::default()).unwrap();
    assert!(y.iter().all(|&v| v == 0.0));
    // Only the constant fleet maintenance remains when nothing is built.
    assert!((z - milp.objective_offset).abs() <= 1e-9 * z.abs());

    let mut none = common::short_of_capacity();
    none.thermal_types[0].existing_count = 0;
    none.thermal_types[0].candidate_slots = 1;
    let m = build(&none);
    assert_eq!(m.objective_offset, 0.0);
    let (_, z, _) = solve_master(&MasterState::default(), &m, &BendersOptions::default()).unwrap();
    assert_eq!(z, 0.0);
}

#[test]
fn cut_at_ybar_raises_lower_bound_to_true_value() {
    let sys = corpus::three_bus();
    let milp = build(&sys);
    let sp = Subproblem::new(&milp);
    let mut solver = PrimalSolver::new(&sp, tol());
    let ybar: Vec<f64> = vec![1.0; sp.num_y()];
    let DspOutcome::Bounded { dual, .. } = solve_dsp(&sp, &mut solver, &ybar, &tol()).unwrap() else {
        panic!("all-built plan must be operable");
    };
    let ub = upper_bound(&dual, &sp, &ybar, &milp);
    let cut = optimality_cut(&dual, &sp, &milp);
    assert!(rel(cut.value(&ybar), ub) <= 1e-9);
    let state = MasterState { cuts: vec![cut], ..MasterState::default() };
    let (lp, bin) = master_lp(&milp, &state.cuts);
    let mut fixed = lp.clone();
    for &j in &bin {
        fixed.lower[j] = 1.0;
    }
    let out = solve_milp(&fixed, &bin, &tol(), 1000);
    assert!(out.objective >= ub * (1.0 - 1e-9));
}

#[test]
fn primal_and_direct_dual_agree() {
    let sys = corpus::three_bus();
    let milp = build(&sys);
    let sp = Subproblem::new(&milp);
    let mut solver = PrimalSolver::new(&sp, tol());
    let mut bounded = 0;
    for (y, _) in value_table(&milp) {
        let a = solve_dsp(&sp, &mut solver, &y, &tol()).unwrap();
        let b = solve_dsp_direct(&sp, &y, &tol()).unwrap();
        match (a, b) {
            (DspOutcome::Bounded { dual: da, value: va, .. }, DspOutcome::Bounded { value: vb, .. }) => {
                assert!(rel(va, vb) <= 1e-8, "{y:?}: {va} vs {vb}");
                let cmax = sp.cost.iter().fold(1.0f64, |a, c| a.max(c.abs()));
                let d = sp.dual_infeasibility(&da.u(), false);
                assert!(d <= 1e-9 * cmax, "{y:?}: dual infeasibility {d:e} against cost scale {cmax:e}");
                bounded += 1;
            }
            (DspOutcome::Unbounded { .. }, DspOutcome::Unbounded { .. }) => {}
            _ => panic!("{y:?}: primal and dual forms disagree on feasibility"),
        }
    }
    assert!(bounded > 0);
}

#[test]
fn capacity_shortfall_gives_separating_feasibility_cut() {
    let sys = common::short_of_capacity();
    let milp = build(&sys);
    let sp = Subproblem::new(&milp);
    let mut solver = PrimalSolver::new(&sp, tol());
    let zero = vec![0.0; sp.num_y()];
    let DspOutcome::Unbounded { ray } = solve_dsp(&sp, &mut solver, &zero, &tol()).unwrap() else {
        panic!("50 MW cannot carry 100 MW");
    };
    assert!(ray.is_ray);
    assert!(ray.mu.iter().all(|&m| m >= -1e-12));
    assert!(sp.dual_infeasibility(&ray.u(), true) <= 1e-9);
    let cut = feasibility_cut(&ray, &sp);
    assert!(cut.value(&zero) > 0.0);

    let table = value_table(&milp);
    let feasible: Vec<_> = table.iter().filter(|(_, v)| v.is_some()).collect();
    assert_eq!(feasible.len(), 1);
    assert!(feasible[0].0.iter().all(|&v| v == 1.0));
    for (y, v) in &table {
        if v.is_some() {
            assert!(cut.value(y) <= 1e-9, "{y:?}");
        }
    }

    let r = run_mode(&sys, &milp, BendersMode::Plain);
    assert_eq!(r.status, BendersStatus::Converged);
    assert!(rel(r.upper_bound, oracle(&milp)) <= 1e-6);
    assert_eq!(r.incumbent.unwrap(), vec![1.0; 3]);
}

#[test]
fn modified_dual_rejects_feasible_point() {
    let milp = build(&corpus::three_bus());
    let sp = Subproblem::new(&milp);
    let y = vec![1.0; sp.num_y()];
    assert!(matches!(solve_mdsp(&sp, &y, &tol()), Err(Error::Consistency(_))));
}

#[test]
fn pareto_point_at_ybar_reproduces_plain_cut_value() {
    let milp = build(&corpus::three_bus());
    let sp = Subproblem::new(&milp);
    let mut solver = PrimalSolver::new(&sp, tol());
    let ybar = vec![1.0; sp.num_y()];
    let DspOutcome::Bounded { dual, value, .. } = solve_dsp(&sp, &mut solver, &ybar, &tol()).unwrap() else { panic!() };
    let core = CorePoint { y: ybar.clone() };
    let p = solve_sdsp(&sp, &core, &ybar, value, &tol()).unwrap().expect("face is feasible");
    assert!(rel(p.value_at(&sp, &ybar), value) <= 1e-8);
    let (a, b) = (optimality_cut(&p, &sp, &milp), optimality_cut(&dual, &sp, &milp));
    assert!(rel(a.value(&ybar), b.value(&ybar)) <= 1e-8);
}

#[test]
fn core_point_update_example() {
    let mut c = CorePoint::new(4);
    c.update(&[1.0, 0.0, 0.0, 1.0]);
    assert_eq!(c.y, vec![0.75, 0.25, 0.25, 0.75]);
    assert!(c.y.iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn three_bus_matches_oracle() {
    let sys = corpus::three_bus();
    let milp = build(&sys);
    let z = oracle(&milp);
    for mode in [BendersMode::Plain, BendersMode::Pareto] {
        let r = run_mode(&sys, &milp, mode);
        assert_eq!(r.status, BendersStatus::Converged);
        assert!(rel(r.upper_bound, z) <= 1e-6);
        assert!(rel(r.lower_bound, z) <= 1e-6);
        let first_ub = r.trace.iter().map(|t| t.upper_bound).find(|u| u.is_finite()).unwrap();
        assert!(first_ub >= z * (1.0 - 1e-9));
        let sol = r.solution.unwrap();
        assert!(rel(sol.costs.z, z) <= 1e-6);
        assert!(check_solution(&sys, &milp, &sol.values, 1e-6).is_empty());
    }
}

#[test]
fn single_feasible_plan_converges_in_two_iterations() {
    let sys = common::one_line_toy();
    let milp = build(&sys);
    assert_eq!(milp.binaries().len(), 1);
    let z = oracle(&milp);
    for mode in [BendersMode::Plain, BendersMode::Pareto] {
        let r = run_mode(&sys, &milp, mode);
        assert_eq!(r.status, BendersStatus::Converged);
        assert!(r.iterations() <= 2, "{mode:?}: {}", r.iterations());
        assert!(rel(r.upper_bound, z) <= 1e-6);
        assert_eq!(r.trace[0].cut, CutKind::Feasibility);
    }
}

#[test]
fn loose_tolerance_stops_no_later() {
    let sys = corpus::generate(11);
    let milp = build(&sys);
    let tight = run_mode(&sys, &milp, BendersMode::Plain);
    let loose =
        run(&sys, &milp, &BendersOptions { mode: BendersMode::Plain, tau: 0.5, ..BendersOptions::default() }).unwrap();
    assert_eq!(loose.status, BendersStatus::Converged);
    assert!(loose.iterations() <= tight.iterations());
    assert!((loose.upper_bound - loose.lower_bound) / loose.upper_bound <= 0.5);
}

#[test]
fn iteration_limit_is_reported() {
    let sys = corpus::generate(11);
    let milp = build(&sys);
    let r = run(&sys, &milp, &BendersOptions { iteration_limit: 2, ..BendersOptions::default() }).unwrap();
    assert_eq!(r.status, BendersStatus::IterationLimit);
    assert_eq!(r.iterations(), 2);
    assert!(r.lower_bound.is_finite());
}

#[test]
fn runs_are_deterministic() {
    let sys = corpus::generate(6);
    let milp = build(&sys);
    let a = run_mode(&sys, &milp, BendersMode::Pareto);
    let b = run_mode(&sys, &milp, BendersMode::Pareto);
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.state.cuts, b.state.cuts);
}

#[test]
fn trace_csv_has_one_row_per_iteration() {
    let sys = corpus::three_bus();
    let milp = build(&sys);
    let r = run_mode(&sys, &milp, BendersMode::Pareto);
    let mut buf = Vec::new();
    write_trace(&r.trace, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "iteration,lower_bound,upper_bound,gap,cut,master_nodes,fallback");
    assert_eq!(lines.len(), r.iterations() + 1);
    assert!(lines[1].starts_with("1,"));
}

/// Cut validity, bound monotonicity, agreement between modes and the Pareto iteration
/// advantage, all on the shipped corpus.
#[test]
fn corpus_properties() {
    let mut strictly_fewer = 0;
    for sys in corpus::corpus() {
        let milp = build(&sys);
        let z = oracle(&milp);
        let table = value_table(&milp);
        let mut iters = Vec::new();
        for mode in [BendersMode::Plain, BendersMode::Pareto] {
            let r = run_mode(&sys, &milp, mode);
            let name = format!("{} {mode:?}", sys.name);
            assert_eq!(r.status, BendersStatus::Converged, "{name}");
            assert!(rel(r.upper_bound, z) <= 1e-6, "{name}: {} vs {z}", r.upper_bound);

            for w in r.trace.windows(2) {
                assert!(w[1].lower_bound >= w[0].lower_bound - 1e-9 * w[0].lower_bound.abs(), "{name}: LB fell");
                assert!(w[1].upper_bound <= w[0].upper_bound, "{name}: UB rose");
            }
            for t in &r.trace {
                assert!(t.upper_bound >= t.lower_bound * (1.0 - 1e-9), "{name}: UB below LB");
            }
            let last = r.trace.last().unwrap();
            assert!(last.gap <= 1e-6 || last.upper_bound - last.lower_bound <= 1e-6, "{name}");

            for (k, cut) in r.state.cuts.iter().enumerate() {
                let scale = cut.constant.abs() + cut.coeffs.iter().map(|a| a.abs()).sum::<f64>();
                for (y, v) in &table {
                    match (cut.kind, v) {
                        (CutKind::Optimality, Some(v)) => {
                            assert!(
                                cut.value(y) <= v + 1e-7 * v.abs().max(1.0),
                                "{name} cut {k} overestimates at {y:?}"
                            );
                        }
                        (CutKind::Feasibility, Some(_)) => {
                            assert!(cut.value(y) <= 1e-7 * scale.max(1.0), "{name} cut {k} excludes feasible {y:?}");
                        }
                        _ => {}
                    }
                }
            }

            let sol = r.solution.as_ref().unwrap();
            assert!(check_solution(&sys, &milp, &sol.values, 1e-6).is_empty(), "{name}");
            iters.push(r.iterations());
        }
        assert!(iters[1] <= iters[0], "{}: pareto {} > plain {}", sys.name, iters[1], iters[0]);
        if iters[1] < iters[0] {
            strictly_fewer += 1;
        }
    }
    assert!(strictly_fewer >= 1);
}
