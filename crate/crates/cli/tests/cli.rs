use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tgsep_core::corpus::{self, synthetic_year, YearProfile};
use tgsep_core::rephours::read_representatives;
use tgsep_core::system::{load_system, save_system, write_sidecar};

fn tgsep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tgsep")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn year_file(dir: &Path) -> std::path::PathBuf {
    let p = dir.join("year.csv");
    write_sidecar(&synthetic_year(YearProfile::Temperate, 2), &p).unwrap();
    p
}

#[test]
fn cluster_to_96_hours() {
    let dir = tempfile::tempdir().unwrap();
    let year = year_file(dir.path());
    let out = dir.path().join("rep.csv");
    let o = tgsep(&["cluster", "--series", s(&year), "--k", "96", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rep = read_representatives(&out).unwrap();
    assert_eq!(rep.len(), 96);
    assert!((rep.hours.iter().map(|h| h.weight).sum::<f64>() - 1.0).abs() <= 1e-12);
    assert!(String::from_utf8_lossy(&o.stdout).contains("duration_rmse"));
}

#[test]
fn cluster_to_full_length_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let year = year_file(dir.path());
    let out = dir.path().join("rep.csv");
    let o = tgsep(&["cluster", "--series", s(&year), "--k", "8760", "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    let rep = read_representatives(&out).unwrap();
    let series = synthetic_year(YearProfile::Temperate, 2).triples();
    for (h, t) in rep.hours.iter().zip(&series) {
        assert_eq!(h.triple(), *t);
    }
}

#[test]
fn usage_and_validation_errors_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let year = year_file(dir.path());
    let out = dir.path().join("rep.csv");
    let o = tgsep(&["cluster", "--series", s(&year), "--k", "0", "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(!out.exists());
    assert_eq!(code(&tgsep(&["solve", "--method", "simplex", "--seed-instance", "0"])), 2);
    assert_eq!(code(&tgsep(&["solve"])), 2);

    let missing = dir.path().join("nope.toml");
    assert_eq!(code(&tgsep(&["solve", "--instance", s(&missing)])), 3);
    let mut sys = corpus::generate(0);
    sys.economics.interest_rate = -1.0;
    let bad = dir.path().join("bad.toml");
    save_system(&sys, &bad).unwrap();
    let o = tgsep(&["solve", "--instance", s(&bad)]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn infeasible_and_nonconverged_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let mut sys = corpus::generate(0);
    sys.thermal_types.retain(|u| u.existing_count > 0);
    for u in &mut sys.thermal_types {
        u.candidate_slots = 0;
    }
    sys.renewable_sites.clear();
    sys.policy.rps_alpha = 0.0;
    for b in &mut sys.buses {
        b.peak_load *= 20.0;
    }
    let p = dir.path().join("short.toml");
    save_system(&sys, &p).unwrap();
    for m in ["benders", "monolithic"] {
        let o = tgsep(&["solve", "--instance", s(&p), "--method", m]);
        assert_eq!(code(&o), 4, "{m}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stderr).contains("adequacy"));
    }

    let sol = dir.path().join("sol.json");
    let args = ["solve", "--seed-instance", "3", "--benders-mode", "plain", "--iter-limit", "1", "--solution", s(&sol)];
    let o = tgsep(&args);
    assert_eq!(code(&o), 5, "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(json(&sol)["status"], "not_converged");
    assert!(json(&sol)["lower_bound"].is_number());
}

#[test]
fn both_methods_agree_on_total_cost() {
    let dir = tempfile::tempdir().unwrap();
    let mut tc = Vec::new();
    for m in ["benders", "monolithic"] {
        let r = dir.path().join(format!("{m}.json"));
        let o = tgsep(&["solve", "--seed-instance", "1", "--method", m, "--report", s(&r)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        tc.push(json(&r)["costs"]["tc_p"].as_f64().unwrap());
    }
    assert!((tc[0] - tc[1]).abs() <= 1e-6 * tc[1].abs(), "{tc:?}");
}

#[test]
fn storage_toggle_never_raises_cost() {
    let dir = tempfile::tempdir().unwrap();
    let mut tc = Vec::new();
    for flag in ["--with-bes", "--no-bes"] {
        let r = dir.path().join(format!("{flag}.json"));
        let o = tgsep(&["solve", "--seed-instance", "3", flag, "--method", "monolithic", "--report", s(&r)]);
        assert_eq!(code(&o), 0);
        tc.push(json(&r)["costs"]["tc_p"].as_f64().unwrap());
    }
    assert!(tc[0] <= tc[1] * (1.0 + 1e-9), "{tc:?}");
}

#[test]
fn shedding_matches_raw_values() {
    let dir = tempfile::tempdir().unwrap();
    let mut sys = corpus::generate(0);
    for u in &mut sys.thermal_types {
        for seg in &mut u.segments {
            seg.fuel_price = 500.0;
        }
    }
    let p = dir.path().join("dear.json");
    save_system(&sys, &p).unwrap();
    let (sol, rep) = (dir.path().join("sol.json"), dir.path().join("rep.json"));
    let o = tgsep(&[
        "solve",
        "--instance",
        s(&p),
        "--gamma",
        "0.10",
        "--phi",
        "0.03",
        "--method",
        "monolithic",
        "--solution",
        s(&sol),
        "--report",
        s(&rep),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let sys = load_system(&p).unwrap();
    let rho: Vec<f64> = sys.timeseries.representatives.as_ref().unwrap().hours.iter().map(|h| h.weight).collect();
    let yrs = sys.economics.years_per_stage as f64;
    let mut raw = 0.0;
    for (name, v) in json(&sol)["values"].as_object().unwrap() {
        if let Some(rest) = name.strip_prefix("LS_") {
            let h: usize = rest.rsplit('_').next().unwrap().parse().unwrap();
            raw += yrs * 8760.0 * rho[h - 1] * v.as_f64().unwrap();
        }
    }
    let reported: f64 =
        json(&rep)["stages"].as_array().unwrap().iter().map(|st| st["costs"]["shed_mwh"].as_f64().unwrap()).sum();
    assert!(raw > 0.0);
    assert!((raw - reported).abs() <= 1e-6 * raw, "{raw} vs {reported}");
}

#[test]
fn report_check_and_export_from_stored_solution() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.toml");
    assert_eq!(code(&tgsep(&["generate", "--seed-instance", "3", "--out", s(&inst)])), 0);
    let sol = dir.path().join("sol.json");
    let trace = dir.path().join("trace.csv");
    let o = tgsep(&["solve", "--instance", s(&inst), "--solution", s(&sol), "--trace", s(&trace)]);
    assert_eq!(code(&o), 0);
    assert!(std::fs::read_to_string(&trace).unwrap().starts_with("iteration,lower_bound"));

    let out = dir.path().join("out");
    let o = tgsep(&["report", "--instance", s(&inst), "--solution", s(&sol), "--out-dir", s(&out), "--stage", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["report.json", "plan.txt", "shares.csv", "trajectory.csv", "dispatch.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let shares = std::fs::read_to_string(out.join("shares.csv")).unwrap();
    for line in shares.lines().skip(1) {
        let sum: f64 = line.split(',').skip(1).map(|x| x.parse::<f64>().unwrap()).sum();
        assert!((sum - 1.0).abs() <= 1e-9, "{line}");
    }
    let first = std::fs::read(out.join("report.json")).unwrap();
    let out2 = dir.path().join("out2");
    tgsep(&["report", "--instance", s(&inst), "--solution", s(&sol), "--out-dir", s(&out2)]);
    assert_eq!(first, std::fs::read(out2.join("report.json")).unwrap());

    assert_eq!(code(&tgsep(&["check", "--instance", s(&inst), "--solution", s(&sol)])), 0);
    let o = tgsep(&["report", "--seed-instance", "4", "--solution", s(&sol), "--out-dir", s(&out)]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("stale"));

    let mut doc = json(&sol);
    let key = doc["values"].as_object().unwrap().keys().find(|k| k.starts_with("P_")).unwrap().clone();
    doc["values"][&key] = Value::from(1e6);
    let tampered = dir.path().join("bad.json");
    std::fs::write(&tampered, doc.to_string()).unwrap();
    let o = tgsep(&["check", "--instance", s(&inst), "--solution", s(&tampered)]);
    assert_eq!(code(&o), 3);

    let mps = dir.path().join("m.mps");
    let o = tgsep(&["export-milp", "--instance", s(&inst), "--no-lcp", "--big-m-angle", "1.0", "--out", s(&mps)]);
    assert_eq!(code(&o), 0);
    let (lp, bins) = tgsep_core::lp::read_mps(&std::fs::read_to_string(&mps).unwrap()).unwrap();
    assert!(lp.num_vars() > 0 && !bins.is_empty());
}
