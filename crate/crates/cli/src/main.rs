use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tgsep_core::benders::{write_trace_file, BendersMode, BendersOptions};
use tgsep_core::formulation::{build_milp, check_solution, BuildOptions, CompactMilp, RpsReading};
use tgsep_core::rephours::{evaluate_representatives, reduce, write_representatives};
use tgsep_core::report::{dispatch_csv, dispatch_stack, PlanReport, SolutionDocument};
use tgsep_core::solve::{solve, Method, PlanStatus};
use tgsep_core::system::{load_system, read_sidecar, save_system, validate, SystemData};
use tgsep_core::{corpus, Error};

const EXIT_FAILURE: u8 = 1;
const EXIT_VALIDATION: u8 = 3;
const EXIT_INFEASIBLE: u8 = 4;
const EXIT_NOT_CONVERGED: u8 = 5;

/// Transmission, generation and storage expansion planner.
#[derive(Parser)]
#[command(name = "tgsep", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce an hourly series to representative hours.
    Cluster(ClusterArgs),
    /// Build and solve an instance, writing the solution and plan report.
    Solve(SolveArgs),
    /// Derive plot-ready series from a stored solution.
    Report(ReportArgs),
    /// Write the monolithic model as MPS.
    ExportMilp(ExportArgs),
    /// Verify a stored solution against every constraint.
    Check(CheckArgs),
    /// Write a generated test instance.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct ClusterArgs {
    /// Hourly table with columns hour,load_factor,wind_factor,pv_factor.
    #[arg(long)]
    series: PathBuf,
    #[arg(long, default_value_t = 96, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    /// Merge days closer than this before clustering; 0 disables.
    #[arg(long, default_value_t = 0.0)]
    dedupe: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InstanceArgs {
    /// Instance document (.toml or .json).
    #[arg(long, conflicts_with = "seed_instance", required_unless_present = "seed_instance")]
    instance: Option<PathBuf>,
    /// Use the generated instance with this seed instead of a file.
    #[arg(long)]
    seed_instance: Option<u64>,
}

impl InstanceArgs {
    fn load(&self) -> Result<SystemData, Error> {
        let sys = match (&self.instance, self.seed_instance) {
            (Some(p), _) => load_system(p)?,
            (None, Some(seed)) => corpus::generate(seed),
            (None, None) => unreachable!("clap requires one source"),
        };
        let v = validate(&sys);
        if !v.is_empty() {
            let msg: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            return Err(Error::Domain(msg.join("; ")));
        }
        Ok(sys)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Benders,
    Monolithic,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Plain,
    Pareto,
}

#[derive(Clone, Copy, ValueEnum)]
enum RpsArg {
    Ramp,
    Constant,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, overrides_with = "no_bes")]
    with_bes: bool,
    /// Exclude storage investment.
    #[arg(long)]
    no_bes: bool,
    #[arg(long, overrides_with = "no_lcp")]
    with_lcp: bool,
    /// Drop the emission price from the objective.
    #[arg(long)]
    no_lcp: bool,
    /// Cap on shed power as a fraction of hourly bus demand; 0 forbids shedding.
    #[arg(long)]
    gamma: Option<f64>,
    /// Cap on summed shedding of a stage as a fraction of summed demand.
    #[arg(long)]
    phi: Option<f64>,
    /// Largest angle difference across a candidate circuit, radians.
    #[arg(long)]
    big_m_angle: Option<f64>,
    #[arg(long, value_enum, default_value = "ramp")]
    rps_reading: RpsArg,
}

impl ModelArgs {
    fn options(&self) -> BuildOptions {
        let d = BuildOptions::default();
        BuildOptions {
            with_bes: !self.no_bes,
            with_lcp: !self.no_lcp,
            shed_gamma: self.gamma,
            shed_phi: self.phi,
            max_angle: self.big_m_angle.unwrap_or(d.max_angle),
            rps_reading: match self.rps_reading {
                RpsArg::Ramp => RpsReading::Ramp,
                RpsArg::Constant => RpsReading::Constant,
            },
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, default_value = "benders")]
    method: MethodArg,
    #[arg(long, value_enum, default_value = "pareto")]
    benders_mode: ModeArg,
    /// Relative optimality gap.
    #[arg(long, default_value_t = 1e-6)]
    tau: f64,
    #[arg(long, default_value_t = 200)]
    iter_limit: usize,
    /// Solution document (JSON).
    #[arg(long)]
    solution: Option<PathBuf>,
    /// Plan report (JSON).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Plain-text plan table.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Convergence trace (CSV, benders only).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long)]
    solution: PathBuf,
    /// Stage of the dispatch stack.
    #[arg(long, default_value_t = 1)]
    stage: u32,
    /// Directory for report.json, plan.txt, shares.csv, trajectory.csv and dispatch.csv.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long)]
    solution: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    seed_instance: u64,
    /// Output document; the extension picks TOML or JSON.
    #[arg(long)]
    out: PathBuf,
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_solution(path: &Path) -> Result<SolutionDocument, Error> {
    SolutionDocument::from_json(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

/// Instance plus the model the stored solution was built with.
fn rebuild(args: &InstanceArgs, doc: &SolutionDocument) -> Result<(SystemData, CompactMilp), Error> {
    let sys = args.load()?;
    doc.check_instance(&sys)?;
    let milp = build_milp(&sys, &doc.options)?;
    Ok((sys, milp))
}

fn cluster(a: &ClusterArgs) -> Result<u8, Error> {
    let series = read_sidecar(&a.series)?.triples();
    let k = a.k as usize;
    if k > series.len() {
        return Err(Error::Domain(format!("k = {k} exceeds the {} hours in the series", series.len())));
    }
    let rep = reduce(&series, k, a.dedupe)?;
    write_representatives(&rep, &a.out)?;
    let m = evaluate_representatives(&rep, &series)?;
    println!("representatives {}", rep.len());
    println!("weight_sum {}", rep.hours.iter().map(|h| h.weight).sum::<f64>());
    for (d, name) in ["load", "wind", "pv"].iter().enumerate() {
        println!("{name} duration_rmse {:.6e} ramp_mae {:.6e}", m.duration_rmse[d], m.ramp_mae[d]);
    }
    Ok(0)
}

fn run_solve(a: &SolveArgs) -> Result<u8, Error> {
    let sys = a.instance.load()?;
    let milp = build_milp(&sys, &a.model.options())?;
    let opts = BendersOptions {
        mode: match a.benders_mode {
            ModeArg::Plain => BendersMode::Plain,
            ModeArg::Pareto => BendersMode::Pareto,
        },
        tau: a.tau,
        iteration_limit: a.iter_limit,
        ..BendersOptions::default()
    };
    let method = match a.method {
        MethodArg::Benders => Method::Benders,
        MethodArg::Monolithic => Method::Monolithic,
    };
    let out = solve(&sys, &milp, method, &opts)?;
    let doc = SolutionDocument::new(&sys, &milp, &out);
    if let Some(p) = &a.solution {
        write(p, &doc.to_json()?)?;
    }
    if let Some(p) = &a.trace {
        write_trace_file(&out.trace, p)?;
    }
    let fmt = |v: Option<f64>| v.map_or("none".to_string(), |x| format!("{x:.6}"));
    println!("status {:?}", out.status);
    println!("iterations {}", out.iterations);
    println!("lower_bound {}", fmt(out.lower_bound));
    println!("upper_bound {}", fmt(out.upper_bound));
    if out.status == PlanStatus::Infeasible {
        eprintln!("infeasible: {}", out.diagnosis.as_deref().unwrap_or("no feasible plan"));
        return Ok(EXIT_INFEASIBLE);
    }
    if let Some(sol) = &out.solution {
        let v = check_solution(&sys, &milp, &sol.values, 1e-6);
        if !v.is_empty() {
            for x in &v {
                eprintln!("{x}");
            }
            return Err(Error::Consistency(format!("{} constraint violations in the returned plan", v.len())));
        }
        let r = PlanReport::new(&sys, &milp, &doc)?;
        println!("tc_p {:.6}", r.costs.tc_p);
        println!("shed_mwh {}", r.stages.iter().map(|s| s.costs.shed_mwh).sum::<f64>());
        if let Some(p) = &a.report {
            write(p, &r.to_json()?)?;
        }
        let table = r.render_table();
        match &a.table {
            Some(p) => write(p, &table)?,
            None => print!("{table}"),
        }
    }
    if out.status == PlanStatus::NotConverged {
        eprintln!("stopped before convergence; bounds above are the best known");
        return Ok(EXIT_NOT_CONVERGED);
    }
    Ok(0)
}

fn report(a: &ReportArgs) -> Result<u8, Error> {
    let doc = read_solution(&a.solution)?;
    let (sys, milp) = rebuild(&a.instance, &doc)?;
    let r = PlanReport::new(&sys, &milp, &doc)?;
    let rows = dispatch_stack(&sys, &milp, &doc, a.stage)?;
    fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    write(&a.out_dir.join("report.json"), &r.to_json()?)?;
    write(&a.out_dir.join("plan.txt"), &r.render_table())?;
    write(&a.out_dir.join("shares.csv"), &r.shares_csv())?;
    write(&a.out_dir.join("trajectory.csv"), &r.trajectory_csv())?;
    write(&a.out_dir.join("dispatch.csv"), &dispatch_csv(&rows))?;
    print!("{}", r.trajectory_csv());
    Ok(0)
}

fn export(a: &ExportArgs) -> Result<u8, Error> {
    let sys = a.instance.load()?;
    let milp = build_milp(&sys, &a.model.options())?;
    write(&a.out, &milp.to_mps(&sys.name))?;
    println!("variables {} rows {} binaries {}", milp.num_vars(), milp.num_rows(), milp.binaries().len());
    Ok(0)
}

fn check(a: &CheckArgs) -> Result<u8, Error> {
    let doc = read_solution(&a.solution)?;
    let (sys, milp) = rebuild(&a.instance, &doc)?;
    let x = doc.values_for(&milp)?;
    let v = check_solution(&sys, &milp, &x, a.tol);
    for x in &v {
        println!("{x}");
    }
    println!("violations {}", v.len());
    Ok(if v.is_empty() { 0 } else { EXIT_VALIDATION })
}

fn generate(a: &GenerateArgs) -> Result<u8, Error> {
    save_system(&corpus::generate(a.seed_instance), &a.out)?;
    Ok(0)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Infeasible(_) => EXIT_INFEASIBLE,
        Error::Numerical(_) | Error::Consistency(_) => EXIT_FAILURE,
        _ => EXIT_VALIDATION,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match &cli.command {
        Command::Cluster(a) => cluster(a),
        Command::Solve(a) => run_solve(a),
        Command::Report(a) => report(a),
        Command::ExportMilp(a) => export(a),
        Command::Check(a) => check(a),
        Command::Generate(a) => generate(a),
    };
    match r {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
