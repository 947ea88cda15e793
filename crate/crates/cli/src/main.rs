use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use admeq::equivalence::{run_lockstep_with, suite_entries, EquivalenceReport, IterateMap, LockstepOptions};
use admeq::instances::{
    read_csv_grid, read_pgm, BpForm, BpStepper, BpdnForm, BpdnStepper, Family, Instance, InstanceSpec, TvAlgorithm,
    TvStepper,
};
use admeq::formulations::AdmProblem;
use admeq::prox::{norm2, Boundary, Vector};
use admeq::solvers::{
    run, AdmAlgorithm, AdmStepper, MixedOrderStepper, SolverConfig, SolverState, Stepper, ThreeBlockDualStepper,
    ThreeBlockPrimalStepper, Trace,
};
use admeq::Error;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

const EXIT_ERROR: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;
const EXIT_MAP_FAILED: u8 = 3;

const ALGORITHMS: [&str; 9] = ["alg1", "alg2", "alg3", "alg4", "alg5", "rprs", "tb-primal", "tb-dual", "mixed"];

#[derive(Parser)]
#[command(name = "admeq", version, about = "ADM-family solvers and lockstep equivalence checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm and write its trace.
    Solve(SolveArgs),
    /// Check one iterate map in lockstep.
    Verify(VerifyArgs),
    /// Check every registered map on its canonical instance.
    Suite(SuiteArgs),
}

#[derive(Args, Clone)]
struct InstanceArgs {
    /// bp, bpdn, tv or three-block.
    #[arg(long, default_value = "bpdn")]
    instance: String,
    #[command(flatten)]
    shape: ShapeArgs,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    /// alg1..alg5, rprs, tb-primal, tb-dual or mixed (alg1 and alg5 alternating).
    #[arg(long, default_value = "alg1")]
    algo: String,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// RPRS relaxation (1/2 Douglas-Rachford, 1 Peaceman-Rachford).
    #[arg(long, default_value_t = 0.5)]
    relax: f64,
    #[arg(long, default_value_t = 100)]
    iters: usize,
    /// Stop once the primal residual is at most this.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Directory for trace.csv and summary.json; the trace goes to stdout without it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    pair: String,
    /// Defaults to the pair's canonical family.
    #[arg(long)]
    instance: Option<String>,
    #[command(flatten)]
    shape: ShapeArgs,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0.5)]
    relax: f64,
    #[arg(long, default_value_t = 100)]
    iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Seed of the random matched initialization.
    #[arg(long, default_value_t = 1)]
    init_seed: u64,
    /// Added to one required initial quantity (negative control).
    #[arg(long, default_value_t = 0.0)]
    perturb_init: f64,
    /// Report path; stdout without it.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Overrides of the canonical instance of a family.
#[derive(Args, Clone)]
struct ShapeArgs {
    /// Rows of A (image height for tv).
    #[arg(long)]
    m: Option<usize>,
    /// Columns of A (image width for tv).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Data-term weight of bpdn and tv.
    #[arg(long)]
    alpha: Option<f64>,
    /// l1 weight of the three-block instance.
    #[arg(long)]
    kappa: Option<f64>,
    /// Coupling scalar of the three-block instance.
    #[arg(long)]
    mu: Option<f64>,
    /// PGM (P2/P5) or CSV image for tv.
    #[arg(long)]
    image: Option<PathBuf>,
    /// periodic or neumann.
    #[arg(long, default_value = "periodic")]
    boundary: String,
}

#[derive(Args)]
struct SuiteArgs {
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 0.5)]
    relax: f64,
    #[arg(long, default_value_t = 100)]
    iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Writes all reports as a JSON array.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: EXIT_ERROR,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure {
            code: EXIT_ERROR,
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure {
            code: EXIT_ERROR,
            message: e.to_string(),
        }
    }
}

fn fail(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_ERROR,
        message: message.into(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Suite(a) => cmd_suite(&a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn instance_spec(family: &str, s: &ShapeArgs) -> Result<InstanceSpec, Failure> {
    let family = Family::parse(family).ok_or_else(|| fail(format!("unknown instance '{family}'")))?;
    let mut spec = InstanceSpec::canonical(family);
    if let Some(v) = s.m {
        spec.m = v;
    }
    if let Some(v) = s.n {
        spec.n = v;
    }
    if let Some(v) = s.seed {
        spec.seed = v;
    }
    if let Some(v) = s.alpha {
        spec.alpha = v;
    }
    if let Some(v) = s.kappa {
        spec.kappa = v;
    }
    if let Some(v) = s.mu {
        spec.mu = v;
    }
    spec.boundary = match s.boundary.as_str() {
        "periodic" => Boundary::Periodic,
        "neumann" => Boundary::Neumann,
        other => return Err(fail(format!("unknown boundary '{other}'"))),
    };
    if let Some(path) = &s.image {
        if family != Family::Tv {
            return Err(fail("--image applies to the tv instance only"));
        }
        let img = read_image(path)?;
        spec.m = img.nrows();
        spec.n = img.ncols();
        spec.image = Some(img);
    }
    Ok(spec)
}

fn read_image(path: &Path) -> Result<ndarray::Array2<f64>, Failure> {
    let bytes = fs::read(path).map_err(|e| fail(format!("{}: {e}", path.display())))?;
    let pgm = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    let parsed = if pgm {
        read_pgm(&bytes)
    } else {
        let text = String::from_utf8(bytes).map_err(|_| fail(format!("{}: not UTF-8 text", path.display())))?;
        read_csv_grid(&text)
    };
    parsed.map_err(|e| fail(format!("{}: {e}", path.display())))
}

type Built = (Box<dyn Stepper>, SolverState);

fn generic(problem: AdmProblem, algo: &str) -> Result<Built, Error> {
    let alg = match algo {
        "alg1" | "mixed" => AdmAlgorithm::Alg1,
        "alg2" => AdmAlgorithm::Alg2,
        "alg3" => AdmAlgorithm::Alg3,
        "alg4" => AdmAlgorithm::Alg4,
        _ => AdmAlgorithm::Alg5,
    };
    let stepper = AdmStepper::new(problem, alg)?;
    let init = stepper.zero_init();
    if algo == "mixed" {
        return Ok((Box::new(MixedOrderStepper { inner: stepper }), init));
    }
    Ok((Box::new(stepper), init))
}

/// Closed-form iterations where the instance has them, the generic steppers otherwise.
fn build_stepper(inst: &Instance, algo: &str) -> Result<Built, Error> {
    if algo == "rprs" {
        let s = inst.composite()?.primal_stepper()?;
        let init = s.init(Vector::zeros(s.f.dim()));
        return Ok((Box::new(s), init));
    }
    match (inst, algo) {
        (Instance::Bp(bp), "alg1" | "alg2" | "alg3") => {
            let form = match algo {
                "alg1" => BpForm::Dual,
                "alg2" => BpForm::Memoized,
                _ => BpForm::Primal,
            };
            let s = BpStepper::new(bp.clone(), form);
            let init = s.zero_init();
            Ok((Box::new(s), init))
        }
        (Instance::Bp(bp), "alg4" | "alg5" | "mixed") => generic(bp.dual_split()?, algo),
        (Instance::Bpdn(b), "alg1" | "alg2" | "alg3") => {
            let form = match algo {
                "alg1" => BpdnForm::Dual,
                "alg2" if b.orthonormal => BpdnForm::Orthonormal,
                "alg2" => BpdnForm::Memoized,
                _ => BpdnForm::Primal,
            };
            let s = BpdnStepper::new(b.clone(), form)?;
            let init = s.zero_init();
            Ok((Box::new(s), init))
        }
        (Instance::Bpdn(b), "alg4" | "alg5" | "mixed") => generic(b.dual_split()?, algo),
        (Instance::Tv(tv), "alg1" | "alg3" | "alg4" | "alg5") => {
            let a = match algo {
                "alg1" => TvAlgorithm::Primal,
                "alg3" => TvAlgorithm::Dual,
                "alg4" => TvAlgorithm::PrimalDual,
                _ => TvAlgorithm::Swapped,
            };
            let s = TvStepper::new(tv.clone(), a, tv.preferred_solve());
            let init = s.zero_init();
            Ok((Box::new(s), init))
        }
        (Instance::Tv(tv), "alg2" | "mixed") => generic(tv.adm_problem()?, algo),
        (Instance::ThreeBlock(p), "tb-primal") => {
            let s = ThreeBlockPrimalStepper::new(p.clone());
            let init = s.zero_init();
            Ok((Box::new(s), init))
        }
        (Instance::ThreeBlock(p), "tb-dual") => {
            let s = ThreeBlockDualStepper::new(p.clone());
            let init = s.zero_init();
            Ok((Box::new(s), init))
        }
        _ => Err(inst.incompatible(&format!("algorithm '{algo}'"))),
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn trace_csv(trace: &Trace) -> String {
    let mut out = String::from("k,objective,primal_residual,change,combined_residual");
    let names: Vec<&str> = trace.entries[0].state.iterates.named().iter().map(|(n, _)| *n).collect();
    for n in &names {
        out.push_str(&format!(",norm_{n}"));
    }
    out.push('\n');
    for e in &trace.entries {
        out.push_str(&e.k.to_string());
        out.push(',');
        out.push_str(&e.objective.map(num).unwrap_or_default());
        for v in [e.primal_residual, e.change, e.combined_residual()] {
            out.push(',');
            out.push_str(&num(v));
        }
        for (_, v) in e.state.iterates.named() {
            out.push(',');
            out.push_str(&num(norm2(v)));
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct Summary {
    stepper: String,
    instance: String,
    iterations: usize,
    converged: bool,
    final_objective: Option<f64>,
    final_primal_residual: f64,
    wall_time_seconds: f64,
    blowup: Option<String>,
}

fn cmd_solve(a: &SolveArgs) -> Result<u8, Failure> {
    if !ALGORITHMS.contains(&a.algo.as_str()) {
        return Err(fail(format!("unknown algorithm '{}'", a.algo)));
    }
    let inst = instance_spec(&a.inst.instance, &a.inst.shape)?.build()?;
    let (stepper, init) = build_stepper(&inst, &a.algo)?;
    let cfg = SolverConfig::default()
        .with_lambda(a.lambda)
        .with_alpha(a.relax)
        .with_max_iter(a.iters)
        .with_stop_tol(a.tol);
    let started = Instant::now();
    let trace = run(stepper.as_ref(), init, &cfg)?;
    let elapsed = started.elapsed().as_secs_f64();
    let last = trace.last();
    let summary = Summary {
        stepper: trace.stepper.clone(),
        instance: inst.tag().to_string(),
        iterations: trace.iterations(),
        converged: trace.converged,
        final_objective: last.objective,
        final_primal_residual: last.primal_residual,
        wall_time_seconds: elapsed,
        blowup: trace.blowup.clone(),
    };
    let csv = trace_csv(&trace);
    let json = serde_json::to_string_pretty(&summary)?;
    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("trace.csv"), csv)?;
            fs::write(dir.join("summary.json"), json + "\n")?;
        }
        None => {
            io::stdout().write_all(csv.as_bytes())?;
            eprintln!("{json}");
        }
    }
    if let Some(why) = &trace.blowup {
        return Err(fail(format!("numerical blow-up: {why}")));
    }
    Ok(if trace.converged { 0 } else { EXIT_NOT_CONVERGED })
}

fn lockstep_config(lambda: f64, relax: f64, iters: usize) -> SolverConfig {
    SolverConfig::default()
        .with_lambda(lambda)
        .with_alpha(relax)
        .with_max_iter(iters)
}

fn cmd_verify(a: &VerifyArgs) -> Result<u8, Failure> {
    let pair = IterateMap::parse(&a.pair).ok_or_else(|| {
        let known: Vec<_> = IterateMap::ALL.iter().map(|p| p.name()).collect();
        fail(format!("unknown pair '{}' (known: {})", a.pair, known.join(", ")))
    })?;
    let family = a.instance.clone().unwrap_or_else(|| pair.canonical_family().tag().to_string());
    let inst = instance_spec(&family, &a.shape)?.build()?;
    let cfg = lockstep_config(a.lambda, a.relax, a.iters);
    let opts = LockstepOptions {
        seed: a.init_seed,
        perturb: a.perturb_init,
    };
    let report = run_lockstep_with(pair, &inst, &cfg, a.tol, opts)?;
    let json = serde_json::to_string_pretty(&report)? + "\n";
    match &a.out {
        Some(path) => fs::write(path, json)?,
        None => io::stdout().write_all(json.as_bytes())?,
    }
    Ok(if report.pass { 0 } else { EXIT_MAP_FAILED })
}

fn thread_cap() -> usize {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    std::env::var("ADMEQ_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|n| *n > 0)
        .map_or(available, |n| n.min(available))
}

fn cmd_suite(a: &SuiteArgs) -> Result<u8, Failure> {
    let cfg = lockstep_config(a.lambda, a.relax, a.iters);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_cap())
        .build()
        .map_err(|e| fail(e.to_string()))?;
    let entries = suite_entries();
    let results: Vec<(IterateMap, Family, Result<EquivalenceReport, Error>)> = pool.install(|| {
        entries
            .par_iter()
            .map(|(pair, family)| {
                let report = InstanceSpec::canonical(*family)
                    .build()
                    .and_then(|inst| run_lockstep_with(*pair, &inst, &cfg, a.tol, LockstepOptions::default()));
                (*pair, *family, report)
            })
            .collect()
    });
    println!("{:<18} {:<12} {:>24}  result", "pair", "instance", "max deviation");
    let mut all_pass = true;
    let mut reports = Vec::new();
    for (pair, family, r) in results {
        match r {
            Ok(rep) => {
                all_pass &= rep.pass;
                let verdict = if rep.pass { "PASS" } else { "FAIL" };
                println!("{:<18} {:<12} {:>24}  {verdict}", pair.name(), family.tag(), num(rep.max_deviation));
                reports.push(rep);
            }
            Err(e) => {
                all_pass = false;
                println!("{:<18} {:<12} {:>24}  FAIL ({e})", pair.name(), family.tag(), "-");
            }
        }
    }
    if let Some(path) = &a.out {
        fs::write(path, serde_json::to_string_pretty(&reports)? + "\n")?;
    }
    Ok(if all_pass { 0 } else { EXIT_MAP_FAILED })
}
