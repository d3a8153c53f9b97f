use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use perilimit_cli::{report, run, RunConfig, RunError, Task, EXIT_CONFIG, EXIT_EXECUTION};

/// Local limits of peridynamic energies: quadrature checks, blow-up limits,
/// recoverability, rank-one envelopes, horizon convergence.
///
/// Exit codes: 0 pass, 2 fail or violated, 1 execution error, 64 invalid config.
#[derive(Debug, Parser)]
#[command(name = "perilimit", version)]
struct Args {
    /// Config file, TOML or JSON (by `.json` extension).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Task to run; overrides the config.
    #[arg(long, value_enum)]
    task: Option<Task>,
    /// Report directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for random test matrices, directions and rotations.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 lets the runtime decide.
    #[arg(long)]
    threads: Option<usize>,
    /// Sphere-rule order: 2·N points on S¹, N × 2·N on S².
    #[arg(long)]
    quad_order: Option<usize>,
    /// Leave the timestamp out of summary.json.
    #[arg(long)]
    no_timestamp: bool,
    /// Print the built-in potentials, densities and profiles, then exit.
    #[arg(long)]
    list_zoo: bool,
}

fn resolve(args: &Args) -> Result<RunConfig, String> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p).map_err(|e| e.0)?,
        None => RunConfig::default(),
    };
    if let Some(t) = args.task {
        cfg.task = t;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(t) = args.threads {
        cfg.threads = t;
    }
    if let Some(q) = args.quad_order {
        cfg.quad_order = q;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if args.list_zoo {
        print!("{}", report::zoo_text());
        return ExitCode::SUCCESS;
    }
    let cfg = match resolve(&args) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("perilimit: {msg}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if cfg.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global() {
            eprintln!("perilimit: cannot configure threads: {e}");
            return ExitCode::from(EXIT_EXECUTION);
        }
    }
    let outcome = match run(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("perilimit: {e}");
            return ExitCode::from(match e {
                RunError::Config(_) => EXIT_CONFIG,
                RunError::Execution(_) => EXIT_EXECUTION,
            });
        }
    };
    if let Err(e) = report::write_reports(&args.out, &cfg, &outcome, !args.no_timestamp) {
        eprintln!("perilimit: {e:#}");
        return ExitCode::from(EXIT_EXECUTION);
    }
    if let run::Status::Diverged(msg) = &outcome.status {
        eprintln!("perilimit: {msg}");
    }
    println!("{}: {} ({})", cfg.task.as_str(), outcome.verdict, outcome.status.as_str());
    ExitCode::from(outcome.status.exit_code())
}
