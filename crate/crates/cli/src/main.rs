//! `frobforge`: runs the verification suites and demos and writes canonical
//! JSON/CSV reports. Exit codes: 0 all checks pass, 1 a check failed, 2 bad input.

mod config;
mod error;
mod report;
mod suites;

use std::path::PathBuf;
use std::process::ExitCode;
use std::thread;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use frobforge_core::cones::GroundField;

use config::{GlobalFlags, OutputFormat, RunConfig, SEED_ENV};
use error::CliError;
use report::Report;
use suites::cone::FieldArg;
use suites::kvn::EvolveParams;
use suites::ot::OtParams;

#[derive(Debug, Parser)]
#[command(name = "frobforge", version, about = "Hessian, cone, transport, BHK and KvN verification suites")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// RNG seed (default: $FROBFORGE_SEED, then the config file, then 42).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for reports; without it the JSON report goes to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    /// `key = value` file mirroring the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Tolerance override `check.name=value`; repeatable.
    #[arg(long, global = true, value_name = "NAME=VALUE")]
    tol: Vec<String>,
    /// Record wall time in reports (breaks byte-identical output).
    #[arg(long, global = true)]
    timing: bool,
    /// Run the suites of `all` concurrently.
    #[arg(long, global = true)]
    parallel: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Pairing, WDVV-flatness equivalence and Levi-Civita checks on the built-in potentials.
    Hessian {
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Flat locus, curvature and Jordan checks on a cone of positive matrices.
    Cone {
        #[arg(long)]
        field: Option<FieldArg>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Monge–Ampère solver on a manufactured solution.
    Ma {
        /// Intervals per side of the coarse grid; the fine grid doubles it.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Optimal transport: LP vs Sinkhorn, configuration matching, Gaussian Brenier map.
    Ot {
        #[arg(long)]
        instances: Option<usize>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Invertible polynomials and their mirrors.
    Bhk {
        #[command(subcommand)]
        command: BhkCommand,
    },
    /// Koopman–von Neumann evolution and the mirror transport demo.
    Kvn {
        #[command(subcommand)]
        command: KvnCommand,
    },
    /// Every suite at smoke-tier sizes.
    All,
}

#[derive(Debug, Subcommand)]
enum BhkCommand {
    /// Weights, Calabi–Yau condition, atoms, transpose and Aut(W).
    Analyze { polynomial: String },
    /// Dual group of the subgroup generated by `--group "a/b,c/d;..."`.
    Dual {
        polynomial: String,
        #[arg(long)]
        group: Option<String>,
    },
    /// Exact-arithmetic examples and random exponent matrices.
    Check,
}

#[derive(Debug, Subcommand)]
enum KvnCommand {
    /// Evolve a wave packet and write density snapshots.
    Evolve {
        #[arg(long = "H", value_name = "harmonic|pendulum")]
        hamiltonian: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        t: Option<f64>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        snapshots: Option<usize>,
    },
    /// Transport between the density projections of `W` and its transpose.
    MirrorDemo {
        polynomial: String,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Torus invariance, harmonic closed form and pendulum conservation.
    Check {
        /// Pendulum grid size.
        #[arg(long)]
        grid: Option<usize>,
    },
}

type Job<'a> = Box<dyn Fn() -> Result<Report, CliError> + Send + Sync + 'a>;

fn timed(cfg: &RunConfig, job: impl Fn() -> Result<Report, CliError>) -> Result<Report, CliError> {
    let start = Instant::now();
    let mut r = job()?;
    if cfg.timing {
        r.wall_time = Some(start.elapsed().as_secs_f64());
    }
    Ok(r)
}

fn single(cfg: &RunConfig, command: &Command) -> Result<Report, CliError> {
    match command {
        Command::Hessian { samples } => {
            let samples = cfg.pick("samples", *samples, 5)?;
            timed(cfg, || suites::hessian::run(cfg, samples))
        }
        Command::Cone { field, n, samples } => {
            let field = cfg.pick("field", *field, FieldArg(GroundField::R))?.0;
            let n = cfg.pick("n", *n, 3)?;
            let samples = cfg.pick("samples", *samples, 20)?;
            timed(cfg, || suites::cone::run(cfg, field, n, samples))
        }
        Command::Ma { grid } => {
            let grid = cfg.pick("grid", *grid, 32)?;
            timed(cfg, || suites::ma::run(cfg, grid))
        }
        Command::Ot { instances, points, grid } => {
            let params = OtParams {
                instances: cfg.pick("instances", *instances, 50)?,
                points: cfg.pick("points", *points, 6)?,
                grid: cfg.pick("grid", *grid, 64)?,
            };
            timed(cfg, || suites::ot::run(cfg, params))
        }
        Command::Bhk { command } => match command {
            BhkCommand::Analyze { polynomial } => timed(cfg, || suites::bhk::analyze_suite(cfg, polynomial)),
            BhkCommand::Dual { polynomial, group } => {
                let group: String = cfg.pick_required("group", group.clone())?;
                timed(cfg, || suites::bhk::dual_suite(cfg, polynomial, &group))
            }
            BhkCommand::Check => timed(cfg, || suites::bhk::check_suite(cfg)),
        },
        Command::Kvn { command } => match command {
            KvnCommand::Evolve { hamiltonian, t, grid, snapshots } => {
                let hamiltonian: String = cfg.pick("H", hamiltonian.clone(), "harmonic".into())?;
                let params = EvolveParams {
                    hamiltonian: &hamiltonian,
                    t: cfg.pick_required("t", *t)?,
                    grid: cfg.pick("grid", *grid, 256)?,
                    snapshots: cfg.pick("snapshots", *snapshots, 1)?,
                };
                timed(cfg, || suites::kvn::evolve_suite(cfg, params))
            }
            KvnCommand::MirrorDemo { polynomial, samples, bins } => {
                let samples = cfg.pick("samples", *samples, 200)?;
                let bins = cfg.pick("bins", *bins, 32)?;
                timed(cfg, || suites::kvn::mirror_suite(cfg, polynomial, samples, bins))
            }
            KvnCommand::Check { grid } => {
                let grid = cfg.pick("grid", *grid, 256)?;
                timed(cfg, || suites::kvn::check_suite(cfg, grid))
            }
        },
        Command::All => unreachable!("handled by run_all"),
    }
}

/// Smoke tier: every suite at reduced sample counts.
fn smoke_jobs(cfg: &RunConfig) -> Vec<Job<'_>> {
    vec![
        Box::new(move || timed(cfg, || suites::hessian::run(cfg, 2))),
        Box::new(move || timed(cfg, || suites::cone::run(cfg, GroundField::R, 3, 10))),
        Box::new(move || timed(cfg, || suites::ma::run(cfg, 32))),
        Box::new(move || {
            timed(cfg, || suites::ot::run(cfg, OtParams { instances: 10, points: 6, grid: 64 }))
        }),
        Box::new(move || timed(cfg, || suites::bhk::check_suite(cfg))),
        Box::new(move || timed(cfg, || suites::kvn::check_suite(cfg, 256))),
        Box::new(move || timed(cfg, || suites::kvn::mirror_suite(cfg, "x1^2*x2+x2^2", 100, 32))),
    ]
}

/// Reports are emitted in suite order after all jobs finish, so output never interleaves.
fn run_all(cfg: &RunConfig) -> Result<bool, CliError> {
    let jobs = smoke_jobs(cfg);
    let results: Vec<Result<Report, CliError>> = if cfg.parallel {
        thread::scope(|s| {
            let handles: Vec<_> = jobs.iter().map(|job| s.spawn(move || job())).collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|_| Err(CliError::Compute("suite panicked".into()))))
                .collect()
        })
    } else {
        jobs.iter().map(|job| job()).collect()
    };
    let mut passed = true;
    let mut first_err = None;
    for r in results {
        match r {
            Ok(report) => {
                report.emit(cfg)?;
                passed &= report.passed();
            }
            Err(e) => {
                eprintln!("error: {e}");
                first_err.get_or_insert(e);
            }
        }
    }
    match first_err {
        Some(e) => Err(e),
        None => Ok(passed),
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let g = cli.global;
    let flags = GlobalFlags {
        seed: g.seed,
        out: g.out,
        format: g.format,
        config: g.config,
        tol: g.tol,
        timing: g.timing,
        parallel: g.parallel,
    };
    let cfg = RunConfig::resolve(&flags, std::env::var(SEED_ENV).ok())?;
    if let Command::All = cli.command {
        return run_all(&cfg);
    }
    let report = single(&cfg, &cli.command)?;
    report.emit(&cfg)?;
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
