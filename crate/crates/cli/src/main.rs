use clap::{Args, Parser, Subcommand};
use conjloc_cli::config::JobConfig;
use conjloc_cli::{runs, verify};
use std::path::PathBuf;
use std::process::ExitCode;

/// Evolutes of plane curves and conjugate loci on convex surfaces.
#[derive(Parser)]
#[command(name = "conjloc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct JobArgs {
    /// Job configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Override the psi sample count.
    #[arg(long)]
    samples: Option<usize>,
    /// Override the count-field grid resolution.
    #[arg(long)]
    grid: Option<usize>,
    /// Override the conjugate order j.
    #[arg(long)]
    order: Option<usize>,
    /// Fail (exit 2) on non-generic inputs instead of warning.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Evolute of a plane oval or named curve family.
    Evolute(JobArgs),
    /// Conjugate locus of a base point on a convex surface.
    Conjugate(JobArgs),
    /// Count field over the projection plane with its region report.
    CountMap(JobArgs),
    /// Run the verification suites.
    Verify {
        /// Suite: planar, surface, conjugate, or all.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Directory for the machine-readable report.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn load_config(args: &JobArgs) -> Result<JobConfig, runs::RunError> {
    let mut cfg = JobConfig::load(&args.config).map_err(runs::RunError::Config)?;
    if args.samples.is_some() {
        cfg.samples = args.samples;
    }
    if args.grid.is_some() {
        cfg.grid = args.grid;
    }
    if args.order.is_some() {
        cfg.order = args.order;
    }
    if args.strict {
        cfg.strict = Some(true);
    }
    cfg.validate().map_err(runs::RunError::Config)?;
    Ok(cfg)
}

fn run_job(
    args: &JobArgs,
    f: impl Fn(&JobConfig, &std::path::Path) -> Result<String, runs::RunError>,
) -> ExitCode {
    let go = || -> Result<String, runs::RunError> {
        let cfg = load_config(args)?;
        std::fs::create_dir_all(&args.out)
            .map_err(|e| runs::RunError::Config(anyhow::anyhow!(e)))?;
        f(&cfg, &args.out)
    };
    match go() {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    // CONJLOC_THREADS caps worker parallelism.
    if let Ok(v) = std::env::var("CONJLOC_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }

    let cli = Cli::parse();
    match &cli.command {
        Command::Evolute(args) => run_job(args, runs::run_evolute),
        Command::Conjugate(args) => run_job(args, runs::run_conjugate),
        Command::CountMap(args) => run_job(args, runs::run_count_map),
        Command::Verify { suite, out } => match verify::run_suite(suite, Some(out)) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::FAILURE,
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::FAILURE
            }
        },
    }
}
