use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use quench_cli::run::{CONFIG_ECHO, PREP_SNAPSHOT};
use quench_cli::{load_config, prepare_state, resolve_output, run_experiment, CliError, ExperimentConfig, EXIT_OK, OUTPUT_ROOT_ENV};

#[derive(Parser)]
#[command(name = "quench", version, about = "TDVP quench dynamics of RBM wave functions")]
struct Cli {
    /// Root for output directories when neither --output nor output.directory is given.
    #[arg(long, global = true, env = OUTPUT_ROOT_ENV, default_value = "runs")]
    output_root: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prepare the initial state, then run the dynamics for every sweep point.
    Run(RunArgs),
    /// Prepare the initial state only.
    Prep(RunArgs),
    /// Check a config and print its effective form.
    Validate { config: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Replace every seed in the config.
    #[arg(long)]
    seed_override: Option<u64>,
}

fn setup(args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be ≥ 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed_override {
        cfg.override_seed(seed);
    }
    Ok(cfg)
}

fn run(args: &RunArgs, root: &Path) -> Result<i32, CliError> {
    let cfg = setup(args)?;
    let out = resolve_output(args.output.as_deref(), &cfg, root, &args.config);
    let summary = run_experiment(&cfg, &out)?;
    if let Some(i) = summary.prep_infidelity {
        eprintln!("prep: infidelity {i:.3e}");
    }
    for p in &summary.points {
        eprint!(
            "{} [{}]: {} at step {} (t = {})",
            p.directory.display(),
            p.label,
            p.status.as_str(),
            p.terminal_step,
            p.terminal_time
        );
        match &p.message {
            Some(m) => eprintln!(": {m}"),
            None => eprintln!(),
        }
    }
    Ok(summary.exit_code())
}

fn prep(args: &RunArgs, root: &Path) -> Result<i32, CliError> {
    let mut cfg = setup(args)?;
    cfg.rbm.snapshot = None;
    cfg.prep.enabled = true;
    cfg.validate()?;
    let out = resolve_output(args.output.as_deref(), &cfg, root, &args.config);
    std::fs::create_dir_all(&out).map_err(|e| CliError::Io(format!("cannot create output directory {}: {e}", out.display())))?;
    std::fs::write(out.join(CONFIG_ECHO), cfg.to_toml())?;
    let result = prepare_state(&cfg, &out)?;
    println!(
        "infidelity {:.6e} after {} iterations; snapshot {}",
        result.final_infidelity.unwrap_or(f64::NAN),
        result.iterations_used,
        out.join(PREP_SNAPSHOT).display()
    );
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args, &cli.output_root),
        Command::Prep(args) => prep(args, &cli.output_root),
        Command::Validate { config } => load_config(config).map(|cfg| {
            print!("{}", cfg.to_toml());
            EXIT_OK
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
