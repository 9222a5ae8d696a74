use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use microsearch_core::geometry::{generate, CONDITIONING_DIM};
use microsearch_core::homogenize::evaluate_properties;
use microsearch_core::pipeline::{
    load_results, run_benchmark, write_aggregate, SweepConfig, REPORT_TXT,
};
use microsearch_core::task::{load_task, load_tasks};
use microsearch_core::{ConditioningVector, Error, Method, SeedLibrary, SolverConfig, VoxelGrid};

/// Inverse microstructure design by simulation-aware evolutionary search.
#[derive(Parser)]
#[command(name = "microsearch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark sweep over tasks, methods and seeds.
    Run(RunArgs),
    /// Simulate one design and print its properties as JSON.
    Simulate(SimulateArgs),
    /// Write the voxel grid of a conditioning vector.
    Gen(GenArgs),
    /// Re-aggregate the results of an existing sweep.
    Report(ReportArgs),
    /// Rebuild the retrieval seed library.
    Seeds(SeedsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Args)]
struct RunArgs {
    /// Task file or directory of task files.
    #[arg(long, env = "MICROSEARCH_TASKS")]
    tasks: PathBuf,
    #[arg(long, env = "MICROSEARCH_METHODS", value_delimiter = ',', default_value = "saes,nsga2,random", value_parser = parse_method)]
    methods: Vec<Method>,
    #[arg(
        long,
        env = "MICROSEARCH_SEEDS",
        value_delimiter = ',',
        default_value = "0,1,2,3"
    )]
    seeds: Vec<u64>,
    #[arg(long, env = "MICROSEARCH_RESOLUTION", default_value_t = 16)]
    resolution: usize,
    #[arg(long, env = "MICROSEARCH_OUT", default_value = "out")]
    out: PathBuf,
    #[arg(long, env = "MICROSEARCH_WORKERS", default_value_t = 1)]
    workers: usize,
    #[arg(long, env = "MICROSEARCH_MOMENTUM", value_enum, default_value = "on")]
    momentum: Toggle,
    /// Also write per-run wall-clock sidecars.
    #[arg(long, env = "MICROSEARCH_TIMING")]
    timing: bool,
    /// Seed library to use instead of the bundled one.
    #[arg(long, env = "MICROSEARCH_LIBRARY")]
    library: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    task: PathBuf,
    /// Conditioning vector, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        conflicts_with = "grid",
        required_unless_present = "grid"
    )]
    coords: Option<Vec<f64>>,
    /// Voxel grid file written by `gen`.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long, env = "MICROSEARCH_RESOLUTION", default_value_t = 16)]
    resolution: usize,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    coords: Vec<f64>,
    #[arg(long, env = "MICROSEARCH_RESOLUTION", default_value_t = 16)]
    resolution: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Sweep output directory.
    #[arg(long, env = "MICROSEARCH_OUT", default_value = "out")]
    dir: PathBuf,
}

#[derive(Args)]
struct SeedsArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 5)]
    per_axis: usize,
    #[arg(long, default_value_t = 16)]
    resolution: usize,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn conditioning(coords: &[f64]) -> anyhow::Result<ConditioningVector> {
    if coords.len() != CONDITIONING_DIM {
        return Err(Error::DimensionMismatch {
            expected: CONDITIONING_DIM,
            actual: coords.len(),
        }
        .into());
    }
    Ok(ConditioningVector::new(coords.to_vec()))
}

fn check_resolution(n: usize) -> anyhow::Result<()> {
    if n < microsearch_core::geometry::MIN_RESOLUTION {
        return Err(Error::Config(format!("resolution {n} is below the minimum")).into());
    }
    Ok(())
}

fn run(args: RunArgs) -> anyhow::Result<()> {
    let tasks = load_tasks(&args.tasks)?;
    if tasks.is_empty() {
        return Err(Error::Config(format!("no task files in {}", args.tasks.display())).into());
    }
    let library = match &args.library {
        Some(p) => SeedLibrary::load(p)?,
        None => SeedLibrary::bundled(),
    };
    let cfg = SweepConfig {
        methods: args.methods,
        seeds: args.seeds,
        resolution: args.resolution,
        workers: args.workers,
        momentum: matches!(args.momentum, Toggle::On),
        record_time: args.timing,
        ..SweepConfig::new(&args.out)
    };
    let runs = run_benchmark(&tasks, &cfg, &library)?;
    let solved = runs.iter().filter(|(r, _)| r.summary.success).count();
    eprintln!(
        "{} runs written to {} ({solved} successful)",
        runs.len(),
        args.out.display()
    );
    print!("{}", std::fs::read_to_string(args.out.join(REPORT_TXT))?);
    Ok(())
}

fn simulate(args: SimulateArgs) -> anyhow::Result<()> {
    let spec = load_task(&args.task)?;
    let grid = match (&args.grid, &args.coords) {
        (Some(path), _) => VoxelGrid::read_from(BufReader::new(File::open(path)?))?,
        (None, Some(c)) => {
            check_resolution(args.resolution)?;
            generate(&conditioning(c)?, args.resolution)
        }
        (None, None) => bail!("either --coords or --grid is required"),
    };
    let sim = evaluate_properties(&grid, &spec, &SolverConfig::default())?;
    println!("{}", serde_json::to_string_pretty(&sim)?);
    Ok(())
}

fn gen(args: GenArgs) -> anyhow::Result<()> {
    check_resolution(args.resolution)?;
    let grid = generate(&conditioning(&args.coords)?, args.resolution);
    let file =
        File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    grid.write_to(BufWriter::new(file))?;
    println!(
        "n {}  volume_fraction {:.6}  connected {}",
        grid.resolution(),
        grid.volume_fraction(),
        grid.is_connected()
    );
    Ok(())
}

fn report(args: ReportArgs) -> anyhow::Result<()> {
    let runs = load_results(&args.dir)?;
    if runs.is_empty() {
        return Err(Error::Config(format!("no results under {}", args.dir.display())).into());
    }
    write_aggregate(&args.dir, &runs)?;
    print!("{}", std::fs::read_to_string(args.dir.join(REPORT_TXT))?);
    Ok(())
}

fn seeds(args: SeedsArgs) -> anyhow::Result<()> {
    check_resolution(args.resolution)?;
    let lib = SeedLibrary::build(args.per_axis, args.resolution, &SolverConfig::default())?;
    lib.save(&args.out)?;
    eprintln!("{} entries written to {}", lib.len(), args.out.display());
    Ok(())
}

/// 2 for configuration faults, 3 for I/O faults, 1 for simulation faults.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 3;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Io(_) => 3,
                Error::NonConvergence { .. }
                | Error::SingularTensor { .. }
                | Error::ReturnMapping(_) => 1,
                _ => 2,
            };
        }
    }
    2
}

fn dispatch(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Run(a) => run(a),
        Command::Simulate(a) => simulate(a),
        Command::Gen(a) => gen(a),
        Command::Report(a) => report(a),
        Command::Seeds(a) => seeds(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
