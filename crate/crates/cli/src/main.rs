//! `odbss` command-line interface: subsampling from CSV data, standalone
//! optimal-design computation, and the simulation benchmark harness.

mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;

use odbss::clustering::SpaceSource;
use odbss::design::{criterion_value, info_matrix, optimize_design, Criterion};
use odbss::distances::Metric;
use odbss::experiment::{
    read_rows, run_experiment, summarize, write_subsample, write_summary, ExperimentConfig,
};
use odbss::models::{Family, ModelSpec};
use odbss::sampler::{odbss as run_odbss, OdbssConfig, SpaceMode};

#[derive(Parser)]
#[command(name = "odbss", about = "Optimal-design-based subsampling toolkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Logistic,
    LogisticNoIntercept,
    Linear,
    Hetero,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Family {
        match f {
            FamilyArg::Logistic => Family::Logistic,
            FamilyArg::LogisticNoIntercept => Family::LogisticNoIntercept,
            FamilyArg::Linear => Family::Linear,
            FamilyArg::Hetero => Family::HeteroLogVar,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CriterionArg {
    A,
    D,
    E,
}

impl From<CriterionArg> for Criterion {
    fn from(c: CriterionArg) -> Criterion {
        match c {
            CriterionArg::A => Criterion::A,
            CriterionArg::D => Criterion::D,
            CriterionArg::E => Criterion::E,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Frobenius,
    Sqrt,
    Procrustes,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Metric {
        match m {
            MetricArg::Frobenius => Metric::Frobenius,
            MetricArg::Sqrt => Metric::SquareRoot,
            MetricArg::Procrustes => Metric::Procrustes,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SpaceArg {
    Grid,
    Mh,
    Full,
    Auto,
}

impl From<SpaceArg> for SpaceMode {
    fn from(s: SpaceArg) -> SpaceMode {
        match s {
            SpaceArg::Grid => SpaceMode::Grid,
            SpaceArg::Mh => SpaceMode::Mh,
            SpaceArg::Full => SpaceMode::FullSample,
            SpaceArg::Auto => SpaceMode::Auto,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Select a subsample from a CSV dataset (one 0-based index per output
    /// line, plus a JSON sidecar with the design and timings).
    Subsample(SubsampleArgs),
    /// Compute an approximate optimal design on a CSV candidate set.
    Design(DesignArgs),
    /// Run the simulation benchmark, or aggregate an existing result CSV.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SubsampleArgs {
    /// Input CSV: header row, response column named by --response, all other
    /// numeric columns are covariates in order.
    #[arg(long)]
    data: PathBuf,
    /// Name of the response column.
    #[arg(long)]
    response: String,
    #[arg(long, value_enum)]
    model: FamilyArg,
    /// Subsample size.
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0.2)]
    k0_frac: f64,
    #[arg(long, value_enum, default_value_t = CriterionArg::A)]
    criterion: CriterionArg,
    #[arg(long, value_enum, default_value_t = MetricArg::Frobenius)]
    metric: MetricArg,
    #[arg(long, default_value_t = 0.95)]
    zeta: f64,
    #[arg(long, value_enum, default_value_t = SpaceArg::Auto)]
    space: SpaceArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DesignArgs {
    /// Candidate CSV: header row, every numeric column is a coordinate.
    #[arg(long)]
    candidates: PathBuf,
    #[arg(long, value_enum)]
    model: FamilyArg,
    /// Comma-separated parameter vector.
    #[arg(long)]
    beta: String,
    #[arg(long, value_enum, default_value_t = CriterionArg::A)]
    criterion: CriterionArg,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[command(subcommand)]
    command: Option<BenchCommand>,
    /// Experiment configuration JSON (see README for the schema).
    #[arg(long, required_unless_present = "command")]
    config: Option<PathBuf>,
    #[arg(long, required_unless_present = "command")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Aggregate a result CSV into per-(scenario, method, k) summaries.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Subsample(args) => cmd_subsample(args),
        Command::Design(args) => cmd_design(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_subsample(args: SubsampleArgs) -> odbss::Result<()> {
    let dataset = io::read_dataset(&args.data, &args.response)?;
    let model = ModelSpec::new(args.model.into(), dataset.p());
    let mut config = OdbssConfig::new(args.k, args.seed);
    config.k0_fraction = args.k0_frac;
    config.criterion = args.criterion.into();
    config.metric = args.metric.into();
    config.zeta = args.zeta;
    config.space_mode = args.space.into();
    let result = run_odbss(&dataset, &model, &config)?;
    write_subsample(&result, &args.out)?;
    eprintln!(
        "selected {} rows ({} pilot); sidecar: {}",
        result.indices.len(),
        result.initial_indices.len(),
        args.out.with_extension("json").display()
    );
    Ok(())
}

fn cmd_design(args: DesignArgs) -> odbss::Result<()> {
    let points = io::read_points(&args.candidates)?;
    if points.is_empty() {
        return Err(odbss::Error::DesignSpaceEmpty);
    }
    let p = points[0].len();
    let model = ModelSpec::new(args.model.into(), p);
    let beta: Vec<f64> = args
        .beta
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| odbss::Error::InvalidArgument(format!("bad beta entry '{s}': {e}")))
        })
        .collect::<odbss::Result<_>>()?;
    let beta = DVector::from_vec(beta);
    let crit: Criterion = args.criterion.into();
    let space = odbss::clustering::DesignSpace {
        points,
        source: SpaceSource::FullSample,
    };
    let design = optimize_design(&space, &model, &beta, crit, args.tol, 10_000)?;
    let value = criterion_value(&info_matrix(&design, &model, &beta)?, crit);
    io::write_design_json(&design, value, &args.out)?;
    eprintln!(
        "design with {} support points, criterion value {value:.6e}",
        design.len()
    );
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> odbss::Result<()> {
    if let Some(BenchCommand::Summarize { input, out }) = args.command {
        let rows = read_rows(&input)?;
        let summary = summarize(&rows)?;
        write_summary(&summary, &out)?;
        eprintln!("wrote {} summary rows to {}", summary.len(), out.display());
        return Ok(());
    }
    let config_path = args.config.expect("clap enforces --config");
    let out = args.out.expect("clap enforces --out");
    let spec = config::load(&config_path)?;
    let scenarios = spec.scenarios()?;
    let config: ExperimentConfig = spec.experiment()?;
    let rows = run_experiment(&scenarios, &config, Some(&out))?;
    let failures = rows.iter().filter(|r| r.error.is_some()).count();
    eprintln!(
        "wrote {} rows to {} ({failures} failures)",
        rows.len(),
        out.display()
    );
    Ok(())
}
