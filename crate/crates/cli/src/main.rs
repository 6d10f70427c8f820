use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rvfl_core::{
    decompose, emit_table, make_test_set, predict, rmse, run_experiment, sample_dataset, train,
    Configuration, Dataset, Error, ExperimentConfig, ExperimentResults, InitStrategy, RunOptions,
    StrategyKind, TableFormat, TargetFunction, Topology, TrialStreams,
};

mod selftest;

#[derive(Parser)]
#[command(name = "rvfl", version, about = "RVFL network ablation study runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config.
    Run(RunArgs),
    /// Train a single network and report its errors.
    Train(TrainArgs),
    /// Re-render stored JSON results.
    Table(TableArgs),
    /// Run the built-in oracle and property checks.
    Selftest,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Markdown,
    Json,
}

impl From<Format> for TableFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => TableFormat::Csv,
            Format::Markdown => TableFormat::Markdown,
            Format::Json => TableFormat::Json,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Override `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// 100 trials, full training-set sizes and node grid.
    #[arg(long)]
    paper_scale: bool,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Record per-trial wall time (output is then no longer reproducible).
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct TrainArgs {
    /// Take target, sizes, noise and seed from an experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    target: Option<TargetFunction>,
    #[arg(long)]
    n: Option<usize>,
    /// Hidden nodes.
    #[arg(long, default_value_t = 20)]
    m: usize,
    /// One of +dl+b, +dl-b, -dl+b, -dl-b.
    #[arg(long, default_value = "+dl+b", allow_hyphen_values = true)]
    variant: Configuration,
    #[arg(long, default_value = "Gu")]
    strategy: StrategyKind,
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    u: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    alpha_min: f64,
    #[arg(long, default_value_t = 90.0, allow_negative_numbers = true)]
    alpha_max: f64,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    noise: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Train on this CSV (`x1..xn,y`) instead of sampling.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Write the training set as CSV.
    #[arg(long)]
    dump_data: Option<PathBuf>,
    /// Write the trained model as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TableArgs {
    /// Results JSON written by `run`.
    results: PathBuf,
    #[arg(long, value_enum, default_value = "markdown")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        match err.downcast_ref::<Error>() {
            Some(Error::Config(_) | Error::InvalidParameter(_)) => Failure::Usage(err),
            _ => Failure::Runtime(err),
        }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        anyhow::Error::from(err).into()
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Train(args) => train_one(args),
        Command::Table(args) => table(args),
        Command::Selftest => {
            if selftest::run_all() {
                Ok(())
            } else {
                Err(Failure::Runtime(anyhow::anyhow!("selftest failed")))
            }
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn write_output(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => io::stdout().write_all(text.as_bytes()).context("writing to stdout"),
    }
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if args.paper_scale {
        config.paper_scale();
    }
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if let Some(trials) = args.trials {
        config.trials = trials;
    }
    if let Some(threads) = args.threads {
        config.parallelism = threads;
    }
    config.validate()?;
    let options = RunOptions { record_timings: args.timings };
    let results = run_experiment(&config, &options)?;
    let failed: usize = results.cells.iter().map(|c| c.failed).sum();
    if failed > 0 {
        eprintln!("warning: {failed} trial(s) failed");
    }
    let text = emit_table(&results, args.format.into())?;
    write_output(args.out.as_deref(), &text).map_err(Failure::Runtime)?;
    if results.cells.iter().any(|c| !c.complete) {
        return Err(Failure::Runtime(anyhow::anyhow!("more than 10% of trials failed in some cell")));
    }
    Ok(())
}

fn norm(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

fn train_one(args: TrainArgs) -> Result<(), Failure> {
    let base = match &args.config {
        Some(path) => Some(ExperimentConfig::load(path)?),
        None => None,
    };
    let target = args.target.or(base.as_ref().map(|c| c.target)).unwrap_or(TargetFunction::Nl);
    let n_train = args.n_train.or(base.as_ref().map(|c| c.n_train)).unwrap_or(2000);
    let n_test = args.n_test.or(base.as_ref().map(|c| c.n_test)).unwrap_or(10_000);
    let noise = args.noise.or(base.as_ref().map(|c| c.noise_sigma)).unwrap_or(0.05);
    let seed = args.seed.or(base.as_ref().map(|c| c.master_seed)).unwrap_or(42);
    let strategy = match args.strategy {
        StrategyKind::Gs => InitStrategy::Gs { u: args.u },
        StrategyKind::Gu => InitStrategy::Gu { u: args.u },
        StrategyKind::GAlpha => InitStrategy::GAlpha { alpha_min: args.alpha_min, alpha_max: args.alpha_max },
    };
    strategy.validate()?;

    let streams = TrialStreams::new(seed, 0);
    let data = match &args.data {
        Some(path) => {
            let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
            Dataset::read_csv(file).with_context(|| format!("reading {}", path.display()))?
        }
        None => {
            let n = args.n.or(base.as_ref().map(|c| c.n)).unwrap_or(2);
            sample_dataset(target, n, n_train, noise, &streams.train())?
        }
    };
    let n = data.inputs();
    if let Some(path) = &args.dump_data {
        let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        data.write_csv(file)?;
    }

    let topology = Topology::from_configuration(n, args.m, args.variant)?;
    let mut rng = streams.init(strategy.kind(), args.variant, 0).rng();
    let model = train(&topology, &strategy, &data, &mut rng)?;
    let train_rmse = rmse(&predict(&model, &data.x)?, &data.y)?;
    println!("model: {} {} m={} n={}", args.variant, strategy, args.m, n);
    println!("train_rmse: {train_rmse:.6e}");

    if args.data.is_none() {
        let test = make_test_set(target, n, n_test, &streams.test())?;
        let parts = decompose(&model, &test.x)?;
        let test_rmse = rmse(&parts.total(), &test.y)?;
        println!("test_rmse: {test_rmse:.6e}");
        println!("linear_component_rms: {:.6e}", norm(&parts.linear));
        println!("nonlinear_component_rms: {:.6e}", norm(&parts.nonlinear));
        println!("bias_component_rms: {:.6e}", norm(&parts.bias));
    }

    if let Some(path) = &args.out {
        let text = model.to_json(Some(seed))?;
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn table(args: TableArgs) -> Result<(), Failure> {
    let results = ExperimentResults::load(&args.results)
        .with_context(|| format!("loading {}", args.results.display()))
        .map_err(Failure::Runtime)?;
    let text = emit_table(&results, args.format.into())?;
    write_output(args.out.as_deref(), &text).map_err(Failure::Runtime)?;
    Ok(())
}
