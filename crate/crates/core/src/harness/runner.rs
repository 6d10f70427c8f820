use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::results::{CellResult, ExperimentResults, TrialResult};
use crate::error::{Error, Result};
use crate::model::{
    assemble_design, hidden_output, init_hidden, predict, train, Configuration, InitStrategy,
    StrategyKind, Topology,
};
use crate::numkernel::PrefixLeastSquares;
use crate::stats::{aggregate, compare_to_baseline, rmse};
use crate::synthdata::{make_test_set, sample_dataset, Dataset, RngStream};

/// Level of the Wilcoxon test behind the significance flags.
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

/// Share of failed trials above which a cell is reported incomplete.
pub const MAX_FAILED_SHARE: f64 = 0.10;

/// Named random streams of one trial.
///
/// Data streams depend only on the trial, so every variant of a trial sees the
/// same training, validation and test sets. Hidden-layer streams also carry
/// the strategy, configuration and grid cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialStreams {
    root: RngStream,
}

impl TrialStreams {
    pub fn new(master_seed: u64, trial: usize) -> Self {
        TrialStreams { root: RngStream::new(master_seed).child("trial", trial as u64) }
    }

    pub fn train(&self) -> RngStream {
        self.root.child("train", 0)
    }

    pub fn validation(&self) -> RngStream {
        self.root.child("validation", 0)
    }

    pub fn test(&self) -> RngStream {
        self.root.child("test", 0)
    }

    pub fn init(&self, kind: StrategyKind, configuration: Configuration, cell: usize) -> RngStream {
        self.root
            .child("init", 0)
            .child("strategy", kind.index())
            .child("configuration", configuration.index())
            .child("cell", cell as u64)
    }
}

/// Winner of a grid search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridChoice {
    pub m: usize,
    pub strategy: InitStrategy,
    /// Position of `strategy` in the grid; selects the hidden-layer stream.
    pub cell: usize,
    pub validation_rmse: f64,
}

/// Ordering used to pick the winner: lower score, then fewer nodes, then
/// smaller `u`, larger `αmin` and smaller `αmax`.
fn rank(a: &GridChoice, b: &GridChoice) -> Ordering {
    let simpler = match (a.strategy, b.strategy) {
        (InitStrategy::Gs { u: ua }, InitStrategy::Gs { u: ub })
        | (InitStrategy::Gu { u: ua }, InitStrategy::Gu { u: ub }) => ua.total_cmp(&ub),
        (
            InitStrategy::GAlpha { alpha_min: la, alpha_max: ha },
            InitStrategy::GAlpha { alpha_min: lb, alpha_max: hb },
        ) => lb.total_cmp(&la).then(ha.total_cmp(&hb)),
        _ => Ordering::Equal,
    };
    a.validation_rmse
        .total_cmp(&b.validation_rmse)
        .then(a.m.cmp(&b.m))
        .then(simpler)
}

fn topology(config: &ExperimentConfig, m: usize, configuration: Configuration) -> Result<Topology> {
    Topology::from_configuration(config.n, m, configuration)
}

/// Scores every `m` of one grid cell from a single draw of the largest layer.
fn score_cell(
    config: &ExperimentConfig,
    configuration: Configuration,
    strategy: &InitStrategy,
    stream: &RngStream,
    train_data: &Dataset,
    validation: &Dataset,
    mut visit: impl FnMut(usize, f64),
) -> Result<()> {
    let topo = topology(config, config.grids.max_m(), configuration)?;
    let hidden = init_hidden(&topo, strategy, &train_data.x, &mut stream.rng())?;
    let design = assemble_design(&topo, &train_data.x, &hidden_output(&hidden, &train_data.x)?)?;
    let val_design =
        assemble_design(&topo, &validation.x, &hidden_output(&hidden, &validation.x)?)?;
    drop(hidden);
    let ls = PrefixLeastSquares::new(&design, &train_data.y)?;
    drop(design);
    let fixed = topo.design_width() - topo.hidden;
    for &m in &config.grids.m_values {
        let Ok(beta) = ls.solve(fixed + m) else { continue };
        let pred = val_design.prefix_matvec(&beta);
        if let Ok(score) = rmse(&pred, &validation.y) {
            if score.is_finite() {
                visit(m, score);
            }
        }
    }
    Ok(())
}

/// Picks `(m, strategy parameters)` with the lowest validation RMSE.
///
/// For each grid cell one hidden layer with the largest `m` is drawn; since
/// generators work node by node, its first `m` nodes are exactly the layer
/// drawn for `m` nodes, and a single QR of the widest design serves all `m`.
/// Cells that fail numerically are skipped.
pub fn grid_search(
    config: &ExperimentConfig,
    configuration: Configuration,
    kind: StrategyKind,
    train_data: &Dataset,
    streams: &TrialStreams,
) -> Result<GridChoice> {
    let validation = make_test_set(config.target, config.n, config.n_test, &streams.validation())?;
    grid_search_with(config, configuration, kind, train_data, &validation, streams)
}

fn grid_search_with(
    config: &ExperimentConfig,
    configuration: Configuration,
    kind: StrategyKind,
    train_data: &Dataset,
    validation: &Dataset,
    streams: &TrialStreams,
) -> Result<GridChoice> {
    let cells = config.grids.strategies(kind);
    if cells.is_empty() || config.grids.m_values.is_empty() {
        return Err(Error::param(format!("empty grid for {kind}")));
    }
    let mut best: Option<GridChoice> = None;
    let mut last_err = None;
    for (cell, strategy) in cells.iter().enumerate() {
        let stream = streams.init(kind, configuration, cell);
        let outcome = score_cell(config, configuration, strategy, &stream, train_data, validation, |m, score| {
            let candidate = GridChoice { m, strategy: *strategy, cell, validation_rmse: score };
            if best.as_ref().map_or(true, |b| rank(&candidate, b) == Ordering::Less) {
                best = Some(candidate);
            }
        });
        if let Err(e) = outcome {
            last_err = Some(e);
        }
    }
    best.ok_or_else(|| {
        Error::NumericFailure(format!(
            "every grid cell failed for {kind} {configuration}: {}",
            last_err.map_or_else(|| "no finite score".to_owned(), |e| e.to_string())
        ))
    })
}

/// One trial of one variant: grid search, retraining of the winner and its
/// test RMSE. Errors are recorded in the result instead of returned.
pub fn run_trial(
    config: &ExperimentConfig,
    configuration: Configuration,
    kind: StrategyKind,
    trial: usize,
) -> TrialResult {
    let streams = TrialStreams::new(config.master_seed, trial);
    let data = TrialData::sample(config, &streams);
    run_trial_on(config, configuration, kind, trial, &streams, data)
}

struct TrialData {
    train: Dataset,
    validation: Dataset,
    test: Dataset,
}

impl TrialData {
    fn sample(config: &ExperimentConfig, streams: &TrialStreams) -> Result<Self> {
        Ok(TrialData {
            train: sample_dataset(config.target, config.n, config.n_train, config.noise_sigma, &streams.train())?,
            validation: make_test_set(config.target, config.n, config.n_test, &streams.validation())?,
            test: make_test_set(config.target, config.n, config.n_test, &streams.test())?,
        })
    }
}

fn run_trial_on(
    config: &ExperimentConfig,
    configuration: Configuration,
    kind: StrategyKind,
    trial: usize,
    streams: &TrialStreams,
    data: Result<TrialData>,
) -> TrialResult {
    let outcome = data.and_then(|d| {
        let choice = grid_search_with(config, configuration, kind, &d.train, &d.validation, streams)?;
        // Same stream and a prefix of the same draw: this reproduces the
        // network that won the search.
        let topo = topology(config, choice.m, configuration)?;
        let mut rng = streams.init(kind, configuration, choice.cell).rng();
        let model = train(&topo, &choice.strategy, &d.train, &mut rng)?;
        let test_rmse = rmse(&predict(&model, &d.test.x)?, &d.test.y)?;
        if !test_rmse.is_finite() {
            return Err(Error::NumericFailure("non-finite test RMSE".into()));
        }
        Ok((choice, test_rmse))
    });
    match outcome {
        Ok((choice, test_rmse)) => TrialResult {
            strategy: kind,
            configuration,
            trial,
            m: Some(choice.m),
            hyperparameters: Some(choice.strategy),
            validation_rmse: Some(choice.validation_rmse),
            test_rmse: Some(test_rmse),
            error: None,
            wall_time_secs: None,
        },
        Err(e) => TrialResult {
            strategy: kind,
            configuration,
            trial,
            m: None,
            hyperparameters: None,
            validation_rmse: None,
            test_rmse: None,
            error: Some(e.to_string()),
            wall_time_secs: None,
        },
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Store per-trial wall time. Off by default because it makes output
    /// differ between otherwise identical runs.
    pub record_timings: bool,
}

/// Runs every `(strategy, configuration, trial)` unit and aggregates per cell.
///
/// Units are executed on `config.parallelism` threads. Each unit derives its
/// own streams, and results are collected in unit order, so the output does
/// not depend on the thread count.
pub fn run_experiment(config: &ExperimentConfig, options: &RunOptions) -> Result<ExperimentResults> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| Error::param(format!("cannot start {} threads: {e}", config.parallelism)))?;

    let mut units = Vec::new();
    for &kind in &config.strategies {
        for &configuration in &config.configurations {
            for trial in 0..config.trials {
                units.push((kind, configuration, trial));
            }
        }
    }

    let trials: Vec<TrialResult> = pool.install(|| {
        units
            .par_iter()
            .map(|&(kind, configuration, trial)| {
                let start = Instant::now();
                let mut result = run_trial(config, configuration, kind, trial);
                if options.record_timings {
                    result.wall_time_secs = Some(start.elapsed().as_secs_f64());
                }
                result
            })
            .collect()
    });

    let cells = aggregate_cells(config, &trials)?;
    Ok(ExperimentResults { config: config.clone(), trials, cells })
}

/// Per-cell aggregates and significance against `−dl−b` of the same strategy.
pub(crate) fn aggregate_cells(config: &ExperimentConfig, trials: &[TrialResult]) -> Result<Vec<CellResult>> {
    let mut by_cell: BTreeMap<(StrategyKind, Configuration), Vec<&TrialResult>> = BTreeMap::new();
    for t in trials {
        by_cell.entry((t.strategy, t.configuration)).or_default().push(t);
    }
    let mut cells = Vec::new();
    for &kind in &config.strategies {
        for &configuration in &config.configurations {
            let rows = by_cell.get(&(kind, configuration)).map(Vec::as_slice).unwrap_or(&[]);
            let ok: Vec<&TrialResult> = rows.iter().copied().filter(|t| t.is_ok()).collect();
            let failed = rows.len() - ok.len();
            let errors: Vec<f64> = ok.iter().filter_map(|t| t.test_rmse).collect();
            let nodes: Vec<f64> = ok.iter().filter_map(|t| t.m).map(|m| m as f64).collect();

            let mut comparison = None;
            if configuration != Configuration::BASELINE {
                if let Some(base_rows) = by_cell.get(&(kind, Configuration::BASELINE)) {
                    comparison = paired_comparison(base_rows, rows)?;
                }
            }
            cells.push(CellResult {
                strategy: kind,
                configuration,
                test_rmse: if errors.is_empty() { None } else { Some(aggregate(&errors)?) },
                hidden_nodes: if nodes.is_empty() { None } else { Some(aggregate(&nodes)?) },
                significant: comparison.is_some_and(|c| c.significant),
                p_value: comparison.map(|c| c.p_value),
                completed: ok.len(),
                failed,
                complete: rows.len() == config.trials
                    && (failed as f64) <= MAX_FAILED_SHARE * config.trials as f64,
            });
        }
    }
    Ok(cells)
}

/// Wilcoxon comparison over the trials where both variants succeeded.
fn paired_comparison(
    baseline: &[&TrialResult],
    variant: &[&TrialResult],
) -> Result<Option<crate::stats::BaselineComparison>> {
    let base: BTreeMap<usize, f64> =
        baseline.iter().filter_map(|t| t.test_rmse.map(|e| (t.trial, e))).collect();
    let (mut b, mut v) = (Vec::new(), Vec::new());
    for t in variant {
        if let (Some(e), Some(&be)) = (t.test_rmse, base.get(&t.trial)) {
            b.push(be);
            v.push(e);
        }
    }
    if b.is_empty() {
        return Ok(None);
    }
    compare_to_baseline(&b, &v, SIGNIFICANCE_LEVEL).map(Some)
}
