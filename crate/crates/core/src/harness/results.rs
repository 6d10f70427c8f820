use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::model::{Configuration, InitStrategy, StrategyKind};
use crate::stats::AggregateResult;

/// Outcome of one trial of one `(strategy, configuration)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub strategy: StrategyKind,
    pub configuration: Configuration,
    pub trial: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyperparameters: Option<InitStrategy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation_rmse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_rmse: Option<f64>,
    /// Set when the trial failed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
}

impl TrialResult {
    pub fn is_ok(&self) -> bool {
        self.error.is_none() && self.test_rmse.is_some()
    }
}

/// Aggregates of one table cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub strategy: StrategyKind,
    pub configuration: Configuration,
    /// Over successful trials; absent if all failed.
    pub test_rmse: Option<AggregateResult>,
    /// Selected node count over successful trials.
    pub hidden_nodes: Option<AggregateResult>,
    /// Test error significantly below the `−dl−b` cell of the same strategy.
    pub significant: bool,
    /// Wilcoxon p-value against `−dl−b`; absent for the baseline itself.
    pub p_value: Option<f64>,
    pub completed: usize,
    pub failed: usize,
    /// At most 10% of trials failed.
    pub complete: bool,
}

/// Config echo, per-trial records and per-cell aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResults {
    pub config: ExperimentConfig,
    pub trials: Vec<TrialResult>,
    pub cells: Vec<CellResult>,
}

impl ExperimentResults {
    pub fn cell(&self, strategy: StrategyKind, configuration: Configuration) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.strategy == strategy && c.configuration == configuration)
    }

    /// Per-trial test errors of a cell in trial order; failed trials are skipped.
    pub fn test_errors(&self, strategy: StrategyKind, configuration: Configuration) -> Vec<f64> {
        self.trials
            .iter()
            .filter(|t| t.strategy == strategy && t.configuration == configuration)
            .filter_map(|t| t.test_rmse)
            .collect()
    }

    pub fn selected_nodes(&self, strategy: StrategyKind, configuration: Configuration) -> Vec<usize> {
        self.trials
            .iter()
            .filter(|t| t.strategy == strategy && t.configuration == configuration)
            .filter_map(|t| t.m)
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        Self::from_json(&text)
    }
}
