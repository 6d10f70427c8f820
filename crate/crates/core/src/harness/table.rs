use std::fmt::Write as _;
use std::str::FromStr;

use super::results::ExperimentResults;
use super::runner::SIGNIFICANCE_LEVEL;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Markdown,
    Json,
}

impl FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(TableFormat::Csv),
            "markdown" | "md" => Ok(TableFormat::Markdown),
            "json" => Ok(TableFormat::Json),
            _ => Err(Error::param(format!("unknown table format {s:?} (csv, markdown, json)"))),
        }
    }
}

/// Renders results. CSV and Markdown hold one row per cell; JSON is the full
/// lossless dump.
pub fn emit_table(results: &ExperimentResults, format: TableFormat) -> Result<String> {
    if results.cells.is_empty() {
        return Err(Error::input("no cells to render"));
    }
    match format {
        TableFormat::Json => results.to_json(),
        TableFormat::Csv => csv_table(results),
        TableFormat::Markdown => Ok(markdown_table(results)),
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_table(results: &ExperimentResults) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "strategy",
        "configuration",
        "mean_rmse",
        "std_rmse",
        "significant",
        "mean_m",
        "std_m",
        "p_value",
        "completed",
        "failed",
    ])?;
    for c in &results.cells {
        w.write_record([
            c.strategy.to_string(),
            c.configuration.to_string(),
            opt(c.test_rmse.map(|a| a.mean)),
            opt(c.test_rmse.map(|a| a.std)),
            c.significant.to_string(),
            opt(c.hidden_nodes.map(|a| a.mean)),
            opt(c.hidden_nodes.map(|a| a.std)),
            opt(c.p_value),
            c.completed.to_string(),
            c.failed.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Serialization(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
}

fn num(v: f64) -> String {
    if v == 0.0 || (1e-3..1e4).contains(&v.abs()) {
        format!("{v:.4}")
    } else {
        format!("{v:.3e}")
    }
}

fn markdown_table(results: &ExperimentResults) -> String {
    let cfg = &results.config;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "RMSE for {}, n = {}, N = {}, {} trials, noise σ = {}\n",
        cfg.target, cfg.n, cfg.n_train, cfg.trials, cfg.noise_sigma
    );
    out.push_str("| Strategy | Configuration | RMSE | ± | m | p |\n");
    out.push_str("|---|---|---:|---:|---:|---:|\n");
    for c in &results.cells {
        let (mean, std) = match c.test_rmse {
            Some(a) => {
                let marker = if c.significant { "*" } else { "" };
                (format!("{}{marker}", num(a.mean)), num(a.std))
            }
            None => ("failed".to_owned(), String::new()),
        };
        let m = c.hidden_nodes.map(|a| format!("{:.2}", a.mean)).unwrap_or_default();
        let p = c.p_value.map(|p| format!("{p:.3}")).unwrap_or_else(|| "–".to_owned());
        let incomplete = if c.complete { "" } else { " (incomplete)" };
        let _ = writeln!(
            out,
            "| {} | {}{incomplete} | {mean} | {std} | {m} | {p} |",
            c.strategy, c.configuration
        );
    }
    let _ = writeln!(
        out,
        "\n`*` error significantly lower than −dl−b (Wilcoxon signed-rank, p < {SIGNIFICANCE_LEVEL})."
    );
    out
}
