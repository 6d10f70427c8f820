use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Configuration, InitStrategy, StrategyKind};
use crate::synthdata::TargetFunction;

/// Hyperparameter grids searched per trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub m_values: Vec<usize>,
    /// Bound `u` of the uniform weight interval, for `Gs` and `Gu`.
    pub u_values: Vec<f64>,
    /// Lower slope angles in degrees, for `Gα`.
    pub alpha_min_values: Vec<f64>,
    /// Upper angles run from `αmin + step` in steps of `step` up to 90.
    pub alpha_step: f64,
}

fn u_grid(n: usize) -> Vec<f64> {
    if n == 2 {
        (1..=10).map(f64::from).chain([20.0, 50.0, 100.0]).collect()
    } else {
        (1..=10).map(|k| f64::from(k) / 10.0).chain([2.0, 3.0, 4.0, 5.0]).collect()
    }
}

fn alpha_min_grid() -> Vec<f64> {
    (0..6).map(|k| 15.0 * f64::from(k)).collect()
}

impl GridSpec {
    /// Reduced node grid `{1..10, 20, 50, 100, 200, 500}`.
    pub fn desk(n: usize) -> Self {
        GridSpec {
            m_values: (1..=10).chain([20, 50, 100, 200, 500]).collect(),
            u_values: u_grid(n),
            alpha_min_values: alpha_min_grid(),
            alpha_step: 15.0,
        }
    }

    /// Full node grid `{1..10, 20..100 by 10, 200..1000 by 100}`.
    pub fn paper(n: usize) -> Self {
        GridSpec {
            m_values: (1..=10).chain((20..=100).step_by(10)).chain((200..=1000).step_by(100)).collect(),
            ..GridSpec::desk(n)
        }
    }

    pub fn max_m(&self) -> usize {
        self.m_values.iter().copied().max().unwrap_or(0)
    }

    /// `(αmin, αmax)` pairs in grid order.
    pub fn alpha_ranges(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        if self.alpha_step.is_nan() || self.alpha_step <= 0.0 {
            return out;
        }
        for &lo in &self.alpha_min_values {
            let mut k = 1.0;
            loop {
                let hi = lo + k * self.alpha_step;
                if hi > 90.0 + 1e-9 {
                    break;
                }
                out.push((lo, hi.min(90.0)));
                k += 1.0;
            }
        }
        out
    }

    /// Every non-`m` grid cell of a strategy, in search order.
    pub fn strategies(&self, kind: StrategyKind) -> Vec<InitStrategy> {
        match kind {
            StrategyKind::Gs => self.u_values.iter().map(|&u| InitStrategy::Gs { u }).collect(),
            StrategyKind::Gu => self.u_values.iter().map(|&u| InitStrategy::Gu { u }).collect(),
            StrategyKind::GAlpha => self
                .alpha_ranges()
                .into_iter()
                .map(|(alpha_min, alpha_max)| InitStrategy::GAlpha { alpha_min, alpha_max })
                .collect(),
        }
    }

    fn canonicalize(&mut self) {
        self.m_values.sort_unstable();
        self.m_values.dedup();
        for v in [&mut self.u_values, &mut self.alpha_min_values] {
            v.sort_by(f64::total_cmp);
            v.dedup();
        }
    }

    fn validate(&self, kinds: &[StrategyKind]) -> Result<()> {
        if self.m_values.is_empty() || self.m_values.contains(&0) {
            return Err(field_error("grids.m_values", "must be a nonempty list of positive counts"));
        }
        for &kind in kinds {
            let cells = self.strategies(kind);
            if cells.is_empty() {
                let field = match kind {
                    StrategyKind::GAlpha => "grids.alpha_min_values",
                    _ => "grids.u_values",
                };
                return Err(field_error(field, &format!("grid for {kind} is empty")));
            }
            for cell in cells {
                cell.validate().map_err(|e| field_error("grids", &e.to_string()))?;
            }
        }
        Ok(())
    }
}

/// One table's worth of experiment: a target, a dimension and the variants to
/// compare. The record plus `master_seed` determines every reported number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub target: TargetFunction,
    pub n: usize,
    pub n_train: usize,
    /// Size of both the validation and the test set.
    pub n_test: usize,
    pub trials: usize,
    pub noise_sigma: f64,
    pub configurations: Vec<Configuration>,
    pub strategies: Vec<StrategyKind>,
    pub grids: GridSpec,
    pub master_seed: u64,
    /// Worker threads. Left out of serialized results, which do not depend on it.
    #[serde(skip, default = "one")]
    pub parallelism: usize,
}

fn one() -> usize {
    1
}

/// On-disk form: every key optional except `target` and `n`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    target: TargetFunction,
    n: usize,
    n_train: Option<usize>,
    n_test: Option<usize>,
    trials: Option<usize>,
    noise_sigma: Option<f64>,
    configurations: Option<Vec<Configuration>>,
    strategies: Option<Vec<StrategyKind>>,
    master_seed: Option<u64>,
    parallelism: Option<usize>,
    grids: Option<GridFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    m_values: Option<Vec<usize>>,
    u_values: Option<Vec<f64>>,
    alpha_min_values: Option<Vec<f64>>,
    alpha_step: Option<f64>,
}

fn field_error(field: &str, msg: &str) -> Error {
    Error::Config(format!("field `{field}`: {msg}"))
}

impl ExperimentConfig {
    /// Desk-scale defaults for a target and dimension.
    pub fn new(target: TargetFunction, n: usize) -> Self {
        ExperimentConfig {
            target,
            n,
            n_train: 2000,
            n_test: 10_000,
            trials: 30,
            noise_sigma: 0.05,
            configurations: Configuration::ALL.to_vec(),
            strategies: StrategyKind::ALL.to_vec(),
            grids: GridSpec::desk(n),
            master_seed: 42,
            parallelism: 1,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut cfg = ExperimentConfig::new(file.target, file.n);
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = file.$f { cfg.$f = v; } )* };
        }
        take!(n_train, n_test, trials, noise_sigma, configurations, strategies, master_seed, parallelism);
        if let Some(g) = file.grids {
            if let Some(v) = g.m_values {
                cfg.grids.m_values = v;
            }
            if let Some(v) = g.u_values {
                cfg.grids.u_values = v;
            }
            if let Some(v) = g.alpha_min_values {
                cfg.grids.alpha_min_values = v;
            }
            if let Some(v) = g.alpha_step {
                cfg.grids.alpha_step = v;
            }
        }
        cfg.canonicalize();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Sorts and dedups the variant lists and grids so equal experiments
    /// serialize identically.
    pub fn canonicalize(&mut self) {
        self.configurations.sort();
        self.configurations.dedup();
        self.strategies.sort();
        self.strategies.dedup();
        self.grids.canonicalize();
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(field_error("n", "must be at least 1"));
        }
        if self.n_train == 0 {
            return Err(field_error("n_train", "must be at least 1"));
        }
        if self.n_test == 0 {
            return Err(field_error("n_test", "must be at least 1"));
        }
        if self.trials == 0 {
            return Err(field_error("trials", "must be at least 1"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(field_error("noise_sigma", "must be a finite value >= 0"));
        }
        if self.configurations.is_empty() {
            return Err(field_error("configurations", "must not be empty"));
        }
        if self.strategies.is_empty() {
            return Err(field_error("strategies", "must not be empty"));
        }
        if self.parallelism == 0 {
            return Err(field_error("parallelism", "must be at least 1"));
        }
        self.grids.validate(&self.strategies)
    }

    /// Trial count, training-set size and node grid of the full study.
    pub fn paper_scale(&mut self) {
        self.trials = 100;
        self.n_train = match self.n {
            2 => 5000,
            5 => 20_000,
            10 => 50_000,
            _ => self.n_train,
        };
        self.grids.m_values = GridSpec::paper(self.n).m_values;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grids() {
        let g = GridSpec::paper(2);
        assert_eq!(g.m_values.len(), 10 + 9 + 9);
        assert_eq!(g.max_m(), 1000);
        assert_eq!(g.u_values, vec![1., 2., 3., 4., 5., 6., 7., 8., 9., 10., 20., 50., 100.]);
        assert_eq!(GridSpec::desk(5).u_values.len(), 14);
        assert!((GridSpec::desk(5).u_values[2] - 0.3).abs() < 1e-15);
        let ranges = g.alpha_ranges();
        assert_eq!(ranges.len(), 21);
        assert_eq!(ranges[0], (0.0, 15.0));
        assert_eq!(ranges[5], (0.0, 90.0));
        assert_eq!(*ranges.last().unwrap(), (75.0, 90.0));
        assert_eq!(GridSpec::desk(2).m_values, vec![1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 20, 50, 100, 200, 500]);
    }

    #[test]
    fn minimal_toml_gets_defaults() {
        let cfg = ExperimentConfig::from_toml("target = \"NL\"\nn = 2\n").unwrap();
        assert_eq!(cfg, ExperimentConfig::new(TargetFunction::Nl, 2));
    }

    #[test]
    fn full_toml() {
        let text = r#"
target = "NLF+L"
n = 5
n_train = 300
n_test = 400
trials = 3
noise_sigma = 0.0
configurations = ["-dl-b", "+dl+b", "+dl+b"]
strategies = ["Galpha", "Gs"]
master_seed = 9
parallelism = 2

[grids]
m_values = [5, 1]
u_values = [0.5]
alpha_min_values = [30]
alpha_step = 30
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.target, TargetFunction::NlfL);
        assert_eq!(cfg.configurations, vec![Configuration::WithLinksWithBias, Configuration::NoLinksNoBias]);
        assert_eq!(cfg.strategies, vec![StrategyKind::Gs, StrategyKind::GAlpha]);
        assert_eq!(cfg.grids.m_values, vec![1, 5]);
        assert_eq!(cfg.grids.alpha_ranges(), vec![(30.0, 60.0), (30.0, 90.0)]);
        assert_eq!(cfg.parallelism, 2);
    }

    #[test]
    fn errors_name_the_problem() {
        let unknown = ExperimentConfig::from_toml("target = \"NL\"\nn = 2\ntrails = 3\n").unwrap_err();
        assert!(unknown.to_string().contains("trails"), "{unknown}");
        assert!(unknown.to_string().contains("line 3"), "{unknown}");

        let zero = ExperimentConfig::from_toml("target = \"NL\"\nn = 2\ntrials = 0\n").unwrap_err();
        assert!(zero.to_string().contains("`trials`"), "{zero}");

        let bad_target = ExperimentConfig::from_toml("target = \"XX\"\nn = 2\n").unwrap_err();
        assert!(matches!(bad_target, Error::Config(_)));

        let empty = ExperimentConfig::from_toml("target = \"NL\"\nn = 2\n[grids]\nu_values = []\n").unwrap_err();
        assert!(empty.to_string().contains("u_values"), "{empty}");

        let alpha_only = "target = \"NL\"\nn = 2\nstrategies = [\"Galpha\"]\n[grids]\nu_values = []\n";
        assert!(ExperimentConfig::from_toml(alpha_only).is_ok());
    }

    #[test]
    fn paper_scale_values() {
        let mut cfg = ExperimentConfig::new(TargetFunction::Nlf, 10);
        cfg.paper_scale();
        assert_eq!((cfg.trials, cfg.n_train, cfg.grids.max_m()), (100, 50_000, 1000));
    }
}
