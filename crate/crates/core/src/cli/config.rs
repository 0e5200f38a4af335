use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::data::{FeatureSet, SplitRatios, SyntheticSpec};
use crate::grunet::TrialConfig;
use crate::metaheuristics::{DeConfig, Evaluation, GaConfig, ParamSpec, PsoConfig, SearchSpace};
use crate::pipeline::{self, BATCH_SIZE, EPOCHS, LEARNING_RATE};

use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Manual,
    De,
    Ga,
    Pso,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Manual => "manual",
            Method::De => "de",
            Method::Ga => "ga",
            Method::Pso => "pso",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything a run needs. Loaded from TOML; command-line flags override.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Worker threads for one generation's evaluations; 0 or 1 is sequential.
    pub parallel: usize,
    pub data: DataConfig,
    pub search: SearchConfig,
    pub optimizer: OptimizerConfig,
    pub manual: ManualConfig,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthetic_hours: Option<usize>,
    pub features: Vec<String>,
    pub split: SplitRatios,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub batch_size: [f64; 2],
    pub epochs: [f64; 2],
    pub learning_rate: [f64; 2],
    /// Epoch ceiling while tuning; 0 disables it.
    pub tuning_epoch_cap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub method: Method,
    pub pop_size: usize,
    pub generations: usize,
    pub f_scale: f64,
    pub cr: f64,
}

/// Hand-picked trial; unset fields fall back to the centre of the search range.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManualConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Epoch ceiling for final training; 0 disables it.
    pub final_epoch_cap: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from("runs"),
            parallel: 0,
            data: DataConfig::default(),
            search: SearchConfig::default(),
            optimizer: OptimizerConfig::default(),
            manual: ManualConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            csv: None,
            synthetic_hours: None,
            features: FeatureSet::default()
                .columns()
                .iter()
                .map(|c| c.name().to_string())
                .collect(),
            split: SplitRatios::default(),
        }
    }
}

impl Default for SearchConfig {
    fn default() -> Self {
        let space = pipeline::default_search_space();
        let range = |name| {
            let p = space.param(name).expect("default space");
            [p.lower, p.upper]
        };
        Self {
            batch_size: range(BATCH_SIZE),
            epochs: range(EPOCHS),
            learning_rate: range(LEARNING_RATE),
            tuning_epoch_cap: pipeline::DEFAULT_TUNING_EPOCH_CAP,
        }
    }
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            method: Method::De,
            pop_size: 10,
            generations: 15,
            f_scale: 0.8,
            cr: 0.9,
        }
    }
}

pub enum DataSource {
    Csv(PathBuf),
    Synthetic(SyntheticSpec),
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serialisable")
    }

    /// Checks every field, reporting all problems at once.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut problems = Vec::new();
        if self.data.csv.is_some() && self.data.synthetic_hours.is_some() {
            problems.push("data: set either csv or synthetic_hours, not both".to_string());
        }
        if let Some(h) = self.data.synthetic_hours {
            if h < 27 {
                problems.push(format!("data.synthetic_hours: need at least 27, got {h}"));
            }
        }
        if let Err(e) = FeatureSet::parse(&self.data.features) {
            problems.push(format!("data.features: {e}"));
        }
        if let Err(e) = self.data.split.validate() {
            problems.push(format!("data.split: {e}"));
        }
        if let Err(CliError::Config(p)) = self.search_space() {
            problems.extend(p);
        }
        if self.search.batch_size[0] < 1.0 {
            problems.push("search.batch_size: lower bound must be at least 1".into());
        }
        if self.search.epochs[0] < 0.0 {
            problems.push("search.epochs: lower bound must be non-negative".into());
        }
        if self.search.learning_rate[0] < 0.0 {
            problems.push("search.learning_rate: lower bound must be non-negative".into());
        }
        let o = &self.optimizer;
        if o.pop_size < 4 {
            problems.push(format!(
                "optimizer.pop_size: need at least 4, got {}",
                o.pop_size
            ));
        }
        if !(0.0..=2.0).contains(&o.f_scale) {
            problems.push(format!(
                "optimizer.f_scale: must lie in [0, 2], got {}",
                o.f_scale
            ));
        }
        if !(0.0..=1.0).contains(&o.cr) {
            problems.push(format!("optimizer.cr: must lie in [0, 1], got {}", o.cr));
        }
        if self.manual.batch_size == Some(0) {
            problems.push("manual.batch_size: must be at least 1".into());
        }
        if let Some(lr) = self.manual.learning_rate {
            if !(lr.is_finite() && lr >= 0.0) {
                problems.push(format!(
                    "manual.learning_rate: must be finite and >= 0, got {lr}"
                ));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(problems))
        }
    }

    pub fn source(&self) -> Result<DataSource, CliError> {
        match (&self.data.csv, self.data.synthetic_hours) {
            (Some(p), None) => Ok(DataSource::Csv(p.clone())),
            (None, Some(hours)) => Ok(DataSource::Synthetic(SyntheticSpec {
                hours,
                seed: self.seed,
                ..SyntheticSpec::default()
            })),
            (None, None) => Err(CliError::Usage(
                "no data source: pass --data <csv> or --synthetic <hours>".into(),
            )),
            (Some(_), Some(_)) => Err(CliError::Usage(
                "pass either --data or --synthetic, not both".into(),
            )),
        }
    }

    pub fn features(&self) -> Result<FeatureSet, CliError> {
        FeatureSet::parse(&self.data.features)
            .map_err(|e| CliError::Config(vec![format!("data.features: {e}")]))
    }

    pub fn search_space(&self) -> Result<SearchSpace, CliError> {
        let s = &self.search;
        SearchSpace::new(vec![
            ParamSpec::integer(BATCH_SIZE, s.batch_size[0], s.batch_size[1]),
            ParamSpec::integer(EPOCHS, s.epochs[0], s.epochs[1]),
            ParamSpec::continuous(LEARNING_RATE, s.learning_rate[0], s.learning_rate[1]),
        ])
        .map_err(|e| CliError::Config(vec![format!("search: {e}")]))
    }

    pub fn tuning_epoch_cap(&self) -> Option<usize> {
        Some(self.search.tuning_epoch_cap).filter(|c| *c > 0)
    }

    pub fn final_epoch_cap(&self) -> Option<usize> {
        Some(self.train.final_epoch_cap).filter(|c| *c > 0)
    }

    pub fn evaluation(&self) -> Evaluation {
        if self.parallel > 1 {
            Evaluation::Parallel {
                threads: self.parallel,
            }
        } else {
            Evaluation::Sequential
        }
    }

    pub fn manual_trial(&self) -> Result<TrialConfig, CliError> {
        let mid = pipeline::manual_baseline(&self.search_space()?)
            .map_err(|e| CliError::Config(vec![format!("search: {e}")]))?;
        Ok(TrialConfig {
            batch_size: self.manual.batch_size.unwrap_or(mid.batch_size),
            epochs: self.manual.epochs.unwrap_or(mid.epochs),
            learning_rate: self.manual.learning_rate.unwrap_or(mid.learning_rate),
        })
    }

    pub fn de_config(&self) -> DeConfig {
        let o = &self.optimizer;
        DeConfig {
            f_scale: o.f_scale,
            cr: o.cr,
            pop_size: o.pop_size,
            max_generations: o.generations,
            max_evaluations: None,
            seed: self.seed,
            evaluation: self.evaluation(),
        }
    }

    /// Same evaluation budget as DE: `pop_size * (generations + 1)`.
    pub fn ga_config(&self) -> GaConfig {
        let o = &self.optimizer;
        let budget = o.pop_size * (o.generations + 1);
        GaConfig {
            pop_size: o.pop_size,
            // cached children cost nothing, so the budget rather than the
            // generation count ends the run
            max_generations: budget,
            max_evaluations: Some(budget),
            seed: self.seed,
            evaluation: self.evaluation(),
            ..GaConfig::default()
        }
    }

    pub fn pso_config(&self) -> PsoConfig {
        let o = &self.optimizer;
        PsoConfig {
            swarm_size: o.pop_size,
            max_iterations: o.generations,
            seed: self.seed,
            evaluation: self.evaluation(),
            ..PsoConfig::default()
        }
    }
}
