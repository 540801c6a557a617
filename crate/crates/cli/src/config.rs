//! Experiment configuration files (TOML).

use std::path::{Path, PathBuf};

use moeliga_core::baselines::SyntheticSpec;
use moeliga_core::{GaConfig, LabelColumn, ObjectiveConfig, ReplacementStrategy, SharingConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Root of every random stream in the experiment.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    /// Held-out share carved off once, before any search.
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Which front feeds the replication summary.
    #[serde(default)]
    pub report_front: ReportFront,
    pub dataset: DatasetSource,
    #[serde(default)]
    pub ga: GaConfig,
    #[serde(default)]
    pub objectives: ObjectiveConfig,
    #[serde(default)]
    pub sharing: SharingConfig,
    #[serde(default)]
    pub compare: CompareConfig,
    #[serde(default)]
    pub grid: Option<GridConfig>,
}

fn default_replications() -> usize {
    5
}

fn default_test_fraction() -> f64 {
    0.2
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("moeliga-out")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFront {
    /// Rank-1 members of the final population.
    #[default]
    Population,
    /// Every non-dominated subset seen during the run.
    Archive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum DatasetSource {
    Csv {
        path: PathBuf,
        /// Label column by zero-based index or header name; the last column
        /// when omitted.
        #[serde(default, skip_serializing_if = "is_last")]
        label: LabelColumn,
    },
    Synthetic(SyntheticSpec),
}

fn is_last(label: &LabelColumn) -> bool {
    *label == LabelColumn::Last
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    /// Discretization bins for mutual information.
    pub bins: usize,
    /// Largest subset size tried by the ranking sweep and forward selection;
    /// `min(20, features)` when unset.
    pub max_k: Option<usize>,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self { bins: 10, max_k: None }
    }
}

/// Parameter grid for `sweep`; every listed key multiplies the cell count.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub lambda: Option<Vec<LambdaSetting>>,
    pub gamma: Option<Vec<f64>>,
    pub sigma: Option<Vec<f64>>,
    pub alpha: Option<Vec<f64>>,
    pub n_tests: Option<Vec<usize>>,
    pub use_objective3: Option<Vec<bool>>,
    pub replacement_strategy: Option<Vec<ReplacementStrategy>>,
    pub n_subordinate: Option<Vec<usize>>,
}

/// A sigmoid slope, or `"none"` for the raw cardinality ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LambdaSetting(#[serde(with = "moeliga_core::objectives::lambda_serde")] pub Option<f64>);

/// One assignment of grid values, as `(key, printable value)` pairs plus the
/// configuration it produces.
#[derive(Debug, Clone)]
pub struct GridCell {
    pub values: Vec<(&'static str, String)>,
    pub config: ExperimentConfig,
}

impl GridConfig {
    /// Cartesian product in key order: lambda, gamma, sigma, alpha, n_tests,
    /// use_objective3, replacement_strategy, n_subordinate.
    pub fn cells(&self, base: &ExperimentConfig) -> Result<Vec<GridCell>, CliError> {
        type Apply = Box<dyn Fn(&mut ExperimentConfig)>;
        let mut axes: Vec<(&'static str, Vec<(String, Apply)>)> = Vec::new();
        macro_rules! axis {
            ($key:literal, $values:expr, |$cfg:ident, $v:ident| $body:expr) => {
                if let Some(values) = &$values {
                    let entries = values
                        .iter()
                        .map(|&$v| {
                            let label = axis!(@label $v);
                            let apply: Apply = Box::new(move |$cfg: &mut ExperimentConfig| $body);
                            (label, apply)
                        })
                        .collect();
                    axes.push(($key, entries));
                }
            };
            (@label $v:ident) => { format!("{}", Display(&$v)) };
        }
        axis!("lambda", self.lambda, |c, v| c.objectives.lambda = v.0);
        axis!("gamma", self.gamma, |c, v| c.objectives.gamma = v);
        axis!("sigma", self.sigma, |c, v| c.sharing.sigma = v);
        axis!("alpha", self.alpha, |c, v| c.sharing.alpha = v);
        axis!("n_tests", self.n_tests, |c, v| c.objectives.n_tests = v);
        axis!("use_objective3", self.use_objective3, |c, v| c.objectives.use_objective3 = v);
        axis!("replacement_strategy", self.replacement_strategy, |c, v| c.ga.replacement_strategy = v);
        axis!("n_subordinate", self.n_subordinate, |c, v| c.ga.n_subordinate = v);

        if axes.is_empty() {
            return Err(CliError::Config("grid: no parameters listed".into()));
        }
        if let Some((key, _)) = axes.iter().find(|(_, v)| v.is_empty()) {
            return Err(CliError::Config(format!("grid.{key}: empty value list")));
        }
        let mut cells = vec![GridCell {
            values: Vec::new(),
            config: base.clone(),
        }];
        for (key, entries) in &axes {
            let mut next = Vec::with_capacity(cells.len() * entries.len());
            for cell in &cells {
                for (label, apply) in entries {
                    let mut config = cell.config.clone();
                    apply(&mut config);
                    let mut values = cell.values.clone();
                    values.push((*key, label.clone()));
                    next.push(GridCell { values, config });
                }
            }
            cells = next;
        }
        Ok(cells)
    }
}

/// Uniform printing of grid values.
struct Display<'a, T>(&'a T);

impl std::fmt::Display for Display<'_, LambdaSetting> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.0 .0 {
            Some(v) => write!(f, "{v}"),
            None => f.write_str("none"),
        }
    }
}

macro_rules! plain_display {
    ($($t:ty),*) => {$(
        impl std::fmt::Display for Display<'_, $t> {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    )*};
}
plain_display!(f64, usize, bool);

impl std::fmt::Display for Display<'_, ReplacementStrategy> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self.0 {
            ReplacementStrategy::Parent => "parent",
            ReplacementStrategy::Complete => "complete",
            ReplacementStrategy::Selection => "selection",
        })
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        fn section(name: &'static str) -> impl Fn(moeliga_core::Error) -> CliError {
            move |e| CliError::from_core(name, e)
        }
        if self.replications == 0 {
            return Err(CliError::Config("replications: must be at least 1".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(CliError::Config(format!(
                "test_fraction: must lie in (0, 1), got {}",
                self.test_fraction
            )));
        }
        self.ga.validate().map_err(section("ga"))?;
        self.objectives.validate().map_err(section("objectives"))?;
        self.sharing.validate().map_err(section("sharing"))?;
        if let DatasetSource::Synthetic(spec) = &self.dataset {
            spec.validate().map_err(section("dataset"))?;
        }
        if self.compare.bins < 2 {
            return Err(CliError::Config("compare.bins: must be at least 2".into()));
        }
        if self.compare.max_k == Some(0) {
            return Err(CliError::Config("compare.max_k: must be at least 1".into()));
        }
        Ok(())
    }
}
