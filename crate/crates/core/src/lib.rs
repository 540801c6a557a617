//! Multi-objective genetic feature selection with evolutionary local
//! improvement.
//!
//! A chromosome is a bit mask over the feature columns of a [`Dataset`]. Each
//! mask is scored on three maximized objectives: balanced accuracy of a
//! decision tree averaged over repeated stratified splits, a (sigmoid-mapped)
//! cardinality ratio rewarding small subsets, and a nearest-hit/nearest-miss
//! separability score. [`evolution::run`] evolves a population ranked by Pareto
//! dominance with cluster-based fitness sharing, and periodically refines its
//! best members by evolving subordinate populations inside their selected
//! feature subsets.
//!
//! ```no_run
//! use moeliga_core::{baselines, evolution, GaConfig, ObjectiveConfig, SharingConfig};
//!
//! let (dataset, _planted) = baselines::generate_synthetic(&Default::default()).unwrap();
//! let result = evolution::run(
//!     &dataset.view(),
//!     &GaConfig::default(),
//!     &ObjectiveConfig::default(),
//!     &SharingConfig::default(),
//! )
//! .unwrap();
//! println!("{} non-dominated subsets", result.archive.members.len());
//! ```

pub mod baselines;
pub mod chromosome;
pub mod classifier;
pub mod data;
pub mod error;
pub mod evolution;
pub mod frontier;
pub mod objectives;
pub mod pareto;
pub mod seed;

pub use chromosome::Chromosome;
pub use classifier::{uar, Classifier, DecisionTree, TreeClassifier};
pub use data::{load_csv, stratified_split, DataView, Dataset, LabelColumn, SplitSpec};
pub use error::{Error, Result};
pub use evolution::{GaConfig, ReplacementStrategy, RunResult, RunTrace};
pub use frontier::{FrontMember, ParetoFront, ReplicationSummary};
pub use objectives::{Evaluator, ObjectiveConfig, ObjectiveVector};
pub use pareto::{EvaluatedIndividual, SharingConfig, SharingSpace};
