//! The three feature-subset objectives: repeated-split balanced accuracy,
//! (optionally sigmoid-mapped) cardinality ratio, and nearest-hit/nearest-miss
//! separability.

use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::RwLock;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chromosome::Chromosome;
use crate::classifier::{uar, Classifier, TreeClassifier};
use crate::data::{stratified_split, DataView, SplitSpec};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from, tag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveConfig {
    /// Train/validation repetitions averaged into the accuracy objective.
    pub n_tests: usize,
    pub validation_fraction: f64,
    /// Sigmoid slope for the cardinality objective; `None` uses the raw ratio.
    #[serde(with = "lambda_serde")]
    pub lambda: Option<f64>,
    pub gamma: f64,
    /// Instances sampled by the separability objective; `None` means
    /// `min(64, training size)`.
    pub n_neighbor_samples: Option<usize>,
    pub use_objective3: bool,
    pub base_seed: u64,
    pub max_depth: usize,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self {
            n_tests: 3,
            validation_fraction: 0.30,
            lambda: Some(0.5),
            gamma: -0.5,
            n_neighbor_samples: None,
            use_objective3: true,
            base_seed: 0,
            max_depth: 100,
        }
    }
}

impl ObjectiveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_tests < 1 {
            return Err(Error::config("n_tests", "must be at least 1"));
        }
        let f = self.validation_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::config(
                "validation_fraction",
                format!("must lie in (0, 1), got {f}"),
            ));
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::config("lambda", format!("must be positive, got {l}")));
            }
        }
        if !self.gamma.is_finite() {
            return Err(Error::config("gamma", "must be finite"));
        }
        if self.n_neighbor_samples == Some(0) {
            return Err(Error::config("n_neighbor_samples", "must be at least 1"));
        }
        Ok(())
    }

    /// Number of maximized objectives that take part in dominance.
    pub fn n_active(&self) -> usize {
        if self.use_objective3 {
            3
        } else {
            2
        }
    }

    pub fn map_cardinality(&self, cr: f64) -> f64 {
        match self.lambda {
            Some(lambda) => sigmoid_map(cr, lambda, self.gamma),
            None => cr,
        }
    }
}

/// Accepts a number or the string `"none"`.
pub mod lambda_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Value(f64),
        Word(String),
    }

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => Repr::Value(*x).serialize(s),
            None => Repr::Word("none".into()).serialize(s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Value(x) => Ok(Some(x)),
            Repr::Word(w) if w.eq_ignore_ascii_case("none") => Ok(None),
            Repr::Word(w) => Err(serde::de::Error::custom(format!(
                "expected a number or \"none\", got {w:?}"
            ))),
        }
    }
}

/// Objective values of one chromosome; all three are maximized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub uar: f64,
    pub cr_mapped: f64,
    pub m_dist: f64,
    pub n_selected: usize,
}

impl ObjectiveVector {
    /// The first `n_active` maximized objectives.
    pub fn point(&self, n_active: usize) -> Vec<f64> {
        [self.uar, self.cr_mapped, self.m_dist][..n_active].to_vec()
    }
}

/// `(N_F - N_s) / N_F`.
pub fn cardinality_ratio(x: &Chromosome) -> f64 {
    let n = x.len() as f64;
    (n - x.count_ones() as f64) / n
}

/// Logistic map `1 / (1 + exp(-lambda (cr + gamma)))`.
pub fn sigmoid_map(cr: f64, lambda: f64, gamma: f64) -> f64 {
    1.0 / (1.0 + (-lambda * (cr + gamma)).exp())
}

pub fn objective2_sigmoid(x: &Chromosome, lambda: f64, gamma: f64) -> f64 {
    sigmoid_map(cardinality_ratio(x), lambda, gamma)
}

/// Balanced accuracy of each of the `n_tests` stratified splits.
pub fn split_uars(
    x: &Chromosome,
    view: &DataView<'_>,
    cfg: &ObjectiveConfig,
    classifier: &dyn Classifier,
    seed: u64,
) -> Result<Vec<f64>> {
    if !x.any() {
        return Err(Error::EmptyMask);
    }
    (0..cfg.n_tests)
        .map(|t| {
            let (train, validation) = split_for(view, cfg, seed, t)?;
            score_split(x, &train, &validation, classifier, seed)
        })
        .collect()
}

/// Mean balanced accuracy over `n_tests` seeded stratified splits of `view`.
pub fn objective1_uar(
    x: &Chromosome,
    view: &DataView<'_>,
    cfg: &ObjectiveConfig,
    classifier: &dyn Classifier,
    seed: u64,
) -> Result<f64> {
    let uars = split_uars(x, view, cfg, classifier, seed)?;
    Ok(uars.iter().sum::<f64>() / uars.len() as f64)
}

fn split_for<'a>(
    view: &DataView<'a>,
    cfg: &ObjectiveConfig,
    seed: u64,
    t: usize,
) -> Result<(DataView<'a>, DataView<'a>)> {
    let spec = SplitSpec::new(cfg.validation_fraction, derive_seed(seed, &[tag::SPLIT, t as u64]));
    stratified_split(view, &spec)
}

fn score_split(
    x: &Chromosome,
    train: &DataView<'_>,
    validation: &DataView<'_>,
    classifier: &dyn Classifier,
    seed: u64,
) -> Result<f64> {
    let train = train.project(x)?;
    let validation = validation.project(x)?;
    let predictions = classifier.fit_predict(&train, &validation, seed)?;
    uar(&predictions, &validation.labels(), validation.class_count())
}

/// Mean over `n_samples` random instances of
/// `(L1 to nearest miss - L1 to nearest hit) / N_s` in the projected space.
///
/// Instances are drawn uniformly with replacement. Ties between equally near
/// neighbours resolve to the lowest row.
pub fn objective3_distance(
    x: &Chromosome,
    view: &DataView<'_>,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    if n_samples == 0 {
        return Err(Error::config("n_neighbor_samples", "must be at least 1"));
    }
    let projected = view.project(x)?;
    let n = projected.n_rows();
    let s = projected.n_cols();
    let matrix = projected.to_row_major();
    let labels = projected.labels();
    let row = |i: usize| &matrix[i * s..(i + 1) * s];
    let l1 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q).abs()).sum::<f64>();

    let mut rng = rng_from(seed, &[tag::DISTANCE]);
    let mut total = 0.0;
    for _ in 0..n_samples {
        let i = rng.random_range(0..n);
        let anchor = row(i);
        let mut hit = f64::INFINITY;
        let mut miss = f64::INFINITY;
        for j in 0..n {
            if j == i {
                continue;
            }
            let d = l1(anchor, row(j));
            if labels[j] == labels[i] {
                if d < hit {
                    hit = d;
                }
            } else if d < miss {
                miss = d;
            }
        }
        if !hit.is_finite() {
            return Err(Error::Dataset(format!(
                "class {} has no second member in the sampled partition",
                labels[i]
            )));
        }
        if !miss.is_finite() {
            return Err(Error::Dataset("partition contains a single class".into()));
        }
        total += (miss - hit) / s as f64;
    }
    Ok(total / n_samples as f64)
}

/// Scores chromosomes against a fixed search set and memoizes the results.
///
/// Each chromosome's random streams derive from the base seed and the
/// chromosome's content, so a subset has one well-defined objective vector
/// per run, independent of when, where, or on which thread it is evaluated.
pub struct Evaluator<'a> {
    search: DataView<'a>,
    cfg: ObjectiveConfig,
    classifier: Box<dyn Classifier + 'a>,
    cache: RwLock<HashMap<Chromosome, ObjectiveVector>>,
    computed: AtomicUsize,
    requested: AtomicUsize,
}

impl<'a> Evaluator<'a> {
    pub fn new(search: DataView<'a>, cfg: ObjectiveConfig) -> Result<Self> {
        let classifier = TreeClassifier {
            max_depth: cfg.max_depth,
        };
        Self::with_classifier(search, cfg, Box::new(classifier))
    }

    pub fn with_classifier(
        search: DataView<'a>,
        cfg: ObjectiveConfig,
        classifier: Box<dyn Classifier + 'a>,
    ) -> Result<Self> {
        cfg.validate()?;
        // every class must keep two members in the training partition
        let probe = SplitSpec::new(cfg.validation_fraction, 0);
        for (c, &n) in search.class_counts().iter().enumerate() {
            if n == 0 {
                continue;
            }
            let train = n.saturating_sub(probe.validation_count(n));
            if n < 2 || (cfg.use_objective3 && train < 2) {
                return Err(Error::ClassTooSmall {
                    label: search.dataset().class_names()[c].clone(),
                    count: n,
                    required: if cfg.use_objective3 { 3 } else { 2 },
                });
            }
        }
        if search.class_counts().iter().filter(|&&n| n > 0).count() < 2 {
            return Err(Error::Dataset("search set needs at least two classes".into()));
        }
        Ok(Self {
            search,
            cfg,
            classifier,
            cache: RwLock::new(HashMap::new()),
            computed: AtomicUsize::new(0),
            requested: AtomicUsize::new(0),
        })
    }

    pub fn config(&self) -> &ObjectiveConfig {
        &self.cfg
    }

    pub fn search_view(&self) -> &DataView<'a> {
        &self.search
    }

    pub fn n_features(&self) -> usize {
        self.search.n_cols()
    }

    pub fn classifier(&self) -> &dyn Classifier {
        self.classifier.as_ref()
    }

    /// Seed governing every random choice made while scoring `x`.
    pub fn chromosome_seed(&self, x: &Chromosome) -> u64 {
        derive_seed(self.cfg.base_seed, &[x.fingerprint()])
    }

    /// Objective vectors computed so far (cache misses).
    pub fn computed(&self) -> usize {
        self.computed.load(Ordering::Relaxed)
    }

    /// Objective vectors requested so far, cached or not.
    pub fn requested(&self) -> usize {
        self.requested.load(Ordering::Relaxed)
    }

    /// Computes without consulting the cache.
    pub fn compute(&self, x: &Chromosome) -> Result<ObjectiveVector> {
        if x.len() != self.n_features() {
            return Err(Error::LengthMismatch {
                expected: self.n_features(),
                actual: x.len(),
            });
        }
        if !x.any() {
            return Err(Error::EmptyMask);
        }
        let seed = self.chromosome_seed(x);
        let mut uar_sum = 0.0;
        let mut m_dist = 0.0;
        for t in 0..self.cfg.n_tests {
            let (train, validation) = split_for(&self.search, &self.cfg, seed, t)?;
            uar_sum += score_split(x, &train, &validation, self.classifier.as_ref(), seed)?;
            if t == 0 && self.cfg.use_objective3 {
                let n_samples = self
                    .cfg
                    .n_neighbor_samples
                    .unwrap_or_else(|| train.n_rows().min(64));
                m_dist = objective3_distance(x, &train, n_samples, seed)?;
            }
        }
        self.computed.fetch_add(1, Ordering::Relaxed);
        Ok(ObjectiveVector {
            uar: uar_sum / self.cfg.n_tests as f64,
            cr_mapped: self.cfg.map_cardinality(cardinality_ratio(x)),
            m_dist,
            n_selected: x.count_ones(),
        })
    }

    pub fn evaluate(&self, x: &Chromosome) -> Result<ObjectiveVector> {
        Ok(self.evaluate_batch(std::slice::from_ref(x))?[0])
    }

    /// Evaluates a batch, computing distinct unseen chromosomes in parallel.
    pub fn evaluate_batch(&self, xs: &[Chromosome]) -> Result<Vec<ObjectiveVector>> {
        self.requested.fetch_add(xs.len(), Ordering::Relaxed);
        let missing: Vec<&Chromosome> = {
            let cache = self.cache.read().expect("evaluation cache poisoned");
            let mut seen = HashSet::new();
            xs.iter()
                .filter(|x| !cache.contains_key(*x) && seen.insert(*x))
                .collect()
        };
        let fresh: Vec<ObjectiveVector> = missing
            .par_iter()
            .map(|x| self.compute(x))
            .collect::<Result<_>>()?;
        let mut cache = self.cache.write().expect("evaluation cache poisoned");
        for (x, v) in missing.into_iter().zip(fresh) {
            cache.insert(x.clone(), v);
        }
        Ok(xs.iter().map(|x| cache[x]).collect())
    }

    /// Balanced accuracy on `test` of a classifier trained on the whole
    /// search set restricted to `x`.
    pub fn holdout_uar(&self, x: &Chromosome, test: &DataView<'_>) -> Result<f64> {
        let train = self.search.project(x)?;
        let test = test.project(x)?;
        let seed = derive_seed(self.chromosome_seed(x), &[tag::HOLDOUT]);
        let predictions = self.classifier.fit_predict(&train, &test, seed)?;
        uar(&predictions, &test.labels(), test.class_count())
    }
}
