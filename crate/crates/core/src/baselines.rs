//! Filter and greedy wrapper baselines, and a planted-feature data generator.

use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chromosome::Chromosome;
use crate::data::{DataView, Dataset};
use crate::error::{Error, Result};
use crate::objectives::{Evaluator, ObjectiveConfig};
use crate::seed::rng_from;

/// Synthetic classification data with a known set of informative features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_samples: usize,
    pub n_features: usize,
    pub n_informative: usize,
    pub n_classes: usize,
    /// Standard deviation around class means that sit one unit apart.
    pub noise_level: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_samples: 200,
            n_features: 100,
            n_informative: 5,
            n_classes: 2,
            noise_level: 0.3,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_features == 0 {
            return Err(Error::config("n_features", "must be at least 1"));
        }
        if self.n_informative > self.n_features {
            return Err(Error::config("n_informative", "cannot exceed n_features"));
        }
        if self.n_classes < 2 {
            return Err(Error::config("n_classes", "must be at least 2"));
        }
        if self.n_samples < 2 * self.n_classes {
            return Err(Error::config("n_samples", "need at least two samples per class"));
        }
        // means are one unit apart and must stay two noise levels apart
        if !(0.0..=0.5).contains(&self.noise_level) {
            return Err(Error::config("noise_level", "must lie in [0, 0.5]"));
        }
        Ok(())
    }
}

/// Draws a dataset and returns it with the sorted informative positions.
///
/// Rows cycle through the classes. With `b = ceil(log2 n_classes)`, the
/// informative feature `j` (in planted order) has class mean equal to bit
/// `j mod b` of the class index and standard deviation `noise_level`; every
/// other feature is standard normal.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(Dataset, Vec<usize>)> {
    spec.validate()?;
    let mut rng = rng_from(spec.seed, &[]);
    let mut planted = rand::seq::index::sample(&mut rng, spec.n_features, spec.n_informative).into_vec();
    planted.sort_unstable();
    let bits = (usize::BITS - (spec.n_classes - 1).leading_zeros()).max(1) as usize;
    let mut role = vec![None; spec.n_features];
    for (rank, &j) in planted.iter().enumerate() {
        role[j] = Some(rank % bits);
    }
    let labels: Vec<usize> = (0..spec.n_samples).map(|i| i % spec.n_classes).collect();
    let rows: Vec<Vec<f64>> = labels
        .iter()
        .map(|&y| {
            role.iter()
                .map(|r| match r {
                    Some(bit) => {
                        let mean = ((y >> bit) & 1) as f64;
                        Normal::new(mean, spec.noise_level)
                            .expect("validated noise level")
                            .sample(&mut rng)
                    }
                    None => StandardNormal.sample(&mut rng),
                })
                .collect()
        })
        .collect();
    Ok((Dataset::from_rows(&rows, labels)?, planted))
}

/// Equal-frequency bin of every row: a value's bin is fixed by the first
/// position it occupies in sorted order, so equal values share a bin.
pub fn equal_frequency_bins(values: &[f64], bins: usize) -> Vec<usize> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0; n];
    let mut first = 0;
    for pos in 0..n {
        if pos > 0 && values[order[pos]] != values[order[pos - 1]] {
            first = pos;
        }
        out[order[pos]] = first * bins / n;
    }
    out
}

/// Plug-in mutual information in nats between two discrete sequences.
pub fn mutual_information(x: &[usize], y: &[usize]) -> f64 {
    let n = x.len() as f64;
    let nx = x.iter().max().map_or(0, |m| m + 1);
    let ny = y.iter().max().map_or(0, |m| m + 1);
    let mut joint = vec![0usize; nx * ny];
    let mut px = vec![0usize; nx];
    let mut py = vec![0usize; ny];
    for (&a, &b) in x.iter().zip(y) {
        joint[a * ny + b] += 1;
        px[a] += 1;
        py[b] += 1;
    }
    let mut mi = 0.0;
    for a in 0..nx {
        for b in 0..ny {
            let c = joint[a * ny + b];
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (px[a] as f64 * py[b] as f64)).ln();
            }
        }
    }
    mi.max(0.0)
}

/// Features ordered by decreasing mutual information with the label, ties by
/// index, paired with their scores.
pub fn mi_rank(view: &DataView<'_>, bins: usize) -> Result<Vec<(usize, f64)>> {
    if bins < 2 {
        return Err(Error::config("bins", "must be at least 2"));
    }
    let labels = view.labels();
    let mut scored: Vec<(usize, f64)> = (0..view.n_cols())
        .into_par_iter()
        .map(|j| {
            let binned = equal_frequency_bins(&view.column_values(j), bins);
            (j, mutual_information(&binned, &labels))
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(scored)
}

/// One step of forward selection.
#[derive(Debug, Clone, PartialEq)]
pub struct SfsStep {
    pub added: usize,
    pub subset: Chromosome,
    pub uar: f64,
}

/// Greedy forward selection scored by the accuracy objective, starting from
/// the empty set and adding, at each size up to `max_k`, the feature whose
/// addition scores best (ties to the lowest index).
pub fn sfs_greedy(view: &DataView<'_>, max_k: usize, cfg: &ObjectiveConfig) -> Result<Vec<SfsStep>> {
    let cfg = ObjectiveConfig {
        use_objective3: false,
        ..cfg.clone()
    };
    let evaluator = Evaluator::new(view.clone(), cfg)?;
    sfs_with(&evaluator, max_k)
}

pub fn sfs_with(evaluator: &Evaluator<'_>, max_k: usize) -> Result<Vec<SfsStep>> {
    let n = evaluator.n_features();
    if max_k > n {
        return Err(Error::config("sfs_max_k", format!("{max_k} exceeds {n} features")));
    }
    let mut current = Chromosome::zeros(n);
    let mut steps = Vec::with_capacity(max_k);
    for _ in 0..max_k {
        let candidates: Vec<usize> = (0..n).filter(|&j| !current.get(j)).collect();
        let subsets: Vec<Chromosome> = candidates
            .iter()
            .map(|&j| {
                let mut c = current.clone();
                c.set(j, true);
                c
            })
            .collect();
        let scores = evaluator.evaluate_batch(&subsets)?;
        let mut best = 0;
        for (i, s) in scores.iter().enumerate() {
            if s.uar > scores[best].uar {
                best = i;
            }
        }
        current = subsets[best].clone();
        steps.push(SfsStep {
            added: candidates[best],
            subset: current.clone(),
            uar: scores[best].uar,
        });
    }
    Ok(steps)
}

/// Accuracy objective of each prefix of `order`, for sizes `1..=max_k`.
pub fn prefix_scores(order: &[usize], evaluator: &Evaluator<'_>, max_k: usize) -> Result<Vec<f64>> {
    let n = evaluator.n_features();
    let subsets: Vec<Chromosome> = (1..=max_k.min(order.len()))
        .map(|k| Chromosome::from_indices(n, &order[..k]))
        .collect();
    Ok(evaluator.evaluate_batch(&subsets)?.iter().map(|o| o.uar).collect())
}

/// Smallest size attaining the best score, with that score; `scores[k - 1]`
/// is the score at size `k`.
pub fn optimal_size_sweep(scores: &[f64]) -> Result<(usize, f64)> {
    if scores.is_empty() {
        return Err(Error::Empty("size sweep over no scores"));
    }
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    Ok((best + 1, scores[best]))
}
