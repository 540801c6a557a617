//! Wrapper classifier (a Gini decision tree) and the balanced-accuracy metric.

use crate::data::DataView;
use crate::error::{Error, Result};

/// Anything that can be trained on one view and label another.
pub trait Classifier: Send + Sync {
    fn fit_predict(&self, train: &DataView<'_>, test: &DataView<'_>, seed: u64)
        -> Result<Vec<usize>>;
}

/// Depth-limited CART-style classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeClassifier {
    pub max_depth: usize,
}

impl Default for TreeClassifier {
    fn default() -> Self {
        Self { max_depth: 100 }
    }
}

impl Classifier for TreeClassifier {
    fn fit_predict(
        &self,
        train: &DataView<'_>,
        test: &DataView<'_>,
        seed: u64,
    ) -> Result<Vec<usize>> {
        DecisionTree::train(train, self.max_depth, seed)?.predict(test)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        class: usize,
    },
}

/// Binary tree over the columns of the view it was trained on. Samples with
/// `value <= threshold` go left.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    n_features: usize,
    max_depth: usize,
}

pub const MIN_SAMPLES_SPLIT: usize = 2;

struct Builder<'c> {
    columns: &'c [Vec<f64>],
    labels: &'c [usize],
    n_classes: usize,
    max_depth: usize,
    nodes: Vec<Node>,
    scratch: Vec<(f64, usize)>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl Builder<'_> {
    fn counts(&self, samples: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &s in samples {
            counts[self.labels[s]] += 1;
        }
        counts
    }

    fn grow(&mut self, samples: Vec<usize>, depth: usize) -> usize {
        let counts = self.counts(&samples);
        let majority = argmax_lowest(&counts);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { class: majority });
        if pure || depth >= self.max_depth || samples.len() < MIN_SAMPLES_SPLIT {
            return id;
        }
        let Some(best) = self.best_split(&samples) else {
            return id;
        };
        let column = &self.columns[best.feature];
        let (left, right): (Vec<usize>, Vec<usize>) =
            samples.into_iter().partition(|&s| column[s] <= best.threshold);
        let left = self.grow(left, depth + 1);
        let right = self.grow(right, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    /// Maximizes `sum(l_c^2)/n_l + sum(r_c^2)/n_r`, which is equivalent to
    /// minimizing the weighted Gini impurity of the children. Ties keep the
    /// lowest feature, then the lowest threshold.
    fn best_split(&mut self, samples: &[usize]) -> Option<BestSplit> {
        let n = samples.len();
        let total = self.counts(samples);
        let mut best: Option<BestSplit> = None;
        let mut left = vec![0usize; self.n_classes];
        for (feature, column) in self.columns.iter().enumerate() {
            self.scratch.clear();
            self.scratch
                .extend(samples.iter().map(|&s| (column[s], self.labels[s])));
            self.scratch
                .sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if self.scratch[0].0 == self.scratch[n - 1].0 {
                continue;
            }
            left.iter_mut().for_each(|c| *c = 0);
            let mut left_sq = 0.0f64;
            let mut right_sq: f64 = total.iter().map(|&c| (c * c) as f64).sum();
            for i in 0..n - 1 {
                let (v, y) = self.scratch[i];
                // moving one sample of class y from right to left
                let l = left[y] as f64;
                let r = (total[y] - left[y]) as f64;
                left_sq += 2.0 * l + 1.0;
                right_sq -= 2.0 * r - 1.0;
                left[y] += 1;
                let next = self.scratch[i + 1].0;
                if v == next {
                    continue;
                }
                let n_left = (i + 1) as f64;
                let score = left_sq / n_left + right_sq / (n as f64 - n_left);
                let better = match &best {
                    None => true,
                    Some(b) => score > b.score + 1e-12 * b.score.abs().max(1.0),
                };
                if better {
                    let mut threshold = 0.5 * (v + next);
                    if threshold >= next {
                        threshold = v;
                    }
                    best = Some(BestSplit {
                        feature,
                        threshold,
                        score,
                    });
                }
            }
        }
        best
    }
}

fn argmax_lowest(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}

impl DecisionTree {
    /// Greedy top-down induction. Growth stops at `max_depth`, at pure nodes,
    /// at nodes with fewer than [`MIN_SAMPLES_SPLIT`] samples, or when every
    /// feature is constant within the node. Zero-gain splits are allowed so
    /// interactions such as XOR remain learnable.
    ///
    /// Induction is fully deterministic; `seed` is accepted for interface
    /// compatibility with randomized learners.
    pub fn train(view: &DataView<'_>, max_depth: usize, _seed: u64) -> Result<Self> {
        if view.n_rows() == 0 {
            return Err(Error::Empty("training view has no rows"));
        }
        if view.n_cols() == 0 {
            return Err(Error::Empty("training view has no columns"));
        }
        let columns: Vec<Vec<f64>> = (0..view.n_cols()).map(|c| view.column_values(c)).collect();
        let labels = view.labels();
        let mut builder = Builder {
            columns: &columns,
            labels: &labels,
            n_classes: view.class_count(),
            max_depth,
            nodes: Vec::new(),
            scratch: Vec::with_capacity(view.n_rows()),
        };
        builder.grow((0..view.n_rows()).collect(), 0);
        Ok(Self {
            nodes: builder.nodes,
            n_features: view.n_cols(),
            max_depth,
        })
    }

    pub fn predict(&self, view: &DataView<'_>) -> Result<Vec<usize>> {
        if view.n_cols() != self.n_features {
            return Err(Error::LengthMismatch {
                expected: self.n_features,
                actual: view.n_cols(),
            });
        }
        Ok((0..view.n_rows())
            .map(|r| self.predict_with(|f| view.value(r, f)))
            .collect())
    }

    pub fn predict_row(&self, row: &[f64]) -> usize {
        self.predict_with(|f| row[f])
    }

    fn predict_with(&self, value: impl Fn(usize) -> f64) -> usize {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf { class } => return class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if value(feature) <= threshold { left } else { right },
            }
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Per-class hits and misses of a labelling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionTally {
    pub true_positives: Vec<usize>,
    pub false_negatives: Vec<usize>,
}

impl ConfusionTally {
    pub fn new(predictions: &[usize], truth: &[usize], class_count: usize) -> Result<Self> {
        if predictions.len() != truth.len() {
            return Err(Error::LengthMismatch {
                expected: truth.len(),
                actual: predictions.len(),
            });
        }
        if truth.is_empty() {
            return Err(Error::Empty("no labels to score"));
        }
        let mut tp = vec![0; class_count];
        let mut fneg = vec![0; class_count];
        for (&p, &t) in predictions.iter().zip(truth) {
            if t >= class_count || p >= class_count {
                return Err(Error::Dataset(format!(
                    "label out of range 0..{class_count}"
                )));
            }
            if p == t {
                tp[t] += 1;
            } else {
                fneg[t] += 1;
            }
        }
        Ok(Self {
            true_positives: tp,
            false_negatives: fneg,
        })
    }

    /// Recall of class `c`, or `None` when the class never occurs.
    pub fn recall(&self, c: usize) -> Option<f64> {
        let support = self.true_positives[c] + self.false_negatives[c];
        (support > 0).then(|| self.true_positives[c] as f64 / support as f64)
    }

    /// Mean recall over the classes present in the truth.
    pub fn uar(&self) -> f64 {
        let recalls: Vec<f64> = (0..self.true_positives.len())
            .filter_map(|c| self.recall(c))
            .collect();
        recalls.iter().sum::<f64>() / recalls.len() as f64
    }
}

/// Unweighted average recall (balanced accuracy).
pub fn uar(predictions: &[usize], truth: &[usize], class_count: usize) -> Result<f64> {
    Ok(ConfusionTally::new(predictions, truth, class_count)?.uar())
}
