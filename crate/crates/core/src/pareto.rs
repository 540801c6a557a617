//! Pareto ranking, rank-based fitness, cluster-based fitness sharing and
//! per-rank normalization.
//!
//! All objectives are maximized. The pipeline for one population is
//! [`assign_ranks`] → [`rank_fitness`] → [`form_clusters`] →
//! [`shared_fitness`] → [`normalize_fitness`]; [`assign_fitness`] runs all of
//! it.

use serde::{Deserialize, Serialize};

use crate::chromosome::Chromosome;
use crate::error::{Error, Result};
use crate::objectives::ObjectiveVector;

/// `a` is no worse than `b` everywhere and strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    debug_assert_eq!(a.len(), b.len());
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return false;
        }
        if x > y {
            strictly = true;
        }
    }
    strictly
}

/// Number of points dominating each point.
pub fn dominator_counts<P: AsRef<[f64]>>(points: &[P]) -> Vec<usize> {
    let n = points.len();
    let mut counts = vec![0; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (points[i].as_ref(), points[j].as_ref());
            if dominates(a, b) {
                counts[j] += 1;
            } else if dominates(b, a) {
                counts[i] += 1;
            }
        }
    }
    counts
}

/// Rank = 1 + number of dominators.
pub fn assign_ranks<P: AsRef<[f64]>>(points: &[P]) -> Vec<usize> {
    dominator_counts(points).into_iter().map(|c| c + 1).collect()
}

/// `f = N - sum_{k < r} n_k - (n_r - 1) / 2`, where `n_k` counts individuals
/// of rank `k`: the mean of the positions a rank would occupy in a sorted
/// population.
pub fn rank_fitness(ranks: &[usize]) -> Vec<f64> {
    let n = ranks.len();
    let max_rank = ranks.iter().copied().max().unwrap_or(0);
    let mut per_rank = vec![0usize; max_rank + 1];
    for &r in ranks {
        per_rank[r] += 1;
    }
    let mut better = vec![0usize; max_rank + 1];
    for r in 1..=max_rank {
        better[r] = better[r - 1] + per_rank[r - 1];
    }
    ranks
        .iter()
        .map(|&r| n as f64 - better[r] as f64 - (per_rank[r] as f64 - 1.0) / 2.0)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SharingSpace {
    /// Euclidean distance of min-max normalized objective vectors.
    Objective,
    /// Root mean squared bit difference of chromosomes.
    #[default]
    Decision,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SharingConfig {
    /// Niche radius.
    pub sigma: f64,
    /// Taper of the sharing function.
    pub alpha: f64,
    pub space: SharingSpace,
}

impl Default for SharingConfig {
    fn default() -> Self {
        Self {
            sigma: 0.0025,
            alpha: 1.0,
            space: SharingSpace::Decision,
        }
    }
}

impl SharingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::config("sigma", format!("must be positive, got {}", self.sigma)));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::config("alpha", format!("must be positive, got {}", self.alpha)));
        }
        Ok(())
    }

    /// `S(d) = 1 - (d / sigma)^alpha`.
    pub fn sharing(&self, d: f64) -> f64 {
        1.0 - (d / self.sigma).powf(self.alpha)
    }
}

/// Observed per-objective extremes of one generation.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveBounds {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl ObjectiveBounds {
    pub fn from_points<P: AsRef<[f64]>>(points: &[P]) -> Self {
        let m = points.first().map_or(0, |p| p.as_ref().len());
        let mut min = vec![f64::INFINITY; m];
        let mut max = vec![f64::NEG_INFINITY; m];
        for p in points {
            for (j, &v) in p.as_ref().iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Self { min, max }
    }
}

/// Normalized Euclidean distance in objective space. A coordinate whose
/// observed range is empty contributes nothing.
pub fn objective_distance(a: &[f64], b: &[f64], bounds: &ObjectiveBounds) -> f64 {
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(j, (x, y))| {
            let range = bounds.max[j] - bounds.min[j];
            if range > 0.0 {
                ((x - y) / range).powi(2)
            } else {
                0.0
            }
        })
        .sum::<f64>()
        .sqrt()
}

/// `sqrt(hamming / N)`.
pub fn decision_distance(a: &Chromosome, b: &Chromosome) -> f64 {
    (a.hamming(b) as f64 / a.len() as f64).sqrt()
}

/// A niche: a centroid individual and every individual within `sigma` of it
/// (the centroid included).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub centroid: usize,
    pub members: Vec<usize>,
}

/// Leader clustering.
///
/// Individuals are visited in descending `fitness` (ties by index). One that
/// lies closer than `sigma` to existing centroids joins all of those clusters;
/// otherwise it founds a new cluster as its centroid. Centroids are therefore
/// pairwise at least `sigma` apart and each belongs only to its own cluster.
pub fn form_clusters(
    fitness: &[f64],
    sigma: f64,
    distance: impl Fn(usize, usize) -> f64,
) -> Vec<Cluster> {
    let mut order: Vec<usize> = (0..fitness.len()).collect();
    order.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]).then(a.cmp(&b)));
    let mut clusters: Vec<Cluster> = Vec::new();
    for i in order {
        let mut joined = false;
        for cluster in &mut clusters {
            if distance(i, cluster.centroid) < sigma {
                cluster.members.push(i);
                joined = true;
            }
        }
        if !joined {
            clusters.push(Cluster {
                centroid: i,
                members: vec![i],
            });
        }
    }
    clusters
}

/// Lower bound on the per-cluster penalty factor, so exact duplicates of a
/// centroid keep a small positive fitness.
pub const MIN_SHARING_FACTOR: f64 = 1e-3;

/// Sequential multiplicative penalization: starting from `f`, for each cluster
/// containing `x` (in creation order, skipping the cluster `x` itself leads),
/// `f' *= 1 - S(d(x, centroid)) = (d / sigma)^alpha`, floored at
/// [`MIN_SHARING_FACTOR`].
pub fn shared_fitness(
    fitness: &[f64],
    clusters: &[Cluster],
    cfg: &SharingConfig,
    distance: impl Fn(usize, usize) -> f64,
) -> Vec<f64> {
    let mut shared = fitness.to_vec();
    for cluster in clusters {
        for &m in &cluster.members {
            if m == cluster.centroid {
                continue;
            }
            let factor = (distance(m, cluster.centroid) / cfg.sigma).powf(cfg.alpha);
            shared[m] *= factor.max(MIN_SHARING_FACTOR);
        }
    }
    shared
}

/// `f'' = f * f' / sum_{same rank} f'`.
pub fn normalize_fitness(fitness: &[f64], shared: &[f64], ranks: &[usize]) -> Vec<f64> {
    let max_rank = ranks.iter().copied().max().unwrap_or(0);
    let mut totals = vec![0.0; max_rank + 1];
    for (&r, &s) in ranks.iter().zip(shared) {
        totals[r] += s;
    }
    fitness
        .iter()
        .zip(shared)
        .zip(ranks)
        .map(|((&f, &s), &r)| f * s / totals[r])
        .collect()
}

/// Output of the whole fitness pipeline, one entry per individual.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessAssignment {
    pub ranks: Vec<usize>,
    pub fitness: Vec<f64>,
    pub shared: Vec<f64>,
    pub normalized: Vec<f64>,
    pub clusters: Vec<Cluster>,
}

/// Runs ranking, rank fitness, sharing and normalization for one population.
///
/// `points` holds the maximized objectives; `chromosomes` is consulted only for
/// decision-space sharing and must then have the same length as `points`.
pub fn assign_fitness<P: AsRef<[f64]>>(
    points: &[P],
    chromosomes: &[&Chromosome],
    cfg: &SharingConfig,
) -> FitnessAssignment {
    let ranks = assign_ranks(points);
    let fitness = rank_fitness(&ranks);
    let bounds = ObjectiveBounds::from_points(points);
    let distance = |i: usize, j: usize| match cfg.space {
        SharingSpace::Objective => {
            objective_distance(points[i].as_ref(), points[j].as_ref(), &bounds)
        }
        SharingSpace::Decision => decision_distance(chromosomes[i], chromosomes[j]),
    };
    let clusters = form_clusters(&fitness, cfg.sigma, distance);
    let shared = shared_fitness(&fitness, &clusters, cfg, distance);
    let normalized = normalize_fitness(&fitness, &shared, &ranks);
    FitnessAssignment {
        ranks,
        fitness,
        shared,
        normalized,
        clusters,
    }
}

/// A chromosome with its objectives and fitness within its population.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatedIndividual {
    pub chromosome: Chromosome,
    pub objectives: ObjectiveVector,
    pub rank: usize,
    pub fitness: f64,
    pub shared_fitness: f64,
    pub normalized_fitness: f64,
}

/// Attaches ranks and fitness to already-scored chromosomes.
///
/// `sharing_chromosomes` are the bit strings used for decision-space distances;
/// they may differ from the stored chromosomes (e.g. reduced-space encodings).
pub fn evaluate_population(
    chromosomes: Vec<Chromosome>,
    objectives: Vec<ObjectiveVector>,
    sharing_chromosomes: &[&Chromosome],
    n_active: usize,
    cfg: &SharingConfig,
) -> Vec<EvaluatedIndividual> {
    let points: Vec<Vec<f64>> = objectives.iter().map(|o| o.point(n_active)).collect();
    let fa = assign_fitness(&points, sharing_chromosomes, cfg);
    chromosomes
        .into_iter()
        .zip(objectives)
        .enumerate()
        .map(|(i, (chromosome, objectives))| EvaluatedIndividual {
            chromosome,
            objectives,
            rank: fa.ranks[i],
            fitness: fa.fitness[i],
            shared_fitness: fa.shared[i],
            normalized_fitness: fa.normalized[i],
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dominance_examples() {
        assert!(dominates(&[0.9, 0.8, 0.1], &[0.8, 0.8, 0.1]));
        assert!(!dominates(&[0.8, 0.8, 0.1], &[0.9, 0.8, 0.1]));
        assert!(!dominates(&[0.5, 0.5], &[0.5, 0.5]));
        assert!(!dominates(&[1.0, 0.0], &[0.0, 1.0]));
    }

    #[test]
    fn rank_examples() {
        assert_eq!(assign_ranks(&[vec![0.3, 0.3]]), vec![1]);
        let chain = [vec![3.0, 3.0], vec![2.0, 2.0], vec![1.0, 1.0]];
        assert_eq!(assign_ranks(&chain), vec![1, 2, 3]);
        // mutually non-dominated points all dominating the last one
        let pts = [vec![5.0, 1.0], vec![4.0, 2.0], vec![3.0, 3.0], vec![2.0, 4.0], vec![1.0, 0.5]];
        assert_eq!(assign_ranks(&pts), vec![1, 1, 1, 1, 5]);
        let pts = [vec![5.0, 5.0], vec![4.0, 4.0], vec![3.0, 3.0], vec![2.0, 2.0], vec![1.0, 1.0]];
        assert_eq!(assign_ranks(&pts)[4], 5);
    }

    #[test]
    fn fitness_worked_example() {
        let ranks = [1, 1, 2, 2, 2, 3, 3, 3, 3, 4];
        let f = rank_fitness(&ranks);
        assert_eq!(f[5], 3.5);
        assert_eq!(f[0], 9.5);
        assert_eq!(f[2], 7.0);
        assert_eq!(f[9], 1.0);
    }

    #[test]
    fn fitness_all_nondominated() {
        let f = rank_fitness(&[1; 10]);
        assert!(f.iter().all(|&v| v == 10.0 - 4.5));
    }

    #[test]
    fn fitness_of_a_chain() {
        // n_k = 1 for every k: f = N - (r - 1)
        let ranks: Vec<usize> = (1..=10).collect();
        let expected: Vec<f64> = (1..=10).rev().map(|v| v as f64).collect();
        assert_eq!(rank_fitness(&ranks), expected);
    }

    #[test]
    fn distance_examples() {
        let a = Chromosome::from_bit_str("1100").unwrap();
        let b = Chromosome::from_bit_str("0011").unwrap();
        assert_eq!(decision_distance(&a, &a), 0.0);
        assert_eq!(decision_distance(&a, &b), 1.0);
        let bounds = ObjectiveBounds { min: vec![0.0, 0.0], max: vec![1.0, 1.0] };
        assert_eq!(objective_distance(&[0.0, 0.0], &[1.0, 1.0], &bounds), 2f64.sqrt());
        assert_eq!(objective_distance(&[0.2, 0.4], &[0.2, 0.4], &bounds), 0.0);
        let flat = ObjectiveBounds { min: vec![0.0, 0.5], max: vec![1.0, 0.5] };
        assert_eq!(objective_distance(&[0.0, 0.5], &[1.0, 0.5], &flat), 1.0);
    }

    fn line_distance(xs: &'static [f64]) -> impl Fn(usize, usize) -> f64 {
        move |i, j| (xs[i] - xs[j]).abs()
    }

    #[test]
    fn identical_points_form_one_cluster() {
        static XS: [f64; 4] = [0.0; 4];
        let clusters = form_clusters(&[1.0; 4], 0.1, line_distance(&XS));
        assert_eq!(clusters, vec![Cluster { centroid: 0, members: vec![0, 1, 2, 3] }]);
    }

    #[test]
    fn distant_points_are_singletons() {
        static XS: [f64; 2] = [0.0, 1.0];
        let clusters = form_clusters(&[1.0, 1.0], 0.5, line_distance(&XS));
        assert_eq!(clusters.len(), 2);
        let shared = shared_fitness(&[3.0, 2.0], &clusters, &SharingConfig { sigma: 0.5, ..Default::default() }, line_distance(&XS));
        assert_eq!(shared, vec![3.0, 2.0]);
    }

    #[test]
    fn overlapping_clusters_on_a_line() {
        // Hand trace, sigma = 1.0, visiting order by fitness: 2, 0, 4, 1, 3.
        //   2 (x=2.0): founds A
        //   0 (x=0.0): 2.0 from A -> founds B
        //   4 (x=4.0): 2.0 from A, 4.0 from B -> founds C
        //   1 (x=0.6): 1.4 from A, 0.6 from B -> joins B
        //   3 (x=2.9): 0.9 from A, 2.9 from B, 1.1 from C -> joins A
        static XS: [f64; 5] = [0.0, 0.6, 2.0, 2.9, 4.0];
        let fitness = [4.0, 2.0, 5.0, 1.0, 3.0];
        let clusters = form_clusters(&fitness, 1.0, line_distance(&XS));
        assert_eq!(
            clusters,
            vec![
                Cluster { centroid: 2, members: vec![2, 3] },
                Cluster { centroid: 0, members: vec![0, 1] },
                Cluster { centroid: 4, members: vec![4] },
            ]
        );
        // A point between two centroids belongs to both.
        static YS: [f64; 3] = [0.0, 1.5, 0.75];
        let clusters = form_clusters(&[3.0, 2.0, 1.0], 1.0, line_distance(&YS));
        assert_eq!(clusters[0].members, vec![0, 2]);
        assert_eq!(clusters[1].members, vec![1, 2]);
    }

    #[test]
    fn sharing_penalties() {
        let cfg = SharingConfig { sigma: 1.0, alpha: 1.0, space: SharingSpace::Objective };
        // one foreign centroid at sigma / 2
        static XS: [f64; 2] = [0.0, 0.5];
        let clusters = form_clusters(&[2.0, 1.0], 1.0, line_distance(&XS));
        let shared = shared_fitness(&[2.0, 1.0], &clusters, &cfg, line_distance(&XS));
        assert_eq!(shared, vec![2.0, 0.5]);
        // two centroids at 0.25 sigma and 0.5 sigma
        static YS: [f64; 3] = [0.0, 0.75, 0.25];
        let clusters = vec![
            Cluster { centroid: 0, members: vec![0, 2] },
            Cluster { centroid: 1, members: vec![1, 2] },
        ];
        let shared = shared_fitness(&[1.0, 1.0, 8.0], &clusters, &cfg, line_distance(&YS));
        assert_eq!(shared[2], 8.0 * 0.25 * 0.5);
    }

    #[test]
    fn duplicates_keep_positive_fitness() {
        static XS: [f64; 3] = [0.0, 0.0, 0.0];
        let cfg = SharingConfig { sigma: 0.1, ..Default::default() };
        let clusters = form_clusters(&[1.0; 3], 0.1, line_distance(&XS));
        let shared = shared_fitness(&[1.0; 3], &clusters, &cfg, line_distance(&XS));
        assert!(shared.iter().all(|&s| s > 0.0));
        assert_eq!(shared[0], 1.0);
    }

    #[test]
    fn normalization_examples() {
        assert_eq!(normalize_fitness(&[4.0], &[2.0], &[1]), vec![4.0]);
        assert_eq!(normalize_fitness(&[6.0, 6.0], &[3.0, 3.0], &[1, 1]), vec![3.0, 3.0]);
        let n = normalize_fitness(&[6.0; 3], &[0.5, 1.0, 1.5], &[2; 3]);
        for (got, want) in n.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    fn brute_force_ranks(points: &[Vec<f64>]) -> Vec<usize> {
        // written from the definition: count y with y >= x everywhere and > somewhere
        points
            .iter()
            .map(|x| {
                1 + points
                    .iter()
                    .filter(|y| {
                        y.iter().zip(x.iter()).all(|(a, b)| a >= b)
                            && y.iter().zip(x.iter()).any(|(a, b)| a > b)
                    })
                    .count()
            })
            .collect()
    }

    fn grid_points(m: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        // coarse grid values force plenty of ties
        proptest::collection::vec(proptest::collection::vec((0u8..6).prop_map(|v| v as f64 / 5.0), m), 1..60)
    }

    proptest! {
        #[test]
        fn ranks_match_brute_force(points in (2usize..=3).prop_flat_map(grid_points)) {
            prop_assert_eq!(assign_ranks(&points), brute_force_ranks(&points));
        }

        #[test]
        fn fitness_constant_within_rank_and_decreasing(points in grid_points(2)) {
            let ranks = assign_ranks(&points);
            let f = rank_fitness(&ranks);
            for i in 0..ranks.len() {
                prop_assert!(f[i] > 0.0);
                for j in 0..ranks.len() {
                    if ranks[i] == ranks[j] {
                        prop_assert_eq!(f[i], f[j]);
                    } else if ranks[i] < ranks[j] {
                        prop_assert!(f[i] > f[j]);
                    }
                }
            }
        }

        #[test]
        fn normalization_preserves_within_rank_order(
            bits in proptest::collection::vec(proptest::collection::vec(any::<bool>(), 12), 2..40),
            sigma in 0.05f64..0.8,
        ) {
            let chromosomes: Vec<Chromosome> = bits.iter().map(|b| Chromosome::from_bools(b)).collect();
            let points: Vec<Vec<f64>> = chromosomes.iter().map(|c| {
                let a = c.active_indices();
                vec![a.iter().filter(|&&i| i < 6).count() as f64, -(c.count_ones() as f64)]
            }).collect();
            let refs: Vec<&Chromosome> = chromosomes.iter().collect();
            let fa = assign_fitness(&points, &refs, &SharingConfig { sigma, alpha: 1.0, space: SharingSpace::Decision });
            for i in 0..points.len() {
                prop_assert!(fa.normalized[i] > 0.0);
                for j in 0..points.len() {
                    if fa.ranks[i] == fa.ranks[j] && fa.shared[i] < fa.shared[j] {
                        prop_assert!(fa.normalized[i] <= fa.normalized[j]);
                    }
                }
            }
        }

        #[test]
        fn permutation_invariance_without_ties(
            raw in proptest::collection::btree_set(0u16..1000, 2..30),
            rot in 0usize..30,
        ) {
            // a dominance chain: every rank, hence every fitness, is distinct
            let points: Vec<Vec<f64>> = raw.iter().rev().map(|&a| vec![a as f64 / 1000.0; 2]).collect();
            let cfg = SharingConfig { sigma: 0.3, alpha: 1.0, space: SharingSpace::Objective };
            let fa = assign_fitness(&points, &[], &cfg);
            let k = rot % points.len();
            let mut rotated = points.clone();
            rotated.rotate_left(k);
            let fb = assign_fitness(&rotated, &[], &cfg);
            for i in 0..points.len() {
                let j = (i + points.len() - k) % points.len();
                prop_assert_eq!(fa.ranks[i], fb.ranks[j]);
                prop_assert_eq!(fa.shared[i], fb.shared[j]);
                prop_assert!((fa.normalized[i] - fb.normalized[j]).abs() < 1e-12);
            }
        }
    }
}
