use moeliga_core::baselines::{generate_synthetic, SyntheticSpec};
use moeliga_core::evolution::{self, Embedding, Engine};
use moeliga_core::frontier::distance_to_ideal;
use moeliga_core::objectives::cardinality_ratio;
use moeliga_core::pareto::dominates;
use moeliga_core::seed::rng_from;
use moeliga_core::{Chromosome, Dataset, Evaluator, GaConfig, ObjectiveConfig, SharingConfig};
use rand::Rng;

fn small_ga(seed: u64) -> GaConfig {
    GaConfig {
        pop_size: 30,
        generations: 25,
        elite_count: 3,
        generational_gap: 3,
        sub_pop_size: 12,
        sub_generations: 6,
        n_subordinate: 2,
        sub_every: 5,
        seed,
        ..GaConfig::default()
    }
}

fn planted8(seed: u64) -> (Dataset, Vec<usize>) {
    generate_synthetic(&SyntheticSpec {
        n_samples: 120,
        n_features: 8,
        n_informative: 3,
        noise_level: 0.5,
        seed,
        ..Default::default()
    })
    .unwrap()
}

fn all_subsets(n: usize) -> Vec<Chromosome> {
    (1u32..(1 << n))
        .map(|m| Chromosome::from_bools(&(0..n).map(|i| m >> i & 1 == 1).collect::<Vec<_>>()))
        .collect()
}

#[test]
fn archive_holds_the_most_accurate_subset_of_an_exhaustive_scan() {
    let (data, _) = planted8(3);
    let cfg = ObjectiveConfig { base_seed: 5, ..Default::default() };
    let evaluator = Evaluator::new(data.view(), cfg).unwrap();
    let subsets = all_subsets(8);
    let scores = evaluator.evaluate_batch(&subsets).unwrap();
    let best_uar = scores.iter().map(|o| o.uar).fold(f64::MIN, f64::max);
    let fewest = scores.iter().filter(|o| o.uar == best_uar).map(|o| o.n_selected).min().unwrap();

    let result = evolution::run_with(&evaluator, &small_ga(1), &SharingConfig::default()).unwrap();
    assert!(
        result
            .archive
            .members
            .iter()
            .any(|m| m.objectives.uar == best_uar && m.objectives.n_selected == fewest),
        "missing ({best_uar}, {fewest})"
    );
}

#[test]
fn archive_is_never_dominated_by_anything_evaluated() {
    let (data, _) = planted8(4);
    let evaluator = Evaluator::new(data.view(), ObjectiveConfig::default()).unwrap();
    let result = evolution::run_with(&evaluator, &small_ga(2), &SharingConfig::default()).unwrap();
    let points: Vec<Vec<f64>> = result.archive.members.iter().map(|m| m.objectives.point(3)).collect();
    for p in &points {
        assert!(!points.iter().any(|q| dominates(q, p)));
    }
    assert!(result.population.iter().all(|x| x.chromosome.any()));
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let (data, _) = planted8(5);
    let go = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            evolution::run(&data.view(), &small_ga(9), &ObjectiveConfig::default(), &SharingConfig::default())
                .unwrap()
        })
    };
    let (a, b) = (go(1), go(3));
    assert_eq!(a.trace.records, b.trace.records);
    assert_eq!(a.front, b.front);
    assert_eq!(a.archive, b.archive);
}

#[test]
fn without_local_improvement_or_sharing_the_loop_still_runs() {
    let (data, _) = planted8(6);
    let ga = GaConfig { n_subordinate: 0, ..small_ga(3) };
    let sharing = SharingConfig { sigma: 1e-12, ..Default::default() };
    let r = evolution::run(&data.view(), &ga, &ObjectiveConfig::default(), &sharing).unwrap();
    assert_eq!(r.trace.records.len(), 25);
    assert!(r.trace.records.iter().all(|t| t.subordinate_generations_cumulative == 0));
}

#[test]
fn every_replacement_strategy_completes() {
    use moeliga_core::ReplacementStrategy::*;
    let (data, _) = planted8(7);
    for strategy in [Parent, Complete, Selection] {
        let ga = GaConfig { replacement_strategy: strategy, generations: 10, ..small_ga(4) };
        let r = evolution::run(&data.view(), &ga, &ObjectiveConfig::default(), &SharingConfig::default()).unwrap();
        assert_eq!(r.population.len(), 30, "{strategy:?}");
        assert!(!r.front.is_empty());
    }
}

/// Label is the XOR of two of the five template features; the other three
/// are noise.
fn xor_data(seed: u64) -> Dataset {
    let mut rng = rng_from(seed, &[]);
    let n = 160;
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let a = (i % 2) as f64;
        let b = (i / 2 % 2) as f64;
        let mut row: Vec<f64> = (0..8).map(|_| rng.random::<f64>()).collect();
        row[1] = a + 0.1 * rng.random::<f64>();
        row[6] = b + 0.1 * rng.random::<f64>();
        labels.push((i % 2) ^ (i / 2 % 2));
        rows.push(row);
    }
    Dataset::from_rows(&rows, labels).unwrap()
}

#[test]
fn subordinate_population_finds_the_best_sub_subset() {
    let data = xor_data(1);
    let cfg = ObjectiveConfig { use_objective3: false, ..Default::default() };
    let evaluator = Evaluator::new(data.view(), cfg).unwrap();
    let template = Chromosome::from_indices(8, &[0, 1, 3, 6, 7]);
    let embedding = Embedding::new(&template).unwrap();

    // oracle over all 31 non-empty sub-subsets
    let candidates: Vec<Chromosome> = all_subsets(5).iter().map(|r| embedding.decode(r)).collect();
    let scores = evaluator.evaluate_batch(&candidates).unwrap();
    let score = |i: usize| distance_to_ideal(scores[i].uar, cardinality_ratio(&candidates[i]));
    let best = (0..31).max_by(|&a, &b| score(a).total_cmp(&score(b)).then(b.cmp(&a))).unwrap();
    assert_eq!(candidates[best], Chromosome::from_indices(8, &[1, 6]));

    let sharing = SharingConfig::default();
    let engine = Engine { evaluator: &evaluator, sharing: &sharing, n_active: 2 };
    let ga = GaConfig { sub_pop_size: 16, sub_generations: 10, elite_count: 2, generational_gap: 2, ..GaConfig::default() };
    let hits = (0..5)
        .filter(|&s| {
            let mut rng = rng_from(s, &[]);
            let r = evolution::evolve_subordinate(&template, &engine, &ga, &mut rng).unwrap();
            assert!(r.best.is_subset_of(&template));
            r.best == candidates[best]
        })
        .count();
    assert!(hits >= 4, "{hits} of 5");
}

#[test]
fn configuration_errors_surface_before_any_generation() {
    let (data, _) = planted8(8);
    let bad = GaConfig { crossover_rate: -0.1, ..GaConfig::default() };
    let err = evolution::run(&data.view(), &bad, &ObjectiveConfig::default(), &SharingConfig::default()).unwrap_err();
    assert!(err.to_string().contains("crossover_rate"));
    let bad = SharingConfig { sigma: 0.0, ..Default::default() };
    assert!(evolution::run(&data.view(), &GaConfig::default(), &ObjectiveConfig::default(), &bad).is_err());
}
