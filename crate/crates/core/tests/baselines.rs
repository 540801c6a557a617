use moeliga_core::baselines::{
    generate_synthetic, mi_rank, optimal_size_sweep, prefix_scores, sfs_greedy, sfs_with, SyntheticSpec,
};
use moeliga_core::seed::rng_from;
use moeliga_core::{Chromosome, Dataset, Evaluator, ObjectiveConfig};
use rand::Rng;

fn accuracy_only() -> ObjectiveConfig {
    ObjectiveConfig { use_objective3: false, ..Default::default() }
}

fn planted(seed: u64) -> (Dataset, Vec<usize>) {
    generate_synthetic(&SyntheticSpec {
        n_samples: 200,
        n_features: 30,
        n_informative: 4,
        noise_level: 0.1,
        seed,
        ..Default::default()
    })
    .unwrap()
}

#[test]
fn mi_ranking_puts_planted_features_first() {
    let hits = (0..5)
        .filter(|&s| {
            let (data, planted) = planted(s);
            let mut top: Vec<usize> = mi_rank(&data.view(), 10).unwrap()[..4].iter().map(|p| p.0).collect();
            top.sort_unstable();
            top == planted
        })
        .count();
    assert!(hits >= 4, "{hits} of 5");
}

#[test]
fn forward_selection_starts_with_a_planted_feature() {
    let hits = (0..5)
        .filter(|&s| {
            let (data, planted) = planted(s);
            let steps = sfs_greedy(&data.view(), 2, &accuracy_only()).unwrap();
            planted.contains(&steps[0].added)
        })
        .count();
    assert!(hits >= 4, "{hits} of 5");
}

#[test]
fn uninformative_data_scores_near_chance() {
    let (data, _) = generate_synthetic(&SyntheticSpec {
        n_samples: 300,
        n_features: 6,
        n_informative: 0,
        n_classes: 3,
        seed: 2,
        ..Default::default()
    })
    .unwrap();
    let evaluator = Evaluator::new(data.view(), accuracy_only()).unwrap();
    let u = evaluator.evaluate(&Chromosome::ones(6)).unwrap().uar;
    assert!((u - 1.0 / 3.0).abs() < 0.1, "{u}");
}

#[test]
fn greedy_pair_never_beats_exhaustive_pair_on_xor() {
    let mut rng = rng_from(8, &[]);
    let n = 120;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..6).map(|_| rng.random::<f64>()).collect();
            row[2] = (i % 2) as f64;
            row[4] = (i / 2 % 2) as f64;
            row
        })
        .collect();
    let labels = (0..n).map(|i| (i % 2) ^ (i / 2 % 2)).collect();
    let data = Dataset::from_rows(&rows, labels).unwrap();
    let evaluator = Evaluator::new(data.view(), accuracy_only()).unwrap();
    let steps = sfs_with(&evaluator, 2).unwrap();
    let mut best_pair = f64::MIN;
    for a in 0..6 {
        for b in a + 1..6 {
            best_pair = best_pair.max(evaluator.evaluate(&Chromosome::from_indices(6, &[a, b])).unwrap().uar);
        }
    }
    assert!(steps[1].uar <= best_pair);
    assert_eq!(best_pair, 1.0);
}

#[test]
fn ranking_sweep_returns_the_smallest_best_prefix() {
    let (data, planted) = planted(1);
    let evaluator = Evaluator::new(data.view(), accuracy_only()).unwrap();
    let order: Vec<usize> = mi_rank(&data.view(), 10).unwrap().into_iter().map(|p| p.0).collect();
    let scores = prefix_scores(&order, &evaluator, 10).unwrap();
    assert_eq!(scores.len(), 10);
    let (k, best) = optimal_size_sweep(&scores).unwrap();
    assert!(scores[..k - 1].iter().all(|&s| s < best));
    assert!(scores.iter().all(|&s| s <= best));
    assert!(k <= planted.len() + 6);
}
