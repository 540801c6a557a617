//! Shared fixtures for the benchmarks.

use moeliga_core::baselines::{generate_synthetic, SyntheticSpec};
use moeliga_core::seed::rng_from;
use moeliga_core::{Chromosome, Dataset};
use rand::Rng;

/// Planted binary-class dataset with `n_features` columns, 5 informative.
pub fn planted(n_samples: usize, n_features: usize) -> Dataset {
    let spec = SyntheticSpec {
        n_samples,
        n_features,
        n_informative: 5,
        noise_level: 0.5,
        ..SyntheticSpec::default()
    };
    generate_synthetic(&spec).expect("valid synthetic spec").0
}

/// `n` random objective points in `m` dimensions on a coarse grid, so ranks tie.
pub fn random_points(n: usize, m: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng_from(seed, &[]);
    (0..n)
        .map(|_| (0..m).map(|_| rng.random_range(0..20) as f64 / 20.0).collect())
        .collect()
}

/// `n` random non-empty chromosomes with selection probability `p`.
pub fn random_chromosomes(n: usize, len: usize, p: f64, seed: u64) -> Vec<Chromosome> {
    let mut rng = rng_from(seed, &[]);
    (0..n)
        .map(|_| {
            let bits: Vec<bool> = (0..len).map(|_| rng.random_bool(p)).collect();
            let mut c = Chromosome::from_bools(&bits);
            c.repair(&mut rng);
            c
        })
        .collect()
}
