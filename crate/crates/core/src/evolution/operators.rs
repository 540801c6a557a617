//! Variation, selection and replacement operators.

use rand::Rng;

use super::Tier;
use crate::chromosome::Chromosome;
use crate::error::{Error, Result};
use crate::pareto::EvaluatedIndividual;

/// Tier sizes: `floor(fraction * pop_size)` each, remainder to the last tier.
pub fn tier_sizes(pop_size: usize, tiers: &[Tier]) -> Vec<usize> {
    let mut sizes: Vec<usize> = tiers
        .iter()
        .map(|t| (t.population_fraction * pop_size as f64).floor() as usize)
        .collect();
    let assigned: usize = sizes.iter().sum();
    if let Some(last) = sizes.last_mut() {
        *last += pop_size.saturating_sub(assigned);
    }
    sizes
}

/// Active genes for a chromosome of `n_features` in a tier: at least one.
pub fn tier_active_count(n_features: usize, active_fraction: f64) -> usize {
    ((active_fraction * n_features as f64).round() as usize).clamp(1, n_features)
}

/// Tiered random initialization: each tier receives its share of the
/// population, and each chromosome in it gets a fixed number of distinct
/// random active bits.
pub fn staggered_init<R: Rng + ?Sized>(
    n_features: usize,
    pop_size: usize,
    tiers: &[Tier],
    rng: &mut R,
) -> Vec<Chromosome> {
    let mut out = Vec::with_capacity(pop_size);
    for (tier, size) in tiers.iter().zip(tier_sizes(pop_size, tiers)) {
        let k = tier_active_count(n_features, tier.active_fraction);
        for _ in 0..size {
            let active = rand::seq::index::sample(rng, n_features, k).into_vec();
            out.push(Chromosome::from_indices(n_features, &active));
        }
    }
    out
}

fn check_weights(weights: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for (index, &w) in weights.iter().enumerate() {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::NonPositiveFitness { index, value: w });
        }
        total += w;
    }
    Ok(total)
}

/// `k` independent fitness-proportionate draws, with replacement.
pub fn roulette_select<R: Rng + ?Sized>(
    weights: &[f64],
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    let total = check_weights(weights)?;
    if weights.is_empty() {
        return Err(Error::Empty("roulette over an empty population"));
    }
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for &w in weights {
        acc += w;
        cumulative.push(acc);
    }
    Ok((0..k)
        .map(|_| {
            let r = rng.random::<f64>() * total;
            cumulative
                .partition_point(|&c| c <= r)
                .min(weights.len() - 1)
        })
        .collect())
}

/// `k` distinct fitness-proportionate draws.
pub fn roulette_without_replacement<R: Rng + ?Sized>(
    weights: &[f64],
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    check_weights(weights)?;
    if k > weights.len() {
        return Err(Error::LengthMismatch {
            expected: weights.len(),
            actual: k,
        });
    }
    let mut remaining: Vec<usize> = (0..weights.len()).collect();
    let mut picked = Vec::with_capacity(k);
    for _ in 0..k {
        let w: Vec<f64> = remaining.iter().map(|&i| weights[i]).collect();
        let pos = roulette_select(&w, 1, rng)?[0];
        picked.push(remaining.remove(pos));
    }
    Ok(picked)
}

/// With probability `rate`, single-point crossover at a cut drawn uniformly
/// from `1..len`; otherwise copies. Children are repaired to keep at least one
/// active bit.
pub fn crossover<R: Rng + ?Sized>(
    a: &Chromosome,
    b: &Chromosome,
    rate: f64,
    rng: &mut R,
) -> (Chromosome, Chromosome) {
    assert_eq!(a.len(), b.len(), "parents differ in length");
    let (mut c1, mut c2) = (a.clone(), b.clone());
    if a.len() >= 2 && rng.random_bool(rate) {
        let cut = rng.random_range(1..a.len());
        for i in cut..a.len() {
            c1.set(i, b.get(i));
            c2.set(i, a.get(i));
        }
    }
    c1.repair(rng);
    c2.repair(rng);
    (c1, c2)
}

/// With probability `rate` the chromosome mutates, flipping each bit
/// independently with probability `1/len`; then it is repaired.
pub fn mutate<R: Rng + ?Sized>(x: &Chromosome, rate: f64, rng: &mut R) -> Chromosome {
    let mut out = x.clone();
    if !x.is_empty() && rng.random_bool(rate) {
        let p = 1.0 / x.len() as f64;
        for i in 0..x.len() {
            if rng.random_bool(p) {
                out.flip(i);
            }
        }
    }
    out.repair(rng);
    out
}

/// Indices sorted by descending normalized fitness, ties by index.
pub fn fitness_order(pop: &[EvaluatedIndividual]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pop.len()).collect();
    order.sort_by(|&a, &b| {
        pop[b]
            .normalized_fitness
            .total_cmp(&pop[a].normalized_fitness)
            .then(a.cmp(&b))
    });
    order
}

/// Next population: the `elite_count` best of `old` by normalized fitness,
/// `generational_gap` roulette picks from `old`, then offspring up to the
/// population size.
pub fn elitist_replace<R: Rng + ?Sized>(
    old: &[EvaluatedIndividual],
    offspring: Vec<Chromosome>,
    elite_count: usize,
    generational_gap: usize,
    rng: &mut R,
) -> Result<Vec<Chromosome>> {
    let pop_size = old.len();
    let needed = pop_size.saturating_sub(elite_count + generational_gap);
    if offspring.len() < needed {
        return Err(Error::LengthMismatch {
            expected: needed,
            actual: offspring.len(),
        });
    }
    let mut next: Vec<Chromosome> = fitness_order(old)
        .into_iter()
        .take(elite_count)
        .map(|i| old[i].chromosome.clone())
        .collect();
    let weights: Vec<f64> = old.iter().map(|x| x.normalized_fitness).collect();
    for i in roulette_select(&weights, generational_gap, rng)? {
        next.push(old[i].chromosome.clone());
    }
    next.extend(offspring.into_iter().take(needed));
    Ok(next)
}

/// The `k` best distinct chromosomes: highest normalized fitness, then fewer
/// selected features, then index.
pub fn best_distinct(pop: &[EvaluatedIndividual], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pop.len()).collect();
    order.sort_by(|&a, &b| {
        pop[b]
            .normalized_fitness
            .total_cmp(&pop[a].normalized_fitness)
            .then(pop[a].objectives.n_selected.cmp(&pop[b].objectives.n_selected))
            .then(a.cmp(&b))
    });
    let mut seen = std::collections::HashSet::new();
    order
        .into_iter()
        .filter(|&i| seen.insert(&pop[i].chromosome))
        .take(k)
        .collect()
}
