//! Local improvement: subordinate populations evolved inside the feature
//! subset of a main-population chromosome.

use rand::Rng;

use super::operators::{fitness_order, roulette_without_replacement};
use super::{Engine, GaConfig, ReplacementStrategy, StepParams};
use crate::chromosome::Chromosome;
use crate::error::{Error, Result};
use crate::frontier::distance_to_ideal;
use crate::objectives::{cardinality_ratio, ObjectiveVector};
use crate::pareto::EvaluatedIndividual;

/// Maps reduced-space chromosomes onto the active positions of a template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Embedding {
    positions: Vec<usize>,
    n_features: usize,
}

impl Embedding {
    pub fn new(template: &Chromosome) -> Result<Self> {
        if !template.any() {
            return Err(Error::EmptyMask);
        }
        Ok(Self {
            positions: template.active_indices(),
            n_features: template.len(),
        })
    }

    /// Length of the reduced space.
    pub fn reduced_len(&self) -> usize {
        self.positions.len()
    }

    /// Bit `i` of `reduced` becomes the `i`-th active position of the template.
    pub fn decode(&self, reduced: &Chromosome) -> Chromosome {
        assert_eq!(reduced.len(), self.positions.len(), "reduced chromosome length");
        let active: Vec<usize> = reduced
            .active_indices()
            .into_iter()
            .map(|i| self.positions[i])
            .collect();
        Chromosome::from_indices(self.n_features, &active)
    }
}

/// Initial subordinate population over the template's active features: the
/// all-ones image of the template plus random half-density chromosomes.
pub fn spawn_subordinate<R: Rng + ?Sized>(
    template: &Chromosome,
    sub_size: usize,
    rng: &mut R,
) -> Result<Vec<Chromosome>> {
    let n = Embedding::new(template)?.reduced_len();
    let mut pop = Vec::with_capacity(sub_size);
    if sub_size > 0 {
        pop.push(Chromosome::ones(n));
    }
    while pop.len() < sub_size {
        let bits: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let mut c = Chromosome::from_bools(&bits);
        c.repair(rng);
        pop.push(c);
    }
    Ok(pop)
}

#[derive(Debug, Clone)]
pub struct SubordinateResult {
    /// Best final individual, in full-length coordinates.
    pub best: Chromosome,
    pub best_objectives: ObjectiveVector,
    /// Whole final population, in full-length coordinates.
    pub population: Vec<(Chromosome, ObjectiveVector)>,
}

/// Evolves a subordinate population for `ga.sub_generations` generations and
/// returns the member closest to the ideal of (validation UAR, cardinality
/// ratio over the full feature set).
pub fn evolve_subordinate<R: Rng + ?Sized>(
    template: &Chromosome,
    engine: &Engine<'_, '_>,
    ga: &GaConfig,
    rng: &mut R,
) -> Result<SubordinateResult> {
    let embedding = Embedding::new(template)?;
    let params = StepParams {
        elite_count: ga.elite_count,
        generational_gap: ga.generational_gap,
        crossover_rate: ga.crossover_rate,
        mutation_rate: ga.mutation_rate,
    };
    let initial = spawn_subordinate(template, ga.sub_pop_size, rng)?;
    let mut pop = engine.evaluate(initial, Some(&embedding))?;
    for _ in 0..ga.sub_generations {
        pop = engine.step(&pop, &params, Some(&embedding), rng)?;
    }
    let population: Vec<(Chromosome, ObjectiveVector)> = pop
        .iter()
        .map(|x| (embedding.decode(&x.chromosome), x.objectives))
        .collect();
    let score = |(c, o): &(Chromosome, ObjectiveVector)| distance_to_ideal(o.uar, cardinality_ratio(c));
    let best = (0..population.len())
        .min_by(|&a, &b| {
            score(&population[b])
                .total_cmp(&score(&population[a]))
                .then(population[a].1.n_selected.cmp(&population[b].1.n_selected))
                .then(a.cmp(&b))
        })
        .ok_or(Error::Empty("subordinate population"))?;
    Ok(SubordinateResult {
        best: population[best].0.clone(),
        best_objectives: population[best].1,
        population,
    })
}

/// At least as accurate and no larger, strictly better in one of the two.
pub fn weakly_improves(candidate: &ObjectiveVector, incumbent: &ObjectiveVector) -> bool {
    candidate.uar >= incumbent.uar
        && candidate.n_selected <= incumbent.n_selected
        && (candidate.uar > incumbent.uar || candidate.n_selected < incumbent.n_selected)
}

/// Merges subordinate results (one per entry of `parents`) into the main
/// population and re-ranks it.
pub fn apply_replacement<R: Rng + ?Sized>(
    main: &[EvaluatedIndividual],
    parents: &[usize],
    results: &[SubordinateResult],
    strategy: ReplacementStrategy,
    engine: &Engine<'_, '_>,
    rng: &mut R,
) -> Result<Vec<EvaluatedIndividual>> {
    if parents.len() != results.len() {
        return Err(Error::LengthMismatch {
            expected: parents.len(),
            actual: results.len(),
        });
    }
    let pop_size = main.len();
    let mut chromosomes: Vec<Chromosome> = main.iter().map(|x| x.chromosome.clone()).collect();
    let mut objectives: Vec<ObjectiveVector> = main.iter().map(|x| x.objectives).collect();
    if strategy == ReplacementStrategy::Parent {
        for (&p, r) in parents.iter().zip(results) {
            if weakly_improves(&r.best_objectives, &objectives[p]) {
                chromosomes[p] = r.best.clone();
                objectives[p] = r.best_objectives;
            }
        }
        return Ok(engine.rank(chromosomes, objectives));
    }
    for r in results {
        for (c, o) in &r.population {
            chromosomes.push(c.clone());
            objectives.push(*o);
        }
    }
    let pool = engine.rank(chromosomes, objectives);
    let keep = match strategy {
        ReplacementStrategy::Complete => fitness_order(&pool).into_iter().take(pop_size).collect(),
        _ => {
            let weights: Vec<f64> = pool.iter().map(|x| x.normalized_fitness).collect();
            roulette_without_replacement(&weights, pop_size, rng)?
        }
    };
    let (c, o) = keep
        .into_iter()
        .map(|i| (pool[i].chromosome.clone(), pool[i].objectives))
        .unzip();
    Ok(engine.rank(c, o))
}
