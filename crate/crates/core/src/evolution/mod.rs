//! The main generational loop with subordinate-population local improvement.

pub mod operators;
pub mod subordinate;

use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chromosome::Chromosome;
use crate::data::DataView;
use crate::error::{Error, Result};
use crate::frontier::{median, ParetoArchive, ParetoFront};
use crate::objectives::{Evaluator, ObjectiveConfig, ObjectiveVector};
use crate::pareto::{evaluate_population, EvaluatedIndividual, SharingConfig};
use crate::seed::{rng_from, tag};

pub use operators::{crossover, elitist_replace, mutate, roulette_select, staggered_init};
pub use subordinate::{apply_replacement, evolve_subordinate, spawn_subordinate, Embedding, SubordinateResult};

/// One initialization tier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tier {
    /// Share of the population drawn from this tier.
    pub population_fraction: f64,
    /// Share of the features active in each chromosome of this tier.
    pub active_fraction: f64,
}

/// How subordinate results are merged into the main population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReplacementStrategy {
    /// A parent gives way to its subordinate best only if that is at least
    /// as accurate and no larger, and strictly better in one of the two.
    #[default]
    #[serde(alias = "pr")]
    Parent,
    /// Main and subordinate individuals are pooled and the fittest kept.
    #[serde(alias = "cr")]
    Complete,
    /// Main and subordinate individuals are pooled and survivors drawn by
    /// roulette without replacement.
    #[serde(alias = "sr")]
    Selection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub pop_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub elite_count: usize,
    pub generational_gap: usize,
    pub tiers: Vec<Tier>,
    pub sub_pop_size: usize,
    pub sub_generations: usize,
    /// Number of subordinate populations per local-improvement phase.
    pub n_subordinate: usize,
    /// Local improvement runs on generations divisible by this.
    pub sub_every: usize,
    pub replacement_strategy: ReplacementStrategy,
    /// Count subordinate generations against `generations`.
    pub subordinate_consumes_budget: bool,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            pop_size: 90,
            generations: 300,
            crossover_rate: 0.9,
            mutation_rate: 0.15,
            elite_count: 10,
            generational_gap: 10,
            tiers: vec![
                Tier { population_fraction: 0.55, active_fraction: 0.03 },
                Tier { population_fraction: 0.30, active_fraction: 0.15 },
                Tier { population_fraction: 0.15, active_fraction: 0.35 },
            ],
            sub_pop_size: 50,
            sub_generations: 70,
            n_subordinate: 3,
            sub_every: 5,
            replacement_strategy: ReplacementStrategy::Parent,
            subordinate_consumes_budget: false,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let rate = |key: &'static str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::config(key, format!("must lie in [0, 1], got {v}")))
            }
        };
        rate("crossover_rate", self.crossover_rate)?;
        rate("mutation_rate", self.mutation_rate)?;
        if self.pop_size < 2 {
            return Err(Error::config("pop_size", "must be at least 2"));
        }
        if self.elite_count + self.generational_gap > self.pop_size {
            return Err(Error::config(
                "elite_count",
                format!(
                    "elite_count + generational_gap ({}) exceeds pop_size ({})",
                    self.elite_count + self.generational_gap,
                    self.pop_size
                ),
            ));
        }
        if self.tiers.is_empty() {
            return Err(Error::config("tiers", "at least one tier is required"));
        }
        for t in &self.tiers {
            if !(0.0..=1.0).contains(&t.population_fraction) {
                return Err(Error::config("tiers", "population_fraction must lie in [0, 1]"));
            }
            if !(t.active_fraction > 0.0 && t.active_fraction <= 1.0) {
                return Err(Error::config("tiers", "active_fraction must lie in (0, 1]"));
            }
        }
        let total: f64 = self.tiers.iter().map(|t| t.population_fraction).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::config("tiers", format!("population fractions sum to {total}, not 1")));
        }
        if self.n_subordinate > 0 {
            if self.sub_every == 0 {
                return Err(Error::config("sub_every", "must be at least 1"));
            }
            if self.elite_count + self.generational_gap > self.sub_pop_size {
                return Err(Error::config(
                    "sub_pop_size",
                    "must be at least elite_count + generational_gap",
                ));
            }
            if self.n_subordinate > self.pop_size {
                return Err(Error::config("n_subordinate", "cannot exceed pop_size"));
            }
        }
        Ok(())
    }
}

/// Per-generation statistics of the main population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub generation: usize,
    pub best_uar: f64,
    pub median_uar: f64,
    /// Subset size of the most accurate individual.
    pub best_n_selected: usize,
    /// Distinct rank-1 chromosomes.
    pub front_size: usize,
    /// Objective vectors requested so far, main and subordinate.
    pub evals_cumulative: usize,
    pub subordinate_generations_cumulative: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    pub wall_time: Duration,
}

impl RunTrace {
    pub const COLUMNS: [&'static str; 7] = [
        "generation",
        "best_uar",
        "median_uar",
        "best_n_selected",
        "front_size",
        "evals_cumulative",
        "subordinate_generations_cumulative",
    ];

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        let err = |e: csv::Error| Error::FrontFormat(e.to_string());
        w.write_record(Self::COLUMNS).map_err(err)?;
        for r in &self.records {
            w.serialize(r).map_err(err)?;
        }
        w.flush().map_err(|e| Error::FrontFormat(e.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub population: Vec<EvaluatedIndividual>,
    /// Rank-1 members of the final population.
    pub front: ParetoFront,
    /// Non-dominated set of every chromosome evaluated in the main or a
    /// subordinate population.
    pub archive: ParetoFront,
    pub trace: RunTrace,
}

/// Evolves populations over one evaluator, optionally in a reduced space.
pub struct Engine<'e, 'a> {
    pub evaluator: &'e Evaluator<'a>,
    pub sharing: &'e SharingConfig,
    pub n_active: usize,
}

pub struct StepParams {
    pub elite_count: usize,
    pub generational_gap: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
}

impl Engine<'_, '_> {
    /// Scores `chromosomes`, decoding through `embedding` for evaluation
    /// while sharing distances use the stored encoding.
    pub fn evaluate(
        &self,
        chromosomes: Vec<Chromosome>,
        embedding: Option<&Embedding>,
    ) -> Result<Vec<EvaluatedIndividual>> {
        let objectives = match embedding {
            Some(e) => {
                let full: Vec<Chromosome> = chromosomes.iter().map(|c| e.decode(c)).collect();
                self.evaluator.evaluate_batch(&full)?
            }
            None => self.evaluator.evaluate_batch(&chromosomes)?,
        };
        Ok(self.rank(chromosomes, objectives))
    }

    pub fn rank(
        &self,
        chromosomes: Vec<Chromosome>,
        objectives: Vec<ObjectiveVector>,
    ) -> Vec<EvaluatedIndividual> {
        let refs: Vec<Chromosome> = chromosomes.clone();
        let refs: Vec<&Chromosome> = refs.iter().collect();
        evaluate_population(chromosomes, objectives, &refs, self.n_active, self.sharing)
    }

    /// Selection, variation and elitist replacement for one generation.
    pub fn step<R: Rng + ?Sized>(
        &self,
        pop: &[EvaluatedIndividual],
        params: &StepParams,
        embedding: Option<&Embedding>,
        rng: &mut R,
    ) -> Result<Vec<EvaluatedIndividual>> {
        let n_offspring = pop.len() - params.elite_count - params.generational_gap;
        let weights: Vec<f64> = pop.iter().map(|x| x.normalized_fitness).collect();
        let mut offspring = Vec::with_capacity(n_offspring + 1);
        while offspring.len() < n_offspring {
            let parents = roulette_select(&weights, 2, rng)?;
            let (c1, c2) = crossover(
                &pop[parents[0]].chromosome,
                &pop[parents[1]].chromosome,
                params.crossover_rate,
                rng,
            );
            offspring.push(mutate(&c1, params.mutation_rate, rng));
            offspring.push(mutate(&c2, params.mutation_rate, rng));
        }
        offspring.truncate(n_offspring);
        let next = elitist_replace(
            pop,
            offspring,
            params.elite_count,
            params.generational_gap,
            rng,
        )?;
        self.evaluate(next, embedding)
    }
}

fn record(
    generation: usize,
    pop: &[EvaluatedIndividual],
    evals: usize,
    sub_generations: usize,
) -> TraceRecord {
    let uars: Vec<f64> = pop.iter().map(|x| x.objectives.uar).collect();
    let best = pop
        .iter()
        .min_by(|a, b| {
            b.objectives
                .uar
                .total_cmp(&a.objectives.uar)
                .then(a.objectives.n_selected.cmp(&b.objectives.n_selected))
        })
        .expect("population is not empty");
    let front: std::collections::HashSet<&Chromosome> = pop
        .iter()
        .filter(|x| x.rank == 1)
        .map(|x| &x.chromosome)
        .collect();
    TraceRecord {
        generation,
        best_uar: best.objectives.uar,
        median_uar: median(&uars),
        best_n_selected: best.objectives.n_selected,
        front_size: front.len(),
        evals_cumulative: evals,
        subordinate_generations_cumulative: sub_generations,
    }
}

/// Runs the full algorithm on `search`, building a tree-based evaluator.
pub fn run(
    search: &DataView<'_>,
    ga: &GaConfig,
    objectives: &ObjectiveConfig,
    sharing: &SharingConfig,
) -> Result<RunResult> {
    ga.validate()?;
    sharing.validate()?;
    let evaluator = Evaluator::new(search.clone(), objectives.clone())?;
    run_with(&evaluator, ga, sharing)
}

/// Runs the full algorithm against an existing evaluator.
pub fn run_with(evaluator: &Evaluator<'_>, ga: &GaConfig, sharing: &SharingConfig) -> Result<RunResult> {
    ga.validate()?;
    sharing.validate()?;
    let started = Instant::now();
    let n_features = evaluator.n_features();
    let engine = Engine {
        evaluator,
        sharing,
        n_active: evaluator.config().n_active(),
    };
    let params = StepParams {
        elite_count: ga.elite_count,
        generational_gap: ga.generational_gap,
        crossover_rate: ga.crossover_rate,
        mutation_rate: ga.mutation_rate,
    };
    let evals_before = evaluator.requested();
    let mut archive = ParetoArchive::new(engine.n_active);
    let mut rng = rng_from(ga.seed, &[tag::INIT]);
    let mut pop = engine.evaluate(staggered_init(n_features, ga.pop_size, &ga.tiers, &mut rng), None)?;
    for x in &pop {
        archive.insert(&x.chromosome, x.objectives);
    }
    let mut rng = rng_from(ga.seed, &[tag::GENERATION]);
    let mut trace = RunTrace::default();
    let mut sub_generations = 0usize;
    let mut generation = 0usize;
    while generation < ga.generations {
        if ga.subordinate_consumes_budget && generation + sub_generations >= ga.generations {
            break;
        }
        generation += 1;
        pop = engine.step(&pop, &params, None, &mut rng)?;

        if ga.n_subordinate > 0 && generation.is_multiple_of(ga.sub_every) {
            let parents = operators::best_distinct(&pop, ga.n_subordinate);
            let results = parents
                .par_iter()
                .enumerate()
                .map(|(slot, &p)| {
                    let mut sub_rng =
                        rng_from(ga.seed, &[tag::SUBORDINATE, generation as u64, slot as u64]);
                    evolve_subordinate(&pop[p].chromosome, &engine, ga, &mut sub_rng)
                })
                .collect::<Result<Vec<_>>>()?;
            for r in &results {
                for (c, o) in &r.population {
                    archive.insert(c, *o);
                }
            }
            sub_generations += ga.sub_generations * results.len();
            let mut replace_rng = rng_from(ga.seed, &[tag::REPLACE, generation as u64]);
            pop = apply_replacement(
                &pop,
                &parents,
                &results,
                ga.replacement_strategy,
                &engine,
                &mut replace_rng,
            )?;
        }

        for x in &pop {
            archive.insert(&x.chromosome, x.objectives);
        }
        trace.records.push(record(
            generation,
            &pop,
            evaluator.requested() - evals_before,
            sub_generations,
        ));
        log::debug!(
            "generation {generation}: best uar {:.4}, front {}",
            trace.records.last().map_or(0.0, |r| r.best_uar),
            trace.records.last().map_or(0, |r| r.front_size)
        );
    }
    trace.wall_time = started.elapsed();
    let front = ParetoFront::from_candidates(
        "",
        generation,
        n_features,
        engine.n_active,
        pop.iter()
            .filter(|x| x.rank == 1)
            .map(|x| (x.chromosome.clone(), x.objectives)),
    );
    let archive = archive.to_front("", generation, n_features);
    Ok(RunResult {
        population: pop,
        front,
        archive,
        trace,
    })
}
