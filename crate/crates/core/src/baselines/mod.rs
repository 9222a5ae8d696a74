//! Comparison optimizers sharing the evaluator, budget accounting, stopping
//! rule and result format of the search controller.

mod operators;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use operators::{polynomial_delta, polynomial_mutation, sbx_beta, sbx_crossover, Nsga2Config};

use crate::error::Result;
use crate::evaluator::Evaluator;
use crate::geometry::{predicted_error, ConditioningVector, SeedLibrary, CONDITIONING_DIM};
use crate::pareto::{rank_and_crowding, ObjectivePoint};
use crate::saes::{
    archive_best, archive_insert, best_errors, evaluate_batch, evaluation_budget, select_records,
    uniform_vector, Candidate, EvalRecord, GenerationStats, Method, RunResult, SearchTrace,
};
use crate::task::TaskSpec;

const ARCHIVE_CAPACITY: usize = 50;

/// Shared bookkeeping: history, elite archive and per-generation stats.
struct Tracker<'a> {
    spec: &'a TaskSpec,
    evaluator: &'a dyn Evaluator,
    history: Vec<EvalRecord>,
    archive: Vec<EvalRecord>,
    stats: Vec<GenerationStats>,
    budget: usize,
    unit: Vec<f64>,
}

impl<'a> Tracker<'a> {
    fn new(spec: &'a TaskSpec, evaluator: &'a dyn Evaluator, budget: usize) -> Self {
        Self {
            spec,
            evaluator,
            history: Vec::new(),
            archive: Vec::new(),
            stats: Vec::new(),
            budget,
            unit: vec![1.0; spec.num_objectives()],
        }
    }

    fn remaining(&self) -> usize {
        self.budget.saturating_sub(self.history.len())
    }

    fn done(&self) -> bool {
        self.remaining() == 0 || self.history.iter().any(EvalRecord::is_fully_valid)
    }

    /// Evaluates as many candidates as the budget allows as one generation
    /// and returns the new ids.
    fn evaluate(&mut self, mut candidates: Vec<Candidate>, generation: usize) -> Vec<usize> {
        candidates.truncate(self.remaining());
        let first = self.history.len();
        let records = evaluate_batch(
            self.spec,
            self.evaluator,
            candidates,
            first,
            generation,
            &self.unit,
        );
        for r in &records {
            archive_insert(&mut self.archive, r, ARCHIVE_CAPACITY);
        }
        self.history.extend(records);
        self.stats.push(GenerationStats {
            generation,
            evaluations: self.history.len(),
            best_errors: best_errors(&self.history, self.spec.num_objectives()),
            archive_best: archive_best(&self.archive),
            weights: Vec::new(),
            eta: None,
        });
        (first..self.history.len()).collect()
    }

    fn finish(self, method: Method, seed: u64) -> RunResult {
        let trace = SearchTrace {
            archive: self.archive.iter().map(|r| r.id).collect(),
            generations: self.stats,
            final_weights: Vec::new(),
            final_eta: None,
        };
        RunResult::assemble(self.spec, method, seed, self.history, trace)
    }
}

/// Index of the binary-tournament winner between two population slots:
/// lower rank, then larger crowding distance, then lower slot.
fn tournament<R: Rng>(ranks: &[(usize, f64)], rng: &mut R) -> usize {
    let a = rng.gen_range(0..ranks.len());
    let b = rng.gen_range(0..ranks.len());
    let order = ranks[a]
        .0
        .cmp(&ranks[b].0)
        .then(ranks[b].1.total_cmp(&ranks[a].1))
        .then(a.cmp(&b));
    if order.is_le() {
        a
    } else {
        b
    }
}

/// Generational NSGA-II: tournament mating, SBX, polynomial mutation and
/// elitist rank-and-crowding survival.
pub fn nsga2_run(
    spec: &TaskSpec,
    cfg: &Nsga2Config,
    evaluator: &dyn Evaluator,
    seed: u64,
) -> Result<RunResult> {
    cfg.validate()?;
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let budget = evaluation_budget(spec, cfg.population, cfg.max_generations);
    let mut tracker = Tracker::new(spec, evaluator, budget);
    let init = (0..cfg.population)
        .map(|_| Candidate::new(uniform_vector(&mut rng, CONDITIONING_DIM)))
        .collect();
    let ids = tracker.evaluate(init, 0);
    let mut population = select_records(&tracker.history, &ids, cfg.population);
    let mut generation = 0;
    while !tracker.done() && generation < cfg.max_generations {
        let points: Vec<ObjectivePoint> = population
            .iter()
            .map(|&id| ObjectivePoint::minimizing(id, tracker.history[id].ranking_errors()))
            .collect();
        let ranks = rank_and_crowding(&points);
        let mut children = Vec::with_capacity(cfg.population);
        while children.len() < cfg.population {
            let a = &tracker.history[population[tournament(&ranks, &mut rng)]];
            let b = &tracker.history[population[tournament(&ranks, &mut rng)]];
            let (c1, c2) = sbx_crossover(&a.x, &b.x, cfg, &mut rng);
            for (child, parent) in [(c1, a.id), (c2, b.id)] {
                let mut c = Candidate::new(polynomial_mutation(&child, cfg, &mut rng));
                c.parent = Some(parent);
                children.push(c);
            }
        }
        children.truncate(cfg.population);
        generation += 1;
        let new_ids = tracker.evaluate(children, generation);
        let mut pool = population.clone();
        pool.extend(new_ids);
        population = select_records(&tracker.history, &pool, cfg.population);
    }
    Ok(tracker.finish(Method::Nsga2, seed))
}

/// Uniform sampling in batches of `population`, one batch per generation.
pub fn random_search_run(
    spec: &TaskSpec,
    population: usize,
    max_generations: usize,
    evaluator: &dyn Evaluator,
    seed: u64,
) -> Result<RunResult> {
    spec.validate()?;
    let population = population.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let budget = evaluation_budget(spec, population, max_generations);
    let mut tracker = Tracker::new(spec, evaluator, budget);
    let mut generation = 0;
    loop {
        let batch = (0..population)
            .map(|_| Candidate::new(uniform_vector(&mut rng, CONDITIONING_DIM)))
            .collect();
        tracker.evaluate(batch, generation);
        if tracker.done() || generation >= max_generations {
            break;
        }
        generation += 1;
    }
    Ok(tracker.finish(Method::Random, seed))
}

/// The library entry with the lowest predicted error (first on ties), or the
/// box center for an empty library.
pub fn one_shot_candidate(spec: &TaskSpec, library: &SeedLibrary) -> ConditioningVector {
    library
        .entries
        .iter()
        .map(|e| (predicted_error(e, spec), e))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, e)| e.coords.clone())
        .unwrap_or_else(|| ConditioningVector::center(CONDITIONING_DIM))
}

/// A single generate-and-simulate pass with no correction.
pub fn one_shot_run(
    spec: &TaskSpec,
    evaluator: &dyn Evaluator,
    library: &SeedLibrary,
    seed: u64,
) -> Result<RunResult> {
    spec.validate()?;
    let mut tracker = Tracker::new(spec, evaluator, 1);
    tracker.evaluate(vec![Candidate::new(one_shot_candidate(spec, library))], 0);
    Ok(tracker.finish(Method::OneShot, seed))
}
