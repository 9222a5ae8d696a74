//! Simulation-aware evolutionary search.
//!
//! Each generation estimates a local gradient of the weighted error utility
//! around every parent from nearby history, steps each parent along it,
//! evaluates the offspring, keeps the best of parents and offspring by
//! non-dominated rank and crowding, feeds the elite archive, and rebalances
//! objective weights that stall.

mod archive;
mod gradient;
mod record;
mod update;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use archive::{archive_best, archive_insert, prune_index};
pub use gradient::{
    distance_weight, estimate_gradient, mad_filter, temporal_weight, GradientEstimate,
    GradientFlag, Sample,
};
pub use record::{
    best_errors, evaluate_batch, score, utility, Candidate, EvalRecord, GenerationStats, Method,
    RunResult, RunStatus, RunSummaryRecord, SearchTrace, FAILED_ERROR, INFEASIBLE_PENALTY,
};
pub use update::{
    adjust_weight, classify, detect_stagnation, directed_step, perturb_duplicate, propose_update,
    update_weights, Proposal, Trend,
};

use crate::error::{Error, Result};
use crate::evaluator::Evaluator;
use crate::geometry::{retrieve_seeds, ConditioningVector, SeedLibrary, CONDITIONING_DIM};
use crate::pareto::{select, ObjectivePoint};
use crate::task::TaskSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SaesConfig {
    pub population: usize,
    pub archive_capacity: usize,
    pub max_generations: usize,
    /// Neighbors used by the gradient estimate.
    pub window_m: usize,
    pub temporal_decay_lambda: f64,
    pub outlier_mad_threshold: f64,
    pub base_step_eta: f64,
    pub noise_beta: f64,
    pub momentum: f64,
    pub momentum_enabled: bool,
    pub stagnation_window: usize,
    pub weight_min: f64,
    pub weight_max: f64,
    pub stagnation_delta: f64,
    pub fast_convergence_delta: f64,
    pub stagnation_threshold: f64,
    pub fast_threshold: f64,
    pub eta_min: f64,
    pub eta_max: f64,
    pub eta_grow: f64,
    pub eta_shrink: f64,
    /// Ridge added to a rank-deficient normal matrix, relative to its mean
    /// diagonal.
    pub ridge_scale: f64,
    pub duplicate_radius: f64,
    pub duplicate_amplitude: f64,
}

impl Default for SaesConfig {
    fn default() -> Self {
        Self {
            population: 20,
            archive_capacity: 50,
            max_generations: 10,
            window_m: 5,
            temporal_decay_lambda: 0.5,
            outlier_mad_threshold: 2.5,
            base_step_eta: 0.1,
            noise_beta: 0.05,
            momentum: 0.3,
            momentum_enabled: true,
            stagnation_window: 3,
            weight_min: 0.1,
            weight_max: 2.0,
            stagnation_delta: 0.25,
            fast_convergence_delta: -0.10,
            stagnation_threshold: 1e-3,
            fast_threshold: 0.05,
            eta_min: 0.01,
            eta_max: 0.3,
            eta_grow: 1.2,
            eta_shrink: 0.5,
            ridge_scale: 1e-8,
            duplicate_radius: 1e-6,
            duplicate_amplitude: 0.05,
        }
    }
}

impl SaesConfig {
    /// Defaults with population and generation count taken from the task.
    pub fn for_task(spec: &TaskSpec) -> Self {
        Self {
            population: spec.budget.population,
            max_generations: spec.budget.max_generations,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("temporal_decay_lambda", self.temporal_decay_lambda),
            ("outlier_mad_threshold", self.outlier_mad_threshold),
            ("base_step_eta", self.base_step_eta),
            ("weight_min", self.weight_min),
            ("eta_min", self.eta_min),
            ("eta_grow", self.eta_grow),
            ("eta_shrink", self.eta_shrink),
            ("duplicate_radius", self.duplicate_radius),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        let non_negative = [
            ("noise_beta", self.noise_beta),
            ("momentum", self.momentum),
            ("ridge_scale", self.ridge_scale),
            ("duplicate_amplitude", self.duplicate_amplitude),
            ("stagnation_threshold", self.stagnation_threshold),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0) {
                return Err(Error::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.weight_min >= self.weight_max {
            return Err(Error::Config("weight_min must be below weight_max".into()));
        }
        if self.eta_min > self.eta_max {
            return Err(Error::Config("eta_min must not exceed eta_max".into()));
        }
        if self.population < 2 || self.window_m == 0 || self.stagnation_window == 0 {
            return Err(Error::Config(
                "population >= 2, window_m >= 1 and stagnation_window >= 1 required".into(),
            ));
        }
        Ok(())
    }
}

/// Simulator calls allowed for a run with this population and length.
pub fn evaluation_budget(spec: &TaskSpec, population: usize, max_generations: usize) -> usize {
    spec.budget
        .max_evaluations
        .unwrap_or(population * (max_generations + 1))
}

/// Uniform sample of the unit box.
pub fn uniform_vector<R: Rng>(rng: &mut R, dim: usize) -> ConditioningVector {
    ConditioningVector::new((0..dim).map(|_| rng.gen::<f64>()).collect())
}

/// Next population: `n` ids chosen by rank and crowding over `ids`.
pub fn select_records(history: &[EvalRecord], ids: &[usize], n: usize) -> Vec<usize> {
    let points: Vec<ObjectivePoint> = ids
        .iter()
        .map(|&id| ObjectivePoint::minimizing(id, history[id].ranking_errors()))
        .collect();
    select(&points, n)
}

pub struct OptimizerState {
    /// Current parents, as history ids.
    pub population: Vec<usize>,
    pub history: Vec<EvalRecord>,
    pub archive: Vec<EvalRecord>,
    pub weights: Vec<f64>,
    pub eta: f64,
    pub generation: usize,
    /// Best-so-far error per objective after each generation.
    pub best_errors: Vec<Vec<f64>>,
    pub stats: Vec<GenerationStats>,
    pub rng: ChaCha8Rng,
    pub max_evaluations: usize,
}

impl OptimizerState {
    pub fn success(&self) -> bool {
        self.history.iter().any(EvalRecord::is_fully_valid)
    }

    pub fn remaining(&self) -> usize {
        self.max_evaluations.saturating_sub(self.history.len())
    }

    fn push_stats(&mut self) {
        self.stats.push(GenerationStats {
            generation: self.generation,
            evaluations: self.history.len(),
            best_errors: self.best_errors.last().unwrap().clone(),
            archive_best: archive_best(&self.archive),
            weights: self.weights.clone(),
            eta: Some(self.eta),
        });
    }
}

/// Generation 0: retrieval seeds (up to half the population) plus uniform
/// samples, evaluated together.
pub fn initialize(
    spec: &TaskSpec,
    evaluator: &dyn Evaluator,
    library: &SeedLibrary,
    cfg: &SaesConfig,
    seed: u64,
) -> Result<OptimizerState> {
    cfg.validate()?;
    spec.validate()?;
    let k = spec.num_objectives();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_evaluations = evaluation_budget(spec, cfg.population, cfg.max_generations);
    let count = cfg.population.min(max_evaluations);
    let mut xs: Vec<ConditioningVector> = retrieve_seeds(spec, library, cfg.population / 2)
        .into_iter()
        .take(count)
        .collect();
    while xs.len() < count {
        xs.push(uniform_vector(&mut rng, CONDITIONING_DIM));
    }
    let weights = vec![1.0; k];
    let candidates = xs.into_iter().map(Candidate::new).collect();
    let history = evaluate_batch(spec, evaluator, candidates, 0, 0, &weights);
    let mut archive = Vec::new();
    for r in &history {
        archive_insert(&mut archive, r, cfg.archive_capacity);
    }
    let ids: Vec<usize> = (0..history.len()).collect();
    let population = select_records(&history, &ids, cfg.population);
    let mut state = OptimizerState {
        population,
        history,
        archive,
        weights,
        eta: cfg.base_step_eta,
        generation: 0,
        best_errors: Vec::new(),
        stats: Vec::new(),
        rng,
        max_evaluations,
    };
    state.best_errors.push(best_errors(&state.history, k));
    state.push_stats();
    Ok(state)
}

/// One perception-action-integration cycle. Does nothing once the
/// evaluation budget is spent.
pub fn saes_generation(
    state: &mut OptimizerState,
    spec: &TaskSpec,
    evaluator: &dyn Evaluator,
    cfg: &SaesConfig,
) {
    let remaining = state.remaining();
    if remaining == 0 {
        return;
    }
    let k = spec.num_objectives();
    let ys: Vec<f64> = state
        .history
        .iter()
        .map(|r| r.utility_with(&state.weights))
        .collect();
    let samples: Vec<Sample> = state
        .history
        .iter()
        .zip(&ys)
        .map(|(r, &y)| Sample {
            x: r.x.coords(),
            y,
            t: r.generation,
        })
        .collect();

    let mut candidates: Vec<Candidate> = Vec::new();
    for &p in state.population.iter().take(remaining) {
        let parent = &state.history[p];
        let grad = estimate_gradient(&samples, parent.x.coords(), ys[p], state.generation, cfg);
        let proposal = propose_update(
            &parent.x,
            &grad,
            ys[p],
            0.0,
            &parent.velocity,
            state.eta,
            cfg,
            &mut state.rng,
        );
        let mut x = proposal.x;
        let seen = state
            .history
            .iter()
            .map(|r| &r.x)
            .chain(candidates.iter().map(|c| &c.x));
        let moved = perturb_duplicate(
            &mut x,
            seen,
            cfg.duplicate_radius,
            cfg.duplicate_amplitude,
            &mut state.rng,
        );
        candidates.push(Candidate {
            x,
            clamped: proposal.clamped || moved,
            parent: Some(p),
            velocity: if cfg.momentum_enabled {
                proposal.step
            } else {
                Vec::new()
            },
        });
    }

    let offspring = evaluate_batch(
        spec,
        evaluator,
        candidates,
        state.history.len(),
        state.generation + 1,
        &state.weights,
    );
    for child in &offspring {
        let parent = child.parent.expect("offspring have parents");
        let before = ys[parent];
        let after = child.utility_with(&state.weights);
        if after > before {
            state.eta *= cfg.eta_shrink;
        } else if after < before {
            state.eta *= cfg.eta_grow;
        }
        state.eta = state.eta.clamp(cfg.eta_min, cfg.eta_max);
        archive_insert(&mut state.archive, child, cfg.archive_capacity);
    }
    let mut pool = state.population.clone();
    pool.extend(offspring.iter().map(|r| r.id));
    state.history.extend(offspring);
    state.population = select_records(&state.history, &pool, cfg.population);
    state.generation += 1;

    state.best_errors.push(best_errors(&state.history, k));
    let gammas: Vec<Option<f64>> = (0..k)
        .map(|j| detect_stagnation(&state.best_errors, j, cfg))
        .collect();
    state.weights = update_weights(&state.weights, &gammas, cfg);
    state.push_stats();
}

/// Full search: initialization, then generations until a fully valid design
/// appears, the generation limit is reached, or the budget is spent.
pub fn run(
    spec: &TaskSpec,
    cfg: &SaesConfig,
    evaluator: &dyn Evaluator,
    library: &SeedLibrary,
    seed: u64,
) -> Result<RunResult> {
    let mut state = initialize(spec, evaluator, library, cfg, seed)?;
    while !state.success() && state.generation < cfg.max_generations && state.remaining() > 0 {
        saes_generation(&mut state, spec, evaluator, cfg);
    }
    let trace = SearchTrace {
        archive: state.archive.iter().map(|r| r.id).collect(),
        generations: state.stats,
        final_weights: state.weights,
        final_eta: Some(state.eta),
    };
    Ok(RunResult::assemble(
        spec,
        Method::Saes,
        seed,
        state.history,
        trace,
    ))
}
