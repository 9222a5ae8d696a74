//! Evaluation records and run results shared by every optimizer.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluator::Evaluator;
use crate::geometry::ConditioningVector;
use crate::properties::PropertyVector;
use crate::task::TaskSpec;

/// Utility penalty added for disconnected or failed designs.
pub const INFEASIBLE_PENALTY: f64 = 10.0;

/// Normalized error assigned to every objective of a failed evaluation.
pub const FAILED_ERROR: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Saes,
    Nsga2,
    Random,
    #[serde(rename = "oneshot")]
    OneShot,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Saes, Method::Nsga2, Method::Random, Method::OneShot];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Saes => "saes",
            Method::Nsga2 => "nsga2",
            Method::Random => "random",
            Method::OneShot => "oneshot",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

/// One simulated design. Field order is the serialized order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: usize,
    pub generation: usize,
    pub parent: Option<usize>,
    pub x: ConditioningVector,
    pub clamped: bool,
    pub properties: PropertyVector,
    /// `(P - T) / |T|` per objective.
    pub signed_errors: Vec<f64>,
    /// Normalized absolute error per objective (zero for met thresholds).
    pub errors: Vec<f64>,
    pub satisfied: Vec<bool>,
    pub feasible: bool,
    /// Scalar utility under the weights in force when the record was made.
    pub utility: f64,
    /// Momentum carried to offspring of this record.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub velocity: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl EvalRecord {
    /// Feasible with every objective met.
    pub fn is_fully_valid(&self) -> bool {
        self.feasible && self.satisfied.iter().all(|&s| s)
    }

    pub fn satisfied_count(&self) -> usize {
        self.satisfied.iter().filter(|&&s| s).count()
    }

    pub fn mean_error(&self) -> f64 {
        if self.errors.is_empty() {
            return 0.0;
        }
        self.errors.iter().sum::<f64>() / self.errors.len() as f64
    }

    /// Scalar utility recomputed with `weights`.
    pub fn utility_with(&self, weights: &[f64]) -> f64 {
        utility(&self.errors, self.feasible, weights)
    }

    /// Errors used for Pareto ranking: penalized when infeasible.
    pub fn ranking_errors(&self) -> Vec<f64> {
        let penalty = if self.feasible {
            0.0
        } else {
            INFEASIBLE_PENALTY
        };
        self.errors.iter().map(|e| e + penalty).collect()
    }
}

/// `sum_j w_j e_j`, plus the infeasibility penalty.
pub fn utility(errors: &[f64], feasible: bool, weights: &[f64]) -> f64 {
    let base: f64 = errors.iter().zip(weights).map(|(e, w)| e * w).sum();
    if feasible {
        base
    } else {
        base + INFEASIBLE_PENALTY
    }
}

/// A design about to be evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub x: ConditioningVector,
    pub clamped: bool,
    pub parent: Option<usize>,
    pub velocity: Vec<f64>,
}

impl Candidate {
    pub fn new(x: ConditioningVector) -> Self {
        let (x, clamped) = x.clamped();
        Self {
            x,
            clamped,
            parent: None,
            velocity: Vec::new(),
        }
    }
}

/// Scores an evaluation outcome against the task. Failures and missing
/// properties become infeasible records with `FAILED_ERROR` everywhere.
pub fn score(
    spec: &TaskSpec,
    candidate: Candidate,
    outcome: Result<PropertyVector>,
    id: usize,
    generation: usize,
    weights: &[f64],
) -> EvalRecord {
    let k = spec.num_objectives();
    let scored = outcome.and_then(|props| {
        let mut signed = Vec::with_capacity(k);
        let mut errors = Vec::with_capacity(k);
        let mut satisfied = Vec::with_capacity(k);
        for obj in &spec.objectives {
            let v = props.require(obj.property)?;
            if !v.is_finite() {
                return Err(Error::Config(format!("{} evaluated to {v}", obj.property)));
            }
            signed.push((v - obj.target) / obj.target.abs());
            errors.push(obj.error(v));
            satisfied.push(obj.is_satisfied(v));
        }
        Ok((props, signed, errors, satisfied))
    });
    let (properties, signed_errors, errors, satisfied, failure) = match scored {
        Ok((p, s, e, f)) => (p, s, e, f, None),
        Err(err) => (
            PropertyVector::default(),
            vec![FAILED_ERROR; k],
            vec![FAILED_ERROR; k],
            vec![false; k],
            Some(err.to_string()),
        ),
    };
    let feasible = failure.is_none() && properties.feasible;
    EvalRecord {
        id,
        generation,
        parent: candidate.parent,
        x: candidate.x,
        clamped: candidate.clamped,
        utility: utility(&errors, feasible, weights),
        properties,
        signed_errors,
        errors,
        satisfied,
        feasible,
        velocity: candidate.velocity,
        failure,
    }
}

/// Evaluates candidates concurrently and scores them in candidate order.
pub fn evaluate_batch(
    spec: &TaskSpec,
    evaluator: &dyn Evaluator,
    candidates: Vec<Candidate>,
    first_id: usize,
    generation: usize,
    weights: &[f64],
) -> Vec<EvalRecord> {
    let outcomes: Vec<Result<PropertyVector>> = candidates
        .par_iter()
        .map(|c| evaluator.evaluate(&c.x))
        .collect();
    candidates
        .into_iter()
        .zip(outcomes)
        .enumerate()
        .map(|(i, (c, out))| score(spec, c, out, first_id + i, generation, weights))
        .collect()
}

/// Lowest error per objective over `records` (`FAILED_ERROR` if empty).
pub fn best_errors(records: &[EvalRecord], k: usize) -> Vec<f64> {
    (0..k)
        .map(|j| {
            records
                .iter()
                .map(|r| r.errors[j])
                .reduce(f64::min)
                .unwrap_or(FAILED_ERROR)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Satisfied,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    /// Cumulative simulator calls.
    pub evaluations: usize,
    /// Best error per objective over all records so far.
    pub best_errors: Vec<f64>,
    /// Lowest unweighted utility among archive members.
    pub archive_best: Option<f64>,
    pub weights: Vec<f64>,
    pub eta: Option<f64>,
}

/// Closing line of a persisted run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummaryRecord {
    pub task_id: String,
    pub method: Method,
    pub seed: u64,
    pub success: bool,
    pub status: RunStatus,
    /// Feedback loops after the initial evaluation.
    pub iterations: usize,
    pub evaluations: usize,
    pub best: Option<usize>,
    pub archive: Vec<usize>,
    pub final_weights: Vec<f64>,
    pub final_eta: Option<f64>,
    pub generations: Vec<GenerationStats>,
}

/// Optimizer-specific state reported alongside the records.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchTrace {
    pub archive: Vec<usize>,
    pub generations: Vec<GenerationStats>,
    pub final_weights: Vec<f64>,
    pub final_eta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub records: Vec<EvalRecord>,
    pub summary: RunSummaryRecord,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Line {
    Eval(EvalRecord),
    Summary(RunSummaryRecord),
}

impl RunResult {
    /// Assembles a result; success, status and the best record are derived
    /// from `records`.
    pub fn assemble(
        spec: &TaskSpec,
        method: Method,
        seed: u64,
        records: Vec<EvalRecord>,
        trace: SearchTrace,
    ) -> Self {
        let success = records.iter().any(EvalRecord::is_fully_valid);
        let unit = vec![1.0; spec.num_objectives()];
        let best = records
            .iter()
            .min_by(|a, b| {
                a.utility_with(&unit)
                    .total_cmp(&b.utility_with(&unit))
                    .then(a.id.cmp(&b.id))
            })
            .map(|r| r.id);
        let iterations = records.iter().map(|r| r.generation).max().unwrap_or(0);
        let summary = RunSummaryRecord {
            task_id: spec.task_id.clone(),
            method,
            seed,
            success,
            status: if success {
                RunStatus::Satisfied
            } else {
                RunStatus::BudgetExhausted
            },
            iterations,
            evaluations: records.len(),
            best,
            archive: trace.archive,
            final_weights: trace.final_weights,
            final_eta: trace.final_eta,
            generations: trace.generations,
        };
        Self { records, summary }
    }

    pub fn best_record(&self) -> Option<&EvalRecord> {
        self.summary.best.map(|id| &self.records[id])
    }

    /// One JSON object per line: every record, then the summary.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(&Line::Eval(r.clone()))?);
            out.push('\n');
        }
        out.push_str(&serde_json::to_string(&Line::Summary(
            self.summary.clone(),
        ))?);
        out.push('\n');
        Ok(out)
    }

    pub fn from_jsonl(text: &str, origin: &Path) -> Result<Self> {
        let mut records = Vec::new();
        let mut summary = None;
        for (n, line) in text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
        {
            let parsed: Line = serde_json::from_str(line).map_err(|e| Error::Parse {
                path: origin.to_path_buf(),
                line: n + 1,
                column: e.column(),
                message: e.to_string(),
            })?;
            match parsed {
                Line::Eval(r) => records.push(r),
                Line::Summary(s) => summary = Some(s),
            }
        }
        let summary = summary.ok_or_else(|| Error::Schema {
            field: "summary".into(),
            reason: "run file has no summary line".into(),
        })?;
        Ok(Self { records, summary })
    }
}
