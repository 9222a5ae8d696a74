//! Batch orchestration: method dispatch, per-run reports, benchmark sweeps
//! and their on-disk layout.

mod machine;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

pub use machine::{iterations, replay, step_pipeline, Event, Phase, PipelinePhase, Status};

use crate::baselines::{nsga2_run, one_shot_run, random_search_run, Nsga2Config};
use crate::error::{Error, Result};
use crate::evaluator::{Evaluator, SimulationEvaluator};
use crate::geometry::SeedLibrary;
use crate::homogenize::SolverConfig;
use crate::metrics::{aggregate_report, plot_data, report_csv, report_text, RunSummary};
use crate::pareto::{non_dominated_sort, ObjectivePoint};
use crate::saes::{self, EvalRecord, Method, RunResult, RunStatus, SaesConfig};
use crate::task::{check_stiffness_feasibility, FeasibilityNote, TaskSpec};

pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_TXT: &str = "report.txt";
pub const PLOT_CSV: &str = "plot_data.csv";

/// Runs one method on one task with the task's population and generation
/// budget.
pub fn run_method(
    spec: &TaskSpec,
    method: Method,
    evaluator: &dyn Evaluator,
    library: &SeedLibrary,
    seed: u64,
    momentum: bool,
) -> Result<RunResult> {
    let population = spec.budget.population;
    let generations = spec.budget.max_generations;
    match method {
        Method::Saes => {
            let cfg = SaesConfig {
                momentum_enabled: momentum,
                ..SaesConfig::for_task(spec)
            };
            saes::run(spec, &cfg, evaluator, library, seed)
        }
        Method::Nsga2 => {
            let cfg = Nsga2Config {
                population,
                max_generations: generations,
                ..Nsga2Config::default()
            };
            nsga2_run(spec, &cfg, evaluator, seed)
        }
        Method::Random => random_search_run(spec, population, generations, evaluator, seed),
        Method::OneShot => one_shot_run(spec, evaluator, library, seed),
    }
}

fn fmt_value(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.6e}"))
}

/// Human-readable summary of a finished run, ending with `TERMINATE`.
/// Stiffness-feasibility notes for `spec` are listed under the header.
pub fn report(run: &RunResult, spec: &TaskSpec) -> String {
    let s = &run.summary;
    let notes = check_stiffness_feasibility(spec).notes;
    let weights = if s.final_weights.len() == spec.num_objectives() {
        s.final_weights.clone()
    } else {
        vec![1.0; spec.num_objectives()]
    };
    let members: Vec<&EvalRecord> = s.archive.iter().map(|&id| &run.records[id]).collect();
    let points: Vec<ObjectivePoint> = members
        .iter()
        .enumerate()
        .map(|(i, r)| ObjectivePoint::minimizing(i, r.ranking_errors()))
        .collect();
    let mut rank = vec![0; members.len()];
    for (f, front) in non_dominated_sort(&points).iter().enumerate() {
        for &i in front {
            rank[i] = f + 1;
        }
    }
    let mut rows: Vec<(usize, f64, &EvalRecord)> = members
        .iter()
        .enumerate()
        .map(|(i, r)| (rank[i], r.utility_with(&weights), *r))
        .collect();
    rows.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.2.id.cmp(&b.2.id)));

    let mut out = String::new();
    let _ = writeln!(
        out,
        "task {}  method {}  seed {}",
        s.task_id, s.method, s.seed
    );
    for note in &notes {
        let _ = match note {
            FeasibilityNote::Clamped { from, to } => {
                writeln!(out, "note: E target {from} clamped to {to}")
            }
            FeasibilityNote::Inconsistent {
                implied_young,
                target_young,
                relative_gap,
            } => writeln!(
                out,
                "note: E target {target_young} disagrees with 2G(1 + nu) = {implied_young} ({:.1}%)",
                100.0 * relative_gap
            ),
        };
    }
    let _ = writeln!(out, "pareto front ({} members)", rows.len());
    let _ = write!(out, "{:>4} {:>6} {:>13}", "rank", "id", "utility");
    for o in &spec.objectives {
        let _ = write!(out, " {:>13}", o.property.as_str());
    }
    out.push('\n');
    for (rank, u, r) in &rows {
        let _ = write!(out, "{rank:>4} {:>6} {u:>13.6e}", r.id);
        for o in &spec.objectives {
            let _ = write!(out, " {:>13}", fmt_value(r.properties.get(o.property)));
        }
        out.push('\n');
    }
    match rows.iter().find(|row| row.0 == 1) {
        Some((_, u, r)) => {
            let x: Vec<String> = r.x.coords().iter().map(|c| format!("{c:.4}")).collect();
            let _ = writeln!(
                out,
                "best trade-off: id {} utility {u:.6e} x [{}] satisfied {}/{}",
                r.id,
                x.join(", "),
                r.satisfied_count(),
                r.satisfied.len()
            );
        }
        None => out.push_str("best trade-off: none\n"),
    }
    let status = match s.status {
        RunStatus::Satisfied => "satisfied",
        RunStatus::BudgetExhausted => "budget_exhausted",
    };
    let _ = writeln!(
        out,
        "iterations {}  evaluations {}  status {status}",
        s.iterations, s.evaluations
    );
    out.push_str("TERMINATE\n");
    out
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub resolution: usize,
    pub solver: SolverConfig,
    pub workers: usize,
    pub momentum: bool,
    pub out_dir: PathBuf,
    /// Writes `{method}_{seed}.time` sidecars with wall-clock seconds. Off by
    /// default so repeated sweeps stay byte-identical.
    pub record_time: bool,
}

impl SweepConfig {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            methods: vec![Method::Saes, Method::Nsga2, Method::Random],
            seeds: vec![0, 1, 2, 3],
            resolution: 16,
            solver: SolverConfig::default(),
            workers: 1,
            momentum: true,
            out_dir: out_dir.into(),
            record_time: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if self.methods.is_empty() || self.seeds.is_empty() {
            return Err(Error::Config(
                "at least one method and one seed are required".into(),
            ));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        if self.resolution < crate::geometry::MIN_RESOLUTION {
            return Err(Error::Config(format!(
                "resolution must be >= {}",
                crate::geometry::MIN_RESOLUTION
            )));
        }
        Ok(())
    }
}

/// File stem of one cell's outputs.
pub fn run_stem(method: Method, seed: u64) -> String {
    format!("{method}_{seed}")
}

fn check_task_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && id != "."
        && id != ".."
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c));
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "task_id `{id}` is not usable as a directory name"
        )))
    }
}

/// Writes a run's JSONL, text report and optional timing sidecar.
pub fn write_run(dir: &Path, run: &RunResult, spec: &TaskSpec, wall_s: Option<f64>) -> Result<()> {
    fs::create_dir_all(dir)?;
    let stem = run_stem(run.summary.method, run.summary.seed);
    fs::write(dir.join(format!("{stem}.jsonl")), run.to_jsonl()?)?;
    fs::write(dir.join(format!("{stem}.txt")), report(run, spec))?;
    if let Some(t) = wall_s {
        fs::write(dir.join(format!("{stem}.time")), format!("{t:.6}\n"))?;
    }
    Ok(())
}

/// Writes the aggregate CSV, text table and plot data under `out_dir`.
pub fn write_aggregate(out_dir: &Path, runs: &[(RunResult, Option<f64>)]) -> Result<()> {
    let summaries: Vec<RunSummary> = runs
        .iter()
        .map(|(r, t)| RunSummary::from_run(r, *t))
        .collect();
    let rows = aggregate_report(&summaries);
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join(REPORT_CSV), report_csv(&rows))?;
    fs::write(out_dir.join(REPORT_TXT), report_text(&rows))?;
    let results: Vec<RunResult> = runs.iter().map(|(r, _)| r.clone()).collect();
    fs::write(out_dir.join(PLOT_CSV), plot_data(&results))?;
    Ok(())
}

/// Runs every (task, method, seed) cell, writes per-run outputs and the
/// aggregate report. Tasks and configuration are validated before anything
/// touches the disk. Physics faults are recorded inside runs.
pub fn run_benchmark(
    tasks: &[TaskSpec],
    cfg: &SweepConfig,
    library: &SeedLibrary,
) -> Result<Vec<(RunResult, Option<f64>)>> {
    cfg.validate()?;
    let mut ids = BTreeSet::new();
    for t in tasks {
        t.validate()?;
        check_task_id(&t.task_id)?;
        if !ids.insert(t.task_id.as_str()) {
            return Err(Error::Config(format!("duplicate task_id `{}`", t.task_id)));
        }
    }
    let adjusted: Vec<TaskSpec> = tasks
        .iter()
        .map(|t| check_stiffness_feasibility(t).spec)
        .collect();
    let evaluators: Vec<SimulationEvaluator> = adjusted
        .iter()
        .map(|t| SimulationEvaluator::new(t.clone(), cfg.resolution, cfg.solver.clone()))
        .collect();
    let cells: Vec<(usize, Method, u64)> = (0..tasks.len())
        .flat_map(|t| {
            cfg.methods
                .iter()
                .flat_map(move |&m| cfg.seeds.iter().map(move |&s| (t, m, s)))
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let runs = pool.install(|| {
        cells
            .par_iter()
            .map(|&(t, method, seed)| {
                let start = Instant::now();
                let run = run_method(
                    &adjusted[t],
                    method,
                    &evaluators[t],
                    library,
                    seed,
                    cfg.momentum,
                )?;
                let wall = cfg.record_time.then(|| start.elapsed().as_secs_f64());
                write_run(&cfg.out_dir.join(&tasks[t].task_id), &run, &tasks[t], wall)?;
                Ok((run, wall))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    write_aggregate(&cfg.out_dir, &runs)?;
    Ok(runs)
}

/// Reads every `task/*.jsonl` result under a sweep directory, with its
/// timing sidecar when present. Order is by task directory then file name.
pub fn load_results(out_dir: &Path) -> Result<Vec<(RunResult, Option<f64>)>> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(out_dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    dirs.retain(|p| p.is_dir());
    dirs.sort();
    let mut out = Vec::new();
    for dir in dirs {
        let mut files: Vec<PathBuf> = fs::read_dir(&dir)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        files.retain(|p| p.extension().is_some_and(|e| e == "jsonl"));
        files.sort();
        for f in files {
            let run = RunResult::from_jsonl(&fs::read_to_string(&f)?, &f)?;
            let time = fs::read_to_string(f.with_extension("time"))
                .ok()
                .and_then(|t| t.trim().parse().ok());
            out.push((run, time));
        }
    }
    Ok(out)
}
