//! Run-level evaluation metrics and the aggregate report.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::saes::{Method, RunResult};
use crate::task::signed_error;

/// Satisfied flags and normalized errors of one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub satisfied: Vec<bool>,
    pub errors: Vec<f64>,
}

impl CandidateScore {
    pub fn satisfied_count(&self) -> usize {
        self.satisfied.iter().filter(|&&s| s).count()
    }

    pub fn mean_error(&self) -> f64 {
        if self.errors.is_empty() {
            return 0.0;
        }
        self.errors.iter().sum::<f64>() / self.errors.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub task_id: String,
    pub method: Method,
    pub seed: u64,
    pub success: bool,
    pub candidates: Vec<CandidateScore>,
    pub iterations: usize,
    pub evaluations: usize,
    pub wall_clock_s: Option<f64>,
}

impl RunSummary {
    pub fn from_run(run: &RunResult, wall_clock_s: Option<f64>) -> Self {
        Self {
            task_id: run.summary.task_id.clone(),
            method: run.summary.method,
            seed: run.summary.seed,
            success: run.summary.success,
            candidates: run
                .records
                .iter()
                .map(|r| CandidateScore {
                    // a disconnected design meets nothing, so full BPM means success
                    satisfied: r.satisfied.iter().map(|&s| s && r.feasible).collect(),
                    errors: r.errors.clone(),
                })
                .collect(),
            iterations: run.summary.iterations,
            evaluations: run.summary.evaluations,
            wall_clock_s,
        }
    }

    /// Lowest mean relative error over the run's candidates.
    pub fn best_mean_error(&self) -> f64 {
        self.candidates
            .iter()
            .map(CandidateScore::mean_error)
            .reduce(f64::min)
            .unwrap_or(f64::NAN)
    }

    /// Largest satisfied fraction over the run's candidates.
    pub fn best_match(&self) -> f64 {
        self.candidates
            .iter()
            .map(|c| {
                if c.satisfied.is_empty() {
                    0.0
                } else {
                    c.satisfied_count() as f64 / c.satisfied.len() as f64
                }
            })
            .fold(0.0, f64::max)
    }
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Sample standard deviation; zero for fewer than two values.
pub fn stddev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values.iter().copied());
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Fraction of runs holding at least one fully valid candidate.
pub fn success_rate(runs: &[RunSummary]) -> f64 {
    mean(runs.iter().map(|r| if r.success { 1.0 } else { 0.0 }))
}

/// Fraction of all candidates, pooled over runs, meeting at least half of
/// their objectives (inclusive).
pub fn constraint_satisfaction_rate(runs: &[RunSummary]) -> f64 {
    mean(runs.iter().flat_map(|r| &r.candidates).map(|c| {
        if 2 * c.satisfied_count() >= c.satisfied.len() {
            1.0
        } else {
            0.0
        }
    }))
}

/// Mean over runs of the best candidate's mean relative error.
pub fn mean_relative_error(runs: &[RunSummary]) -> f64 {
    mean(runs.iter().map(RunSummary::best_mean_error))
}

/// Mean over runs of the best satisfied fraction, in percent.
pub fn best_property_match(runs: &[RunSummary]) -> f64 {
    100.0 * mean(runs.iter().map(RunSummary::best_match))
}

/// `20 I + 40 bpm + 30 csr + 10 (1 - min(mre, 1))`, with `bpm` and `csr` as
/// fractions.
pub fn quality_score(success: bool, bpm: f64, csr: f64, mre: f64) -> f64 {
    quality_score_rate(if success { 1.0 } else { 0.0 }, bpm, csr, mre)
}

/// Quality score with the success indicator replaced by a success rate.
pub fn quality_score_rate(sr: f64, bpm: f64, csr: f64, mre: f64) -> f64 {
    20.0 * sr + 40.0 * bpm + 30.0 * csr + 10.0 * (1.0 - mre.min(1.0))
}

/// Signed percent deviation printed with one decimal and explicit sign.
pub fn format_err(value: f64, target: f64) -> Result<String> {
    Ok(format!("{:+.1}", signed_error(value, target)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub task_id: String,
    pub method: Method,
    pub runs: usize,
    pub sr: f64,
    pub csr: f64,
    pub mre: f64,
    pub mre_sd: f64,
    pub bpm: f64,
    pub qs: f64,
    pub iter_mean: f64,
    pub iter_sd: f64,
    pub evals_mean: f64,
    pub time_mean_s: Option<f64>,
}

pub const CSV_HEADER: &str =
    "task_id,method,runs,sr,csr,mre,mre_sd,bpm,qs,iter_mean,iter_sd,evals_mean,time_mean_s";

/// One row per (task, method), ordered by task id then method name.
pub fn aggregate_report(summaries: &[RunSummary]) -> Vec<ReportRow> {
    let mut groups: BTreeMap<(String, &str), Vec<&RunSummary>> = BTreeMap::new();
    for s in summaries {
        groups
            .entry((s.task_id.clone(), s.method.as_str()))
            .or_default()
            .push(s);
    }
    groups
        .into_values()
        .map(|group| {
            let runs: Vec<RunSummary> = group.iter().map(|s| (*s).clone()).collect();
            let sr = success_rate(&runs);
            let csr = constraint_satisfaction_rate(&runs);
            let mre = mean_relative_error(&runs);
            let bpm = best_property_match(&runs);
            let per_run_mre: Vec<f64> = runs.iter().map(RunSummary::best_mean_error).collect();
            let iters: Vec<f64> = runs.iter().map(|r| r.iterations as f64).collect();
            let times: Vec<f64> = runs.iter().filter_map(|r| r.wall_clock_s).collect();
            ReportRow {
                task_id: runs[0].task_id.clone(),
                method: runs[0].method,
                runs: runs.len(),
                sr,
                csr,
                mre,
                mre_sd: stddev(&per_run_mre),
                bpm,
                qs: quality_score_rate(sr, bpm / 100.0, csr, mre),
                iter_mean: mean(iters.iter().copied()),
                iter_sd: stddev(&iters),
                evals_mean: mean(runs.iter().map(|r| r.evaluations as f64)),
                time_mean_s: (!times.is_empty()).then(|| mean(times.iter().copied())),
            }
        })
        .collect()
}

pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let time = r
            .time_mean_s
            .map_or_else(|| "NA".to_string(), |t| format!("{t:.3}"));
        let _ = writeln!(
            out,
            "{},{},{},{:.4},{:.4},{:.4},{:.4},{:.2},{:.2},{:.2},{:.2},{:.1},{}",
            r.task_id,
            r.method,
            r.runs,
            r.sr,
            r.csr,
            r.mre,
            r.mre_sd,
            r.bpm,
            r.qs,
            r.iter_mean,
            r.iter_sd,
            r.evals_mean,
            time
        );
    }
    out
}

pub fn report_text(rows: &[ReportRow]) -> String {
    let mut out = format!(
        "{:<12} {:<8} {:>4} {:>7} {:>7} {:>15} {:>7} {:>6} {:>11} {:>7} {:>8}\n",
        "task",
        "method",
        "runs",
        "SR%",
        "CSR%",
        "MRE (sd)",
        "BPM%",
        "QS",
        "Iter (sd)",
        "Evals",
        "Time s"
    );
    for r in rows {
        let time = r
            .time_mean_s
            .map_or_else(|| "NA".to_string(), |t| format!("{t:.2}"));
        let _ = writeln!(
            out,
            "{:<12} {:<8} {:>4} {:>7.1} {:>7.1} {:>15} {:>7.1} {:>6.1} {:>11} {:>7.1} {:>8}",
            r.task_id,
            r.method,
            r.runs,
            100.0 * r.sr,
            100.0 * r.csr,
            format!("{:.4} ({:.4})", r.mre, r.mre_sd),
            r.bpm,
            r.qs,
            format!("{:.1} ({:.1})", r.iter_mean, r.iter_sd),
            r.evals_mean,
            time
        );
    }
    out
}

/// Per-generation best mean error of each run, as CSV for plotting.
pub fn plot_data(runs: &[RunResult]) -> String {
    let mut out = String::from("task_id,method,seed,generation,evaluations,best_mean_error\n");
    for run in runs {
        let mut best = f64::INFINITY;
        let last = run.records.iter().map(|r| r.generation).max().unwrap_or(0);
        for g in 0..=last {
            let gen: Vec<_> = run.records.iter().filter(|r| r.generation == g).collect();
            if gen.is_empty() {
                continue;
            }
            for r in &gen {
                best = best.min(r.mean_error());
            }
            let evals = run.records.iter().filter(|r| r.generation <= g).count();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.6}",
                run.summary.task_id, run.summary.method, run.summary.seed, g, evals, best
            );
        }
    }
    out
}
