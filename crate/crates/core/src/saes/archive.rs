//! Bounded elite archive of feasible, mutually non-dominated records.

use super::record::EvalRecord;
use crate::pareto::{crowding_distance, ObjectivePoint};

fn dominates_or_equals(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

fn strictly_dominates(a: &[f64], b: &[f64]) -> bool {
    dominates_or_equals(a, b) && a.iter().zip(b).any(|(x, y)| x < y)
}

fn error_sum(r: &EvalRecord) -> f64 {
    r.errors.iter().sum()
}

/// Inserts `record` when it is feasible and not matched or dominated by a
/// member; evicts members it dominates. Over capacity, the member with the
/// lowest crowding distance is pruned (latest id first on ties), except the
/// member with the lowest error sum, which is always kept. Returns whether
/// the record entered.
pub fn archive_insert(archive: &mut Vec<EvalRecord>, record: &EvalRecord, capacity: usize) -> bool {
    if !record.feasible || capacity == 0 {
        return false;
    }
    if archive
        .iter()
        .any(|m| dominates_or_equals(&m.errors, &record.errors))
    {
        return false;
    }
    archive.retain(|m| !strictly_dominates(&record.errors, &m.errors));
    archive.push(record.clone());
    while archive.len() > capacity {
        let victim = prune_index(archive);
        archive.remove(victim);
    }
    true
}

/// Position of the member pruned from an over-full archive.
pub fn prune_index(archive: &[EvalRecord]) -> usize {
    let protected = (0..archive.len())
        .min_by(|&a, &b| {
            error_sum(&archive[a])
                .total_cmp(&error_sum(&archive[b]))
                .then(archive[a].id.cmp(&archive[b].id))
        })
        .expect("archive is non-empty");
    let points: Vec<ObjectivePoint> = archive
        .iter()
        .map(|r| ObjectivePoint::minimizing(r.id, r.errors.clone()))
        .collect();
    let dist = crowding_distance(&points);
    (0..archive.len())
        .filter(|&i| i != protected)
        .min_by(|&a, &b| {
            dist[a]
                .total_cmp(&dist[b])
                .then(archive[b].id.cmp(&archive[a].id))
        })
        .unwrap_or(protected)
}

/// Lowest unweighted utility among members.
pub fn archive_best(archive: &[EvalRecord]) -> Option<f64> {
    archive.iter().map(error_sum).reduce(f64::min)
}
