//! Dominance machinery: non-dominated sorting, crowding distance and
//! survivor selection. Ties are always broken by candidate id.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectivePoint {
    pub id: usize,
    pub values: Vec<f64>,
    pub directions: Vec<Direction>,
}

impl ObjectivePoint {
    pub fn new(id: usize, values: Vec<f64>, directions: Vec<Direction>) -> Result<Self> {
        if values.len() != directions.len() {
            return Err(Error::DimensionMismatch {
                expected: directions.len(),
                actual: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Config(format!("objective value {v} is not finite")));
        }
        Ok(Self {
            id,
            values,
            directions,
        })
    }

    /// All objectives minimized.
    pub fn minimizing(id: usize, values: Vec<f64>) -> Self {
        let directions = vec![Direction::Minimize; values.len()];
        Self {
            id,
            values,
            directions,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `a` is no worse than `b` everywhere and strictly better somewhere.
pub fn dominates(a: &ObjectivePoint, b: &ObjectivePoint) -> Result<bool> {
    if a.values.len() != b.values.len() || a.directions != b.directions {
        return Err(Error::DimensionMismatch {
            expected: a.values.len(),
            actual: b.values.len(),
        });
    }
    Ok(dominates_unchecked(a, b))
}

fn dominates_unchecked(a: &ObjectivePoint, b: &ObjectivePoint) -> bool {
    let mut strictly = false;
    for ((&va, &vb), dir) in a.values.iter().zip(&b.values).zip(&a.directions) {
        let (va, vb) = match dir {
            Direction::Minimize => (va, vb),
            Direction::Maximize => (-va, -vb),
        };
        if va > vb {
            return false;
        }
        strictly |= va < vb;
    }
    strictly
}

fn check_shapes(points: &[ObjectivePoint]) {
    if let Some(first) = points.first() {
        assert!(
            points
                .iter()
                .all(|p| p.values.len() == first.values.len() && p.directions == first.directions),
            "objective points must share dimension and directions"
        );
    }
}

/// Fronts of ids, best first; ids within a front ascend.
///
/// # Panics
/// If the points do not share dimension and directions.
pub fn non_dominated_sort(points: &[ObjectivePoint]) -> Vec<Vec<usize>> {
    check_shapes(points);
    let n = points.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if dominates_unchecked(&points[i], &points[j]) {
                dominates_list[i].push(j);
                dominated_by_count[j] += 1;
            } else if dominates_unchecked(&points[j], &points[i]) {
                dominates_list[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_list[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        let mut ids: Vec<usize> = current.iter().map(|&i| points[i].id).collect();
        ids.sort_unstable();
        fronts.push(ids);
        current = next;
    }
    fronts
}

/// Crowding distance of each point of `front`, in input order.
pub fn crowding_distance(front: &[ObjectivePoint]) -> Vec<f64> {
    check_shapes(front);
    let n = front.len();
    let mut distance = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let k = front[0].values.len();
    let mut order: Vec<usize> = (0..n).collect();
    for m in 0..k {
        order.sort_by(|&a, &b| {
            front[a].values[m]
                .total_cmp(&front[b].values[m])
                .then(front[a].id.cmp(&front[b].id))
        });
        let lo = front[order[0]].values[m];
        let hi = front[order[n - 1]].values[m];
        distance[order[0]] = f64::INFINITY;
        distance[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        for w in 1..n - 1 {
            let gap = front[order[w + 1]].values[m] - front[order[w - 1]].values[m];
            distance[order[w]] += gap / range;
        }
    }
    distance
}

/// Ids of `n` survivors: whole fronts by rank, then the partial front by
/// descending crowding distance, ties by ascending id.
pub fn select(points: &[ObjectivePoint], n: usize) -> Vec<usize> {
    let n = n.min(points.len());
    let mut chosen = Vec::with_capacity(n);
    for front in non_dominated_sort(points) {
        if chosen.len() + front.len() <= n {
            chosen.extend(front);
            if chosen.len() == n {
                break;
            }
            continue;
        }
        let members: Vec<ObjectivePoint> = front
            .iter()
            .map(|id| points.iter().find(|p| p.id == *id).unwrap().clone())
            .collect();
        let dist = crowding_distance(&members);
        let mut ranked: Vec<usize> = (0..members.len()).collect();
        ranked.sort_by(|&a, &b| {
            dist[b]
                .total_cmp(&dist[a])
                .then(members[a].id.cmp(&members[b].id))
        });
        let room = n - chosen.len();
        chosen.extend(ranked[..room].iter().map(|&i| members[i].id));
        break;
    }
    chosen
}

/// Front rank (0 = first front) and crowding distance of every point, in
/// input order. Used for tournament selection.
pub fn rank_and_crowding(points: &[ObjectivePoint]) -> Vec<(usize, f64)> {
    let mut out = vec![(0, 0.0); points.len()];
    let pos = |id: usize| points.iter().position(|p| p.id == id).unwrap();
    for (rank, front) in non_dominated_sort(points).into_iter().enumerate() {
        let idx: Vec<usize> = front.iter().map(|&id| pos(id)).collect();
        let members: Vec<ObjectivePoint> = idx.iter().map(|&i| points[i].clone()).collect();
        for (&i, d) in idx.iter().zip(crowding_distance(&members)) {
            out[i] = (rank, d);
        }
    }
    out
}
