//! Fixtures shared by the benchmarks.

use microsearch_core::geometry::generate;
use microsearch_core::pareto::ObjectivePoint;
use microsearch_core::{ConditioningVector, VoxelGrid};

/// A connected mid-density gyroid at resolution `n`.
pub fn gyroid(n: usize) -> VoxelGrid {
    generate(&ConditioningVector::new(vec![0.5, 0.4, 0.6]), n)
}

/// `n` deterministic points scattered over `k` objectives.
pub fn scattered_points(n: usize, k: usize) -> Vec<ObjectivePoint> {
    let mut state = 0x2545_f491_4f6c_dd1d_u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    (0..n)
        .map(|i| ObjectivePoint::minimizing(i, (0..k).map(|_| next()).collect()))
        .collect()
}

/// Sample coordinates on a jittered ring around `center`.
pub fn ring(center: &[f64], count: usize, radius: f64) -> Vec<Vec<f64>> {
    (0..count)
        .map(|i| {
            let t = i as f64 / count as f64 * std::f64::consts::TAU;
            vec![
                center[0] + radius * t.cos(),
                center[1] + radius * t.sin(),
                center[2] + 0.3 * radius * (2.0 * t).sin(),
            ]
        })
        .collect()
}
