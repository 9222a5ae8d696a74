//! Deterministic gyroid-family generator.
//!
//! The conditioning vector has three axes:
//!
//! * `coords[0]` sets the level-set threshold and therefore the solid volume
//!   fraction, from fully void at 0 to fully solid at 1.
//! * `coords[1]` sets the anisotropy ratio `r` in `[0.75, 1.33]`
//!   (log-linear, `r ~ 1` at 0.5). The three gyroid terms are weighted
//!   `(1, r, 1/r)`; a literal axis stretch would break periodicity.
//! * `coords[2]` picks the number of unit cells per edge, `f` in `{1, 2, 3}`.
//!
//! The level set is `g(p) = sin X cos Y + r sin Y cos Z + r^-1 sin Z cos X`
//! with `X = 2 pi f p_x` etc., sampled at voxel centres; a voxel is solid where
//! `g <= tau`. `tau` is an affine function of `coords[0]` spanning the sampled
//! range of `g`, so the volume fraction is nondecreasing in `coords[0]`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::grid::VoxelGrid;

pub const CONDITIONING_DIM: usize = 3;
pub const ANISOTROPY_RANGE: (f64, f64) = (0.75, 1.33);
pub const MAX_CELLS: usize = 3;
/// Bumped whenever the level-set mapping changes; stored in seed libraries.
pub const GENERATOR_VERSION: u32 = 1;

/// A point in the optimizer's conditioning space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConditioningVector(pub Vec<f64>);

impl ConditioningVector {
    pub fn new(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn center(dim: usize) -> Self {
        Self(vec![0.5; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    /// Clamps every coordinate into `[0, 1]`; the flag reports whether any
    /// coordinate moved. Non-finite coordinates are mapped to 0.5.
    pub fn clamped(&self) -> (Self, bool) {
        let mut moved = false;
        let coords = self
            .0
            .iter()
            .map(|&c| {
                let v = if c.is_finite() {
                    c.clamp(0.0, 1.0)
                } else {
                    0.5
                };
                moved |= v != c;
                v
            })
            .collect();
        (Self(coords), moved)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Decoded generator parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GyroidParams {
    pub density: f64,
    pub anisotropy: f64,
    pub cells: usize,
}

impl GyroidParams {
    /// Decodes a clamped conditioning vector. Missing axes default to 0.5.
    pub fn from_conditioning(x: &ConditioningVector) -> Self {
        let (x, _) = x.clamped();
        let c = |i: usize| x.0.get(i).copied().unwrap_or(0.5);
        let (lo, hi) = ANISOTROPY_RANGE;
        let anisotropy = lo * (hi / lo).powf(c(1));
        let cells = ((c(2) * MAX_CELLS as f64).floor() as usize + 1).min(MAX_CELLS);
        Self {
            density: c(0),
            anisotropy,
            cells,
        }
    }

    /// Level-set value at a point of the unit cell (period 1 on every axis).
    pub fn level_set(&self, p: [f64; 3]) -> f64 {
        let w = 2.0 * PI * self.cells as f64;
        let (x, y, z) = (w * p[0], w * p[1], w * p[2]);
        x.sin() * y.cos()
            + self.anisotropy * y.sin() * z.cos()
            + z.sin() * x.cos() / self.anisotropy
    }
}

/// Maps a conditioning vector to a periodic voxel microstructure.
pub fn generate(x: &ConditioningVector, resolution: usize) -> VoxelGrid {
    let params = GyroidParams::from_conditioning(x);
    let n = resolution;
    let h = 1.0 / n as f64;
    let mut values = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let p = [
                    (i as f64 + 0.5) * h,
                    (j as f64 + 0.5) * h,
                    (k as f64 + 0.5) * h,
                ];
                values.push(params.level_set(p));
            }
        }
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let margin = 1e-9 * (hi - lo + 1.0);
    let tau = (lo - margin) + params.density * (hi - lo + 2.0 * margin);
    let mut it = values.into_iter();
    VoxelGrid::from_fn(n, |_, _, _| it.next().unwrap() <= tau)
}
