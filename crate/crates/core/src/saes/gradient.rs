//! Local gradient perception by weighted least squares over nearby history.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::SaesConfig;

/// A past evaluation as seen by the estimator.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub x: &'a [f64],
    pub y: f64,
    /// Generation in which the sample was evaluated.
    pub t: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientFlag {
    Ok,
    RankDeficientRidge,
    InsufficientNeighbors,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientEstimate {
    pub g: Vec<f64>,
    pub neighbor_count: usize,
    pub flag: GradientFlag,
}

impl GradientEstimate {
    fn insufficient(dim: usize, neighbor_count: usize) -> Self {
        Self {
            g: vec![0.0; dim],
            neighbor_count,
            flag: GradientFlag::InsufficientNeighbors,
        }
    }

    pub fn is_usable(&self) -> bool {
        self.flag != GradientFlag::InsufficientNeighbors && self.norm() > 0.0
    }

    pub fn norm(&self) -> f64 {
        self.g.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// `1 / (1 + d^2)`.
pub fn distance_weight(dist_sq: f64) -> f64 {
    1.0 / (1.0 + dist_sq)
}

/// `exp(-lambda (N - t) / N)`; every sample weighs 1 while `N = 0`.
pub fn temporal_weight(t: usize, now: usize, lambda: f64) -> f64 {
    if now == 0 {
        return 1.0;
    }
    let age = now.saturating_sub(t) as f64;
    (-lambda * age / now as f64).exp()
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Indices of samples kept by the MAD filter. Nothing is dropped when the
/// MAD is zero.
pub fn mad_filter(ys: &[f64], threshold: f64) -> Vec<usize> {
    let mut sorted = ys.to_vec();
    sorted.sort_by(f64::total_cmp);
    let med = median(&sorted);
    let mut dev: Vec<f64> = ys.iter().map(|y| (y - med).abs()).collect();
    dev.sort_by(f64::total_cmp);
    let mad = median(&dev);
    (0..ys.len())
        .filter(|&i| mad == 0.0 || (ys[i] - med).abs() <= threshold * mad)
        .collect()
}

/// Gradient of the response at `x_k` from its `window_m` nearest samples.
/// Samples coinciding with `x_k` carry no slope information and are skipped.
pub fn estimate_gradient(
    samples: &[Sample<'_>],
    x_k: &[f64],
    y_k: f64,
    now: usize,
    cfg: &SaesConfig,
) -> GradientEstimate {
    let d = x_k.len();
    let mut near: Vec<(f64, usize)> = samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let dist_sq: f64 = s.x.iter().zip(x_k).map(|(a, b)| (a - b) * (a - b)).sum();
            (dist_sq, i)
        })
        .filter(|(dist_sq, _)| *dist_sq > 0.0)
        .collect();
    near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    near.truncate(cfg.window_m);

    let ys: Vec<f64> = near.iter().map(|&(_, i)| samples[i].y).collect();
    let kept: Vec<(f64, usize)> = mad_filter(&ys, cfg.outlier_mad_threshold)
        .into_iter()
        .map(|i| near[i])
        .collect();
    if kept.len() < 2 {
        return GradientEstimate::insufficient(d, kept.len());
    }

    let mut a = DMatrix::<f64>::zeros(d, d);
    let mut b = DVector::<f64>::zeros(d);
    for &(dist_sq, i) in &kept {
        let s = &samples[i];
        let w = distance_weight(dist_sq) * temporal_weight(s.t, now, cfg.temporal_decay_lambda);
        let dx = DVector::from_iterator(d, s.x.iter().zip(x_k).map(|(a, b)| a - b));
        a += &dx * dx.transpose() * w;
        b += &dx * (w * (s.y - y_k));
    }

    let trace = a.trace();
    if !(trace > 0.0) {
        return GradientEstimate::insufficient(d, kept.len());
    }
    let eig = a.clone().symmetric_eigen().eigenvalues;
    let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let mut flag = GradientFlag::Ok;
    if kept.len() < d || lo <= 1e-10 * hi {
        flag = GradientFlag::RankDeficientRidge;
        let eps = cfg.ridge_scale * trace / d as f64;
        for i in 0..d {
            a[(i, i)] += eps;
        }
    }
    let g = match a.cholesky() {
        Some(ch) => ch.solve(&b),
        None => return GradientEstimate::insufficient(d, kept.len()),
    };
    if g.iter().any(|v| !v.is_finite()) {
        return GradientEstimate::insufficient(d, kept.len());
    }
    GradientEstimate {
        g: g.iter().copied().collect(),
        neighbor_count: kept.len(),
        flag,
    }
}
