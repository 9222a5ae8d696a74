//! Gradient-guided parameter updates and adaptive objective weights.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::gradient::GradientEstimate;
use super::SaesConfig;
use crate::geometry::ConditioningVector;

/// `eta * sgn(y_tgt - y_k) * g / |g|`, with `sgn(0) = +1`. Zero when `g` is
/// unusable.
pub fn directed_step(grad: &GradientEstimate, y_k: f64, y_tgt: f64, eta: f64) -> Vec<f64> {
    if !grad.is_usable() {
        return vec![0.0; grad.g.len()];
    }
    let sign = (y_tgt - y_k).signum();
    let norm = grad.norm();
    grad.g.iter().map(|g| eta * sign * (g / norm)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub x: ConditioningVector,
    pub clamped: bool,
    /// Directed displacement (momentum included), before noise.
    pub step: Vec<f64>,
}

/// `x' = x_k + v + beta xi`, clamped to the unit box. With momentum on,
/// `v = momentum * v_parent + directed step`; otherwise `v` is the directed
/// step. One Gaussian draw per coordinate is consumed either way.
#[allow(clippy::too_many_arguments)]
pub fn propose_update<R: Rng>(
    x_k: &ConditioningVector,
    grad: &GradientEstimate,
    y_k: f64,
    y_tgt: f64,
    parent_velocity: &[f64],
    eta: f64,
    cfg: &SaesConfig,
    rng: &mut R,
) -> Proposal {
    let directed = directed_step(grad, y_k, y_tgt, eta);
    let step: Vec<f64> = if cfg.momentum_enabled {
        directed
            .iter()
            .enumerate()
            .map(|(i, d)| cfg.momentum * parent_velocity.get(i).copied().unwrap_or(0.0) + d)
            .collect()
    } else {
        directed
    };
    let coords: Vec<f64> = x_k
        .coords()
        .iter()
        .zip(&step)
        .map(|(x, s)| {
            let xi: f64 = rng.sample(StandardNormal);
            x + s + cfg.noise_beta * xi
        })
        .collect();
    let (x, clamped) = ConditioningVector::new(coords).clamped();
    Proposal { x, clamped, step }
}

/// Perturbs `x` by up to `±amplitude` per coordinate when it lies within
/// `radius` of any point in `seen`. Returns whether it moved.
pub fn perturb_duplicate<'a, R: Rng>(
    x: &mut ConditioningVector,
    seen: impl IntoIterator<Item = &'a ConditioningVector>,
    radius: f64,
    amplitude: f64,
    rng: &mut R,
) -> bool {
    if !seen.into_iter().any(|s| s.distance(x) < radius) {
        return false;
    }
    let coords = x
        .coords()
        .iter()
        .map(|c| c + rng.gen_range(-amplitude..=amplitude))
        .collect();
    *x = ConditioningVector::new(coords).clamped().0;
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Stagnant,
    Fast,
    Neutral,
}

/// `None` (insufficient history or nothing left to improve) is neutral.
pub fn classify(gamma: Option<f64>, cfg: &SaesConfig) -> Trend {
    match gamma {
        Some(g) if g.abs() < cfg.stagnation_threshold => Trend::Stagnant,
        Some(g) if g > cfg.fast_threshold => Trend::Fast,
        _ => Trend::Neutral,
    }
}

/// `clip(w (1 + delta), w_min, w_max)` with `delta` chosen by the trend.
pub fn adjust_weight(w: f64, trend: Trend, cfg: &SaesConfig) -> f64 {
    let delta = match trend {
        Trend::Stagnant => cfg.stagnation_delta,
        Trend::Fast => cfg.fast_convergence_delta,
        Trend::Neutral => return w.clamp(cfg.weight_min, cfg.weight_max),
    };
    (w * (1.0 + delta)).clamp(cfg.weight_min, cfg.weight_max)
}

pub fn update_weights(weights: &[f64], gammas: &[Option<f64>], cfg: &SaesConfig) -> Vec<f64> {
    weights
        .iter()
        .zip(gammas)
        .map(|(&w, &g)| adjust_weight(w, classify(g, cfg), cfg))
        .collect()
}

/// Relative improvement of objective `j`'s best error over the stagnation
/// window: `(b(t - W) - b(t)) / (b(t - W) + 1e-9)`. `best` holds the
/// best-so-far errors after each generation. `None` with too little history
/// or once the best error is zero.
pub fn detect_stagnation(best: &[Vec<f64>], j: usize, cfg: &SaesConfig) -> Option<f64> {
    let w = cfg.stagnation_window;
    if best.len() <= w {
        return None;
    }
    let now = best[best.len() - 1][j];
    let then = best[best.len() - 1 - w][j];
    if now == 0.0 {
        return None;
    }
    Some((then - now) / (then + 1e-9))
}
