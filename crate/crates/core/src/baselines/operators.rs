//! Real-coded variation operators on the unit box.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ConditioningVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Nsga2Config {
    pub population: usize,
    pub max_generations: usize,
    pub sbx_eta: f64,
    pub mutation_eta: f64,
    pub crossover_prob: f64,
    /// Per-coordinate mutation probability; `None` means `1 / d`.
    pub mutation_prob: Option<f64>,
}

impl Default for Nsga2Config {
    fn default() -> Self {
        Self {
            population: 20,
            max_generations: 10,
            sbx_eta: 15.0,
            mutation_eta: 20.0,
            crossover_prob: 0.9,
            mutation_prob: None,
        }
    }
}

impl Nsga2Config {
    pub fn validate(&self) -> Result<()> {
        let probs = [Some(self.crossover_prob), self.mutation_prob];
        if probs.iter().flatten().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config("probabilities must lie in [0, 1]".into()));
        }
        if !(self.sbx_eta > 0.0 && self.mutation_eta > 0.0) {
            return Err(Error::Config("distribution indices must be > 0".into()));
        }
        if self.population < 2 {
            return Err(Error::Config("population must be >= 2".into()));
        }
        Ok(())
    }

    pub fn mutation_prob_for(&self, dim: usize) -> f64 {
        self.mutation_prob.unwrap_or(1.0 / dim.max(1) as f64)
    }
}

/// Spread factor of simulated binary crossover for a uniform draw `u`.
pub fn sbx_beta(u: f64, eta: f64) -> f64 {
    let e = 1.0 / (eta + 1.0);
    if u <= 0.5 {
        (2.0 * u).powf(e)
    } else {
        (1.0 / (2.0 * (1.0 - u))).powf(e)
    }
}

/// Simulated binary crossover. One draw gates the whole crossover; when it
/// passes, every coordinate takes one draw `u` and the children are
/// `0.5 ((1 +- b) p1 + (1 -+ b) p2)`, clamped to `[0, 1]`.
pub fn sbx_crossover<R: Rng>(
    p1: &ConditioningVector,
    p2: &ConditioningVector,
    cfg: &Nsga2Config,
    rng: &mut R,
) -> (ConditioningVector, ConditioningVector) {
    assert_eq!(p1.dim(), p2.dim(), "parents must share dimension");
    if rng.gen::<f64>() >= cfg.crossover_prob {
        return (p1.clone(), p2.clone());
    }
    let mut c1 = Vec::with_capacity(p1.dim());
    let mut c2 = Vec::with_capacity(p1.dim());
    for (&a, &b) in p1.coords().iter().zip(p2.coords()) {
        let beta = sbx_beta(rng.gen::<f64>(), cfg.sbx_eta);
        c1.push((0.5 * ((1.0 + beta) * a + (1.0 - beta) * b)).clamp(0.0, 1.0));
        c2.push((0.5 * ((1.0 - beta) * a + (1.0 + beta) * b)).clamp(0.0, 1.0));
    }
    (ConditioningVector::new(c1), ConditioningVector::new(c2))
}

/// Perturbation of polynomial mutation for a uniform draw `u`, in `[-1, 1]`.
pub fn polynomial_delta(u: f64, eta: f64) -> f64 {
    let e = 1.0 / (eta + 1.0);
    if u < 0.5 {
        (2.0 * u).powf(e) - 1.0
    } else {
        1.0 - (2.0 * (1.0 - u)).powf(e)
    }
}

/// Polynomial mutation: each coordinate takes a gate draw and, when it
/// mutates, a second draw for the perturbation. Results are clamped.
pub fn polynomial_mutation<R: Rng>(
    x: &ConditioningVector,
    cfg: &Nsga2Config,
    rng: &mut R,
) -> ConditioningVector {
    let pm = cfg.mutation_prob_for(x.dim());
    let coords = x
        .coords()
        .iter()
        .map(|&c| {
            if rng.gen::<f64>() < pm {
                (c + polynomial_delta(rng.gen::<f64>(), cfg.mutation_eta)).clamp(0.0, 1.0)
            } else {
                c
            }
        })
        .collect();
    ConditioningVector::new(coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(c: &[f64]) -> ConditioningVector {
        ConditioningVector::new(c.to_vec())
    }

    #[test]
    fn identical_parents_reproduce() {
        let p = v(&[0.3, 0.7, 0.1]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let (a, b) = sbx_crossover(&p, &p, &Nsga2Config::default(), &mut rng);
            for (x, y) in a.coords().iter().zip(p.coords()) {
                assert!((x - y).abs() < 1e-15);
            }
            assert_eq!(a, b);
        }
    }

    #[test]
    fn zero_probabilities_are_identity() {
        let cfg = Nsga2Config {
            crossover_prob: 0.0,
            mutation_prob: Some(0.0),
            ..Nsga2Config::default()
        };
        let (p1, p2) = (v(&[0.2, 0.2]), v(&[0.8, 0.9]));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sbx_crossover(&p1, &p2, &cfg, &mut rng), (p1.clone(), p2));
        assert_eq!(polynomial_mutation(&p1, &cfg, &mut rng), p1);
    }

    #[test]
    fn boundary_mutates_inward() {
        let cfg = Nsga2Config {
            mutation_prob: Some(1.0),
            ..Nsga2Config::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let m = polynomial_mutation(&v(&[1.0]), &cfg, &mut rng);
            assert!(m.coords()[0] <= 1.0 && m.coords()[0] >= 0.0);
        }
    }

    #[test]
    fn spread_factor_is_one_at_half() {
        assert_eq!(sbx_beta(0.5, 15.0), 1.0);
        assert_eq!(polynomial_delta(0.5, 20.0), 0.0);
        assert!(polynomial_delta(0.0, 20.0) == -1.0);
    }

    #[test]
    fn validation() {
        assert!(Nsga2Config::default().validate().is_ok());
        let bad = Nsga2Config {
            crossover_prob: 1.5,
            ..Nsga2Config::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!(Nsga2Config::default().mutation_prob_for(4), 0.25);
    }
}
