//! The generate-then-simulate pipeline seen by every optimizer.

use std::collections::HashMap;
use std::sync::Mutex;

use crate::error::Result;
use crate::geometry::{generate, ConditioningVector, VoxelGrid};
use crate::homogenize::{evaluate_properties, SolverConfig};
use crate::properties::PropertyVector;
use crate::task::TaskSpec;

/// Maps a conditioning vector to simulated properties. `feasible` on the
/// result carries the connectivity check. Implementations must be
/// deterministic so seeded runs reproduce.
pub trait Evaluator: Sync {
    fn evaluate(&self, x: &ConditioningVector) -> Result<PropertyVector>;
}

impl<F> Evaluator for F
where
    F: Fn(&ConditioningVector) -> Result<PropertyVector> + Sync,
{
    fn evaluate(&self, x: &ConditioningVector) -> Result<PropertyVector> {
        self(x)
    }
}

/// Gyroid generator followed by homogenization. Results are cached by the
/// voxel pattern, since nearby vectors often produce the same grid.
pub struct SimulationEvaluator {
    spec: TaskSpec,
    resolution: usize,
    solver: SolverConfig,
    cache: Mutex<HashMap<Vec<u8>, PropertyVector>>,
}

impl SimulationEvaluator {
    pub fn new(spec: TaskSpec, resolution: usize, solver: SolverConfig) -> Self {
        Self {
            spec,
            resolution,
            solver,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn spec(&self) -> &TaskSpec {
        &self.spec
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn cached(&self) -> usize {
        self.cache.lock().unwrap().len()
    }

    pub fn simulate(&self, grid: &VoxelGrid) -> Result<PropertyVector> {
        let key = grid.to_bytes();
        if let Some(hit) = self.cache.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let props = evaluate_properties(grid, &self.spec, &self.solver)?.properties;
        self.cache.lock().unwrap().insert(key, props.clone());
        Ok(props)
    }
}

impl Evaluator for SimulationEvaluator {
    fn evaluate(&self, x: &ConditioningVector) -> Result<PropertyVector> {
        self.simulate(&generate(x, self.resolution))
    }
}
