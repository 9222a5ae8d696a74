//! Closed-loop inverse design of periodic microstructures: a gyroid
//! generator, voxel homogenization, simulation-aware evolutionary search,
//! comparison baselines, benchmark metrics and a batch pipeline.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod baselines;
pub mod error;
pub mod evaluator;
pub mod geometry;
pub mod homogenize;
pub mod metrics;
pub mod pareto;
pub mod pipeline;
pub mod properties;
pub mod saes;
pub mod task;

pub use error::{Error, Result};
pub use evaluator::{Evaluator, SimulationEvaluator};
pub use geometry::{ConditioningVector, SeedLibrary, VoxelGrid};
pub use homogenize::SolverConfig;
pub use properties::{PropertyId, PropertyVector};
pub use saes::{EvalRecord, Method, RunResult, SaesConfig};
pub use task::{MaterialParams, ObjectiveKind, ObjectiveSpec, TaskSpec};
