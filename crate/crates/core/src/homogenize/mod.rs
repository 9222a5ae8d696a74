//! Physics evaluators on periodic voxel cells: elasticity and conduction
//! homogenization with trilinear hexahedra and matrix-free PCG, plus J2
//! material-point plasticity.

mod conduction;
mod constants;
mod elastic;
pub mod hex8;
mod lattice;
pub mod pcg;
mod plasticity;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use conduction::{
    conduction_homogenize, normalized_conduction, ConductionSolution, ConductionTensor,
};
pub use constants::{engineering_constants, EngineeringConstants, MAX_CONDITION};
pub use elastic::{base_stiffness, elastic_homogenize, ElasticSolution, ElasticTensor};
pub use hex8::{isotropic_stiffness, Stiffness6};
pub use pcg::SolveStats;
pub use plasticity::{
    deviator, plastic_work_sweep, radial_return, von_mises, PlasticState, ReturnStep,
    SwiftHardening, NEWTON_MAX_ITERATIONS, NEWTON_TOLERANCE, RAMP_STEPS, RAMP_STRAIN,
};

use crate::error::{Error, Result};
use crate::geometry::VoxelGrid;
use crate::properties::{PropertyId, PropertyVector};
use crate::task::TaskSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preconditioner {
    Jacobi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Relative residual `|b - Ax| / |b|` at which a solve stops.
    pub residual_tol: f64,
    /// Void stiffness (and conductivity) relative to the base material.
    pub ersatz_stiffness: f64,
    pub preconditioner: Preconditioner,
    /// Keep the fluctuation fields in the solution (debug dumps).
    #[serde(default)]
    pub keep_fields: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            residual_tol: 1e-6,
            ersatz_stiffness: 1e-6,
            preconditioner: Preconditioner::Jacobi,
            keep_fields: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tol > 0.0) {
            return Err(Error::Config("residual_tol must be > 0".into()));
        }
        if !(self.ersatz_stiffness > 0.0 && self.ersatz_stiffness < 1.0) {
            return Err(Error::Config("ersatz_stiffness must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Which simulation produced a group of solver statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveKind {
    Elastic,
    Conduction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub kind: SolveKind,
    pub load_case: usize,
    pub iterations: usize,
    pub residual: f64,
}

/// Properties of one grid plus the statistics of every solve behind them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simulation {
    pub properties: PropertyVector,
    pub solves: Vec<SolveRecord>,
    pub elastic: Option<EngineeringConstants>,
}

/// Runs the simulations the task's objectives need. Solves always use the
/// base-material parameters. Disconnected grids are evaluated and flagged.
pub fn evaluate_properties(
    grid: &VoxelGrid,
    spec: &TaskSpec,
    cfg: &SolverConfig,
) -> Result<Simulation> {
    let mut props = PropertyVector {
        feasible: grid.is_connected(),
        ..PropertyVector::default()
    };
    let mut solves = Vec::new();
    let vf = grid.volume_fraction();
    if spec.needs(PropertyId::VolumeFraction) {
        props.set(PropertyId::VolumeFraction, vf);
    }

    let mut elastic_constants = None;
    if spec
        .objectives
        .iter()
        .any(|o| o.property.needs_elasticity())
    {
        let sol = elastic_homogenize(grid, &spec.material, cfg)?;
        solves.extend(sol.stats.iter().enumerate().map(|(m, s)| SolveRecord {
            kind: SolveKind::Elastic,
            load_case: m,
            iterations: s.iterations,
            residual: s.residual,
        }));
        let k = engineering_constants(&sol.tensor)?;
        for (id, v) in [
            (PropertyId::YoungModulus, k.e_avg),
            (PropertyId::ShearModulus, k.g_avg),
            (PropertyId::Poisson, k.nu_avg),
        ] {
            if spec.needs(id) {
                props.set(id, v);
            }
        }
        if spec.needs(PropertyId::PlasticWork) {
            let state = plastic_work_sweep(&spec.material, &k, vf)?;
            props.set(PropertyId::PlasticWork, state.plastic_work);
        }
        elastic_constants = Some(k);
    }

    let thermal = spec.needs(PropertyId::ThermalConductivity);
    let electrical = spec.needs(PropertyId::ElectricalConductivity);
    if thermal || electrical {
        let sol = normalized_conduction(grid, cfg)?;
        solves.extend(sol.stats.iter().enumerate().map(|(d, s)| SolveRecord {
            kind: SolveKind::Conduction,
            load_case: d,
            iterations: s.iterations,
            residual: s.residual,
        }));
        let ratio = sol.tensor.average();
        if thermal {
            props.set(
                PropertyId::ThermalConductivity,
                ratio * spec.material.thermal_conductivity_base,
            );
        }
        if electrical {
            props.set(
                PropertyId::ElectricalConductivity,
                ratio * spec.material.electrical_conductivity_base,
            );
        }
    }

    Ok(Simulation {
        properties: props,
        solves,
        elastic: elastic_constants,
    })
}

pub const FIELD_MAGIC: &[u8; 4] = b"VOXF";

/// Dumps per-node fields: a 16-byte header (magic, version, n, component
/// count, all little-endian u32) followed by the raw little-endian f64 values.
pub fn write_field_dump(
    mut w: impl Write,
    n: usize,
    components: usize,
    values: &[f64],
) -> Result<()> {
    if values.len() != n * n * n * components {
        return Err(Error::DimensionMismatch {
            expected: n * n * n * components,
            actual: values.len(),
        });
    }
    let mut header = [0u8; 16];
    header[..4].copy_from_slice(FIELD_MAGIC);
    header[4..8].copy_from_slice(&1u32.to_le_bytes());
    header[8..12].copy_from_slice(&(n as u32).to_le_bytes());
    header[12..16].copy_from_slice(&(components as u32).to_le_bytes());
    w.write_all(&header)?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}
