//! Scalar (thermal or electrical) conduction homogenization.
//!
//! Same cell-problem structure as elasticity with one unknown per node: for
//! each unit macroscopic gradient `e_i` the periodic potential fluctuation is
//! found, and `K_ij` is the volume average of `(e_i - grad phi_i) . k (e_j -
//! grad phi_j)`. The kernel is computed for unit base conductivity and scaled
//! afterwards, so thermal and electrical results differ only by that factor.

use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hex8::{ScalarElement, NODES};
use super::lattice::Lattice;
use super::pcg::{pcg, LinearOperator, SolveStats};
use super::SolverConfig;
use crate::error::{Error, Result};
use crate::geometry::VoxelGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConductionTensor {
    pub k: Matrix3<f64>,
}

impl ConductionTensor {
    pub fn average(&self) -> f64 {
        self.k.trace() / 3.0
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { k: self.k * s }
    }
}

#[derive(Debug, Clone)]
pub struct ConductionSolution {
    pub tensor: ConductionTensor,
    pub stats: [SolveStats; 3],
    pub fields: Option<Vec<Vec<f64>>>,
}

struct ScalarOperator<'a> {
    lattice: &'a Lattice,
    element: &'a ScalarElement,
    scale: &'a [f64],
}

impl ScalarOperator<'_> {
    fn load(&self, d: usize) -> (Vec<f64>, f64) {
        let mut b = vec![0.0; self.dim()];
        let mut abs = vec![0.0; self.dim()];
        for (nodes, &s) in self.lattice.elements.iter().zip(self.scale) {
            for (a, &node) in nodes.iter().enumerate() {
                let f = s * self.element.load[a * 3 + d];
                b[node as usize] += f;
                abs[node as usize] += f.abs();
            }
        }
        (b, abs.iter().map(|v| v * v).sum::<f64>().sqrt())
    }
}

impl LinearOperator for ScalarOperator<'_> {
    fn dim(&self) -> usize {
        self.lattice.nodes()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        let k = &self.element.stiffness;
        let mut xe = [0.0; NODES];
        for (nodes, &s) in self.lattice.elements.iter().zip(self.scale) {
            for (v, &node) in xe.iter_mut().zip(nodes) {
                *v = x[node as usize];
            }
            for (a, &node) in nodes.iter().enumerate() {
                let row = &k[a * NODES..(a + 1) * NODES];
                let acc: f64 = row.iter().zip(&xe).map(|(k, x)| k * x).sum();
                y[node as usize] += s * acc;
            }
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let mut diag = vec![0.0; self.dim()];
        for (nodes, &s) in self.lattice.elements.iter().zip(self.scale) {
            for (a, &node) in nodes.iter().enumerate() {
                diag[node as usize] += s * self.element.stiffness[a * NODES + a];
            }
        }
        diag
    }
}

/// Effective conductivity tensor for a base conductivity `base`.
pub fn conduction_homogenize(
    grid: &VoxelGrid,
    base: f64,
    cfg: &SolverConfig,
) -> Result<ConductionSolution> {
    if !(base > 0.0) {
        return Err(Error::DegenerateMaterial(format!("conductivity {base}")));
    }
    let unit = normalized_conduction(grid, cfg)?;
    Ok(ConductionSolution {
        tensor: unit.tensor.scaled(base),
        ..unit
    })
}

/// Conductivity tensor for unit base conductivity.
pub fn normalized_conduction(grid: &VoxelGrid, cfg: &SolverConfig) -> Result<ConductionSolution> {
    cfg.validate()?;
    let lattice = Lattice::new(grid.resolution());
    let element = ScalarElement::new();
    let scale = Lattice::phase_scale(grid, cfg.ersatz_stiffness);
    let op = ScalarOperator {
        lattice: &lattice,
        element: &element,
        scale: &scale,
    };
    let solved: Vec<(Vec<f64>, SolveStats)> = (0..3)
        .into_par_iter()
        .map(|d| {
            let (b, abs_scale) = op.load(d);
            let mut phi = vec![0.0; op.dim()];
            let stats = pcg(
                &op,
                &b,
                &mut phi,
                cfg.residual_tol,
                cfg.max_iterations,
                1e-12 * abs_scale,
            )?;
            Ok((phi, stats))
        })
        .collect::<Result<_>>()?;

    let mut k = Matrix3::zeros();
    let mut total_scale = 0.0;
    let mut pe = [[0.0; NODES]; 3];
    let mut kpe = [[0.0; NODES]; 3];
    for (nodes, &s) in lattice.elements.iter().zip(&scale) {
        total_scale += s;
        for d in 0..3 {
            for (a, &node) in nodes.iter().enumerate() {
                pe[d][a] = solved[d].0[node as usize];
            }
            for a in 0..NODES {
                let row = &element.stiffness[a * NODES..(a + 1) * NODES];
                kpe[d][a] = row.iter().zip(&pe[d]).map(|(k, p)| k * p).sum();
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for a in 0..NODES {
                    acc += pe[i][a] * kpe[j][a]
                        - element.load[a * 3 + i] * pe[j][a]
                        - pe[i][a] * element.load[a * 3 + j];
                }
                k[(i, j)] += s * acc;
            }
        }
    }
    let volume = lattice.elements.len() as f64;
    let k = Matrix3::identity() * (total_scale / volume) + k / volume;
    let k = (k + k.transpose()) * 0.5;
    let stats = std::array::from_fn(|d| solved[d].1);
    let fields = cfg
        .keep_fields
        .then(|| solved.into_iter().map(|(p, _)| p).collect());
    Ok(ConductionSolution {
        tensor: ConductionTensor { k },
        stats,
        fields,
    })
}
