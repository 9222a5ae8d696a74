//! Periodic elasticity homogenization.
//!
//! For each unit macroscopic strain `e_m` the cell problem
//! `K u_m = f_m` with `f_m = sum_e rho_e int B^T C e_m` is solved for a
//! periodic field `u_m`, and the effective tensor follows from the energy of
//! the corrected strain:
//! `C^H_mp = |V|^-1 sum_e rho_e int (e_m - B u_m)^T C (e_p - B u_p)`.

use nalgebra::SymmetricEigen;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hex8::{isotropic_stiffness, ElasticElement, Stiffness6, ELASTIC_DOFS, NODES};
use super::lattice::Lattice;
use super::pcg::{pcg, LinearOperator, SolveStats};
use super::SolverConfig;
use crate::error::{Error, Result};
use crate::geometry::VoxelGrid;
use crate::task::MaterialParams;

/// Homogenized stiffness in Voigt notation (MPa).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElasticTensor {
    pub c: Stiffness6,
}

impl ElasticTensor {
    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn asymmetry(&self) -> f64 {
        (self.c - self.c.transpose())
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 6] {
        let sym = (self.c + self.c.transpose()) * 0.5;
        let mut ev: Vec<f64> = SymmetricEigen::new(sym)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev.try_into().unwrap()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { c: self.c * s }
    }
}

/// Base-material stiffness used by every solid voxel.
pub fn base_stiffness(material: &MaterialParams) -> Stiffness6 {
    isotropic_stiffness(material.young_modulus_base, material.poisson_base)
}

#[derive(Debug, Clone)]
pub struct ElasticSolution {
    pub tensor: ElasticTensor,
    pub stats: [SolveStats; 6],
    /// Fluctuation fields, one `3 n^3` vector per load case, when requested.
    pub fields: Option<Vec<Vec<f64>>>,
}

struct ElasticOperator<'a> {
    lattice: &'a Lattice,
    element: &'a ElasticElement,
    scale: &'a [f64],
}

impl ElasticOperator<'_> {
    #[inline]
    fn dofs(nodes: &[u32; NODES]) -> [usize; ELASTIC_DOFS] {
        let mut d = [0usize; ELASTIC_DOFS];
        for (a, &node) in nodes.iter().enumerate() {
            let base = 3 * node as usize;
            d[3 * a] = base;
            d[3 * a + 1] = base + 1;
            d[3 * a + 2] = base + 2;
        }
        d
    }

    /// Right-hand side of load case `m`, and the norm of the same assembly
    /// with absolute values (a scale for detecting cancelled loads).
    fn load(&self, m: usize) -> (Vec<f64>, f64) {
        let mut b = vec![0.0; self.dim()];
        let mut abs = vec![0.0; self.dim()];
        for (nodes, &s) in self.lattice.elements.iter().zip(self.scale) {
            let dofs = Self::dofs(nodes);
            for (i, &dof) in dofs.iter().enumerate() {
                let f = s * self.element.load[i * 6 + m];
                b[dof] += f;
                abs[dof] += f.abs();
            }
        }
        let scale = abs.iter().map(|v| v * v).sum::<f64>().sqrt();
        (b, scale)
    }
}

impl LinearOperator for ElasticOperator<'_> {
    fn dim(&self) -> usize {
        3 * self.lattice.nodes()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        let k = &self.element.stiffness;
        let mut ue = [0.0; ELASTIC_DOFS];
        for (nodes, &s) in self.lattice.elements.iter().zip(self.scale) {
            let dofs = Self::dofs(nodes);
            for (u, &d) in ue.iter_mut().zip(&dofs) {
                *u = x[d];
            }
            for (i, &d) in dofs.iter().enumerate() {
                let row = &k[i * ELASTIC_DOFS..(i + 1) * ELASTIC_DOFS];
                let mut acc = 0.0;
                for j in 0..ELASTIC_DOFS {
                    acc += row[j] * ue[j];
                }
                y[d] += s * acc;
            }
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let mut diag = vec![0.0; self.dim()];
        for (nodes, &s) in self.lattice.elements.iter().zip(self.scale) {
            for (i, &d) in Self::dofs(nodes).iter().enumerate() {
                diag[d] += s * self.element.stiffness[i * ELASTIC_DOFS + i];
            }
        }
        diag
    }
}

/// Solves the six periodic cell problems and assembles `C^H`.
pub fn elastic_homogenize(
    grid: &VoxelGrid,
    material: &MaterialParams,
    cfg: &SolverConfig,
) -> Result<ElasticSolution> {
    cfg.validate()?;
    if material.young_modulus_base <= 0.0 || !(0.0..0.5).contains(&material.poisson_base) {
        return Err(Error::DegenerateMaterial(format!(
            "E = {}, nu = {}",
            material.young_modulus_base, material.poisson_base
        )));
    }
    let lattice = Lattice::new(grid.resolution());
    let element = ElasticElement::new(base_stiffness(material));
    let scale = Lattice::phase_scale(grid, cfg.ersatz_stiffness);
    let op = ElasticOperator {
        lattice: &lattice,
        element: &element,
        scale: &scale,
    };

    let solved: Vec<(Vec<f64>, SolveStats)> = (0..6)
        .into_par_iter()
        .map(|m| {
            let (b, abs_scale) = op.load(m);
            let mut u = vec![0.0; op.dim()];
            let stats = pcg(
                &op,
                &b,
                &mut u,
                cfg.residual_tol,
                cfg.max_iterations,
                1e-12 * abs_scale,
            )?;
            Ok((u, stats))
        })
        .collect::<Result<_>>()?;

    let c = assemble(&op, &solved);
    let stats: [SolveStats; 6] = std::array::from_fn(|m| solved[m].1);
    let fields = cfg
        .keep_fields
        .then(|| solved.into_iter().map(|(u, _)| u).collect());
    Ok(ElasticSolution {
        tensor: ElasticTensor { c },
        stats,
        fields,
    })
}

fn assemble(op: &ElasticOperator<'_>, solved: &[(Vec<f64>, SolveStats)]) -> Stiffness6 {
    let el = op.element;
    let mut c = Stiffness6::zeros();
    let mut ue = [[0.0; ELASTIC_DOFS]; 6];
    let mut kue = [[0.0; ELASTIC_DOFS]; 6];
    let mut total_scale = 0.0;
    for (nodes, &s) in op.lattice.elements.iter().zip(op.scale) {
        total_scale += s;
        let dofs = ElasticOperator::dofs(nodes);
        for m in 0..6 {
            for (i, &d) in dofs.iter().enumerate() {
                ue[m][i] = solved[m].0[d];
            }
            for i in 0..ELASTIC_DOFS {
                let row = &el.stiffness[i * ELASTIC_DOFS..(i + 1) * ELASTIC_DOFS];
                kue[m][i] = row.iter().zip(&ue[m]).map(|(k, u)| k * u).sum();
            }
        }
        for m in 0..6 {
            for p in 0..6 {
                let mut acc = 0.0;
                for i in 0..ELASTIC_DOFS {
                    acc += ue[m][i] * kue[p][i]
                        - el.load[i * 6 + m] * ue[p][i]
                        - ue[m][i] * el.load[i * 6 + p];
                }
                c[(m, p)] += s * acc;
            }
        }
    }
    let volume = op.lattice.elements.len() as f64;
    let c = el.material * (total_scale / volume) + c / volume;
    (c + c.transpose()) * 0.5
}
