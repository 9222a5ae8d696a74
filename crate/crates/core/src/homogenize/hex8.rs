//! Trilinear 8-node hexahedron on a unit voxel, integrated with 2x2x2 Gauss
//! points. Local node `a` sits at offset `(a & 1, (a >> 1) & 1, (a >> 2) & 1)`.
//! Strains use Voigt order `xx, yy, zz, yz, xz, xy` with engineering shears.

use nalgebra::SMatrix;

pub type Stiffness6 = SMatrix<f64, 6, 6>;

pub const NODES: usize = 8;
pub const ELASTIC_DOFS: usize = 24;

#[inline]
pub fn node_offset(a: usize) -> [usize; 3] {
    [a & 1, (a >> 1) & 1, (a >> 2) & 1]
}

fn gauss_points() -> impl Iterator<Item = [f64; 3]> {
    let g = 0.5 / 3f64.sqrt();
    let pts = [0.5 - g, 0.5 + g];
    (0..8).map(move |q| [pts[q & 1], pts[(q >> 1) & 1], pts[(q >> 2) & 1]])
}

/// Shape-function gradients of all eight nodes at a point of the unit cube.
fn gradients(p: [f64; 3]) -> [[f64; 3]; NODES] {
    let mut grads = [[0.0; 3]; NODES];
    for (a, grad) in grads.iter_mut().enumerate() {
        let o = node_offset(a);
        let val = |d: usize| if o[d] == 1 { p[d] } else { 1.0 - p[d] };
        let der = |d: usize| if o[d] == 1 { 1.0 } else { -1.0 };
        *grad = [
            der(0) * val(1) * val(2),
            val(0) * der(1) * val(2),
            val(0) * val(1) * der(2),
        ];
    }
    grads
}

/// Strain-displacement matrix, row-major 6 x 24.
fn strain_matrix(grads: &[[f64; 3]; NODES]) -> [[f64; ELASTIC_DOFS]; 6] {
    let mut b = [[0.0; ELASTIC_DOFS]; 6];
    for (a, g) in grads.iter().enumerate() {
        let (cx, cy, cz) = (3 * a, 3 * a + 1, 3 * a + 2);
        b[0][cx] = g[0];
        b[1][cy] = g[1];
        b[2][cz] = g[2];
        b[3][cy] = g[2];
        b[3][cz] = g[1];
        b[4][cx] = g[2];
        b[4][cz] = g[0];
        b[5][cx] = g[1];
        b[5][cy] = g[0];
    }
    b
}

/// Isotropic Voigt stiffness.
pub fn isotropic_stiffness(young: f64, poisson: f64) -> Stiffness6 {
    let lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
    let mu = young / (2.0 * (1.0 + poisson));
    let mut c = Stiffness6::zeros();
    for i in 0..3 {
        for j in 0..3 {
            c[(i, j)] = lambda;
        }
        c[(i, i)] = lambda + 2.0 * mu;
        c[(i + 3, i + 3)] = mu;
    }
    c
}

/// Element matrices of the elastic cell problem.
#[derive(Debug, Clone)]
pub struct ElasticElement {
    /// 24 x 24, row-major.
    pub stiffness: Vec<f64>,
    /// `int B^T C dV`, 24 x 6 row-major: the load of a unit macroscopic strain.
    pub load: Vec<f64>,
    pub material: Stiffness6,
}

impl ElasticElement {
    pub fn new(material: Stiffness6) -> Self {
        let mut stiffness = vec![0.0; ELASTIC_DOFS * ELASTIC_DOFS];
        let mut load = vec![0.0; ELASTIC_DOFS * 6];
        let w = 1.0 / 8.0;
        for p in gauss_points() {
            let b = strain_matrix(&gradients(p));
            // cb = C B (6 x 24)
            let mut cb = [[0.0; ELASTIC_DOFS]; 6];
            for i in 0..6 {
                for j in 0..ELASTIC_DOFS {
                    cb[i][j] = (0..6).map(|k| material[(i, k)] * b[k][j]).sum();
                }
            }
            for i in 0..ELASTIC_DOFS {
                for j in 0..ELASTIC_DOFS {
                    stiffness[i * ELASTIC_DOFS + j] +=
                        w * (0..6).map(|k| b[k][i] * cb[k][j]).sum::<f64>();
                }
                for m in 0..6 {
                    load[i * 6 + m] += w * (0..6).map(|k| b[k][i] * material[(k, m)]).sum::<f64>();
                }
            }
        }
        Self {
            stiffness,
            load,
            material,
        }
    }
}

/// Element matrices of the scalar conduction cell problem (unit conductivity).
#[derive(Debug, Clone)]
pub struct ScalarElement {
    /// 8 x 8, row-major.
    pub stiffness: Vec<f64>,
    /// `int grad N dV`, 8 x 3 row-major.
    pub load: Vec<f64>,
}

impl ScalarElement {
    pub fn new() -> Self {
        let mut stiffness = vec![0.0; NODES * NODES];
        let mut load = vec![0.0; NODES * 3];
        let w = 1.0 / 8.0;
        for p in gauss_points() {
            let g = gradients(p);
            for a in 0..NODES {
                for b in 0..NODES {
                    stiffness[a * NODES + b] += w * (0..3).map(|d| g[a][d] * g[b][d]).sum::<f64>();
                }
                for d in 0..3 {
                    load[a * 3 + d] += w * g[a][d];
                }
            }
        }
        Self { stiffness, load }
    }
}

impl Default for ScalarElement {
    fn default() -> Self {
        Self::new()
    }
}
