use serde::{Deserialize, Serialize};

use super::elastic::ElasticTensor;
use crate::error::{Error, Result};

/// Condition numbers above this are treated as numerically singular.
pub const MAX_CONDITION: f64 = 1e13;

/// Effective engineering constants read off the compliance `S = C^-1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineeringConstants {
    pub ex: f64,
    pub ey: f64,
    pub ez: f64,
    pub gxy: f64,
    pub gxz: f64,
    pub gyz: f64,
    pub nu_xy: f64,
    pub nu_xz: f64,
    pub nu_yz: f64,
    pub e_avg: f64,
    pub g_avg: f64,
    pub nu_avg: f64,
    pub condition: f64,
}

impl EngineeringConstants {
    /// Shear and bulk moduli of the isotropic material with `E_avg`, `nu_avg`.
    pub fn isotropic_moduli(&self) -> (f64, f64) {
        let shear = self.e_avg / (2.0 * (1.0 + self.nu_avg));
        let bulk = self.e_avg / (3.0 * (1.0 - 2.0 * self.nu_avg));
        (shear, bulk)
    }
}

pub fn engineering_constants(tensor: &ElasticTensor) -> Result<EngineeringConstants> {
    let ev = tensor.eigenvalues();
    let condition = if ev[0] > 0.0 {
        ev[5] / ev[0]
    } else {
        f64::INFINITY
    };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularTensor { condition });
    }
    let s = tensor
        .c
        .try_inverse()
        .ok_or(Error::SingularTensor { condition })?;
    let (ex, ey, ez) = (1.0 / s[(0, 0)], 1.0 / s[(1, 1)], 1.0 / s[(2, 2)]);
    let (gyz, gxz, gxy) = (1.0 / s[(3, 3)], 1.0 / s[(4, 4)], 1.0 / s[(5, 5)]);
    let nu_xy = -s[(0, 1)] / s[(0, 0)];
    let nu_xz = -s[(0, 2)] / s[(0, 0)];
    let nu_yz = -s[(1, 2)] / s[(1, 1)];
    Ok(EngineeringConstants {
        ex,
        ey,
        ez,
        gxy,
        gxz,
        gyz,
        nu_xy,
        nu_xz,
        nu_yz,
        e_avg: (ex + ey + ez) / 3.0,
        g_avg: (gxy + gxz + gyz) / 3.0,
        nu_avg: (nu_xy + nu_xz + nu_yz) / 3.0,
        condition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homogenize::hex8::{isotropic_stiffness, Stiffness6};

    #[test]
    fn isotropic_round_trip() {
        let t = ElasticTensor {
            c: isotropic_stiffness(3000.0, 0.25),
        };
        let k = engineering_constants(&t).unwrap();
        for e in [k.ex, k.ey, k.ez, k.e_avg] {
            assert!((e - 3000.0).abs() < 1e-10 * 3000.0);
        }
        for nu in [k.nu_xy, k.nu_xz, k.nu_yz, k.nu_avg] {
            assert!((nu - 0.25).abs() < 1e-10);
        }
        for g in [k.gxy, k.gxz, k.gyz, k.g_avg] {
            assert!((g - 1200.0).abs() < 1e-10 * 1200.0);
        }
        let (shear, _) = k.isotropic_moduli();
        assert!((shear - 1200.0).abs() < 1e-9);
    }

    /// Gauss-Jordan inverse with partial pivoting, independent of nalgebra.
    fn gauss_jordan(c: &Stiffness6) -> [[f64; 6]; 6] {
        let mut a = [[0.0; 12]; 6];
        for i in 0..6 {
            for j in 0..6 {
                a[i][j] = c[(i, j)];
            }
            a[i][6 + i] = 1.0;
        }
        for col in 0..6 {
            let piv = (col..6)
                .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
                .unwrap();
            a.swap(col, piv);
            let p = a[col][col];
            for v in a[col].iter_mut() {
                *v /= p;
            }
            for r in 0..6 {
                if r != col {
                    let f = a[r][col];
                    for j in 0..12 {
                        a[r][j] -= f * a[col][j];
                    }
                }
            }
        }
        let mut inv = [[0.0; 6]; 6];
        for i in 0..6 {
            inv[i].copy_from_slice(&a[i][6..]);
        }
        inv
    }

    #[test]
    fn general_tensor_matches_independent_inverse() {
        for c in [Stiffness6::identity() * 7.5, {
            let mut m = isotropic_stiffness(200.0, 0.3);
            m[(0, 0)] *= 1.4;
            m[(3, 3)] *= 0.7;
            m[(0, 1)] += 5.0;
            m[(1, 0)] += 5.0;
            m
        }] {
            let k = engineering_constants(&ElasticTensor { c }).unwrap();
            let s = gauss_jordan(&c);
            assert!((k.ex - 1.0 / s[0][0]).abs() < 1e-12 * k.ex);
            assert!((k.ey - 1.0 / s[1][1]).abs() < 1e-12 * k.ey);
            assert!((k.gyz - 1.0 / s[3][3]).abs() < 1e-12 * k.gyz);
            assert!((k.gxy - 1.0 / s[5][5]).abs() < 1e-12 * k.gxy);
            assert!((k.nu_xy + s[0][1] / s[0][0]).abs() < 1e-12);
            assert!((k.nu_yz + s[1][2] / s[1][1]).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_tensor_rejected() {
        let mut c = isotropic_stiffness(1.0, 0.3);
        for i in 0..6 {
            c[(3, i)] = 0.0;
            c[(i, 3)] = 0.0;
        }
        assert!(matches!(
            engineering_constants(&ElasticTensor { c }),
            Err(Error::SingularTensor { .. })
        ));
    }
}
