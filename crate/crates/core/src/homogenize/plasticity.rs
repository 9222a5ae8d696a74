//! J2 (von Mises) material-point plasticity with Swift isotropic hardening,
//! integrated by radial return.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::constants::EngineeringConstants;
use crate::error::{Error, Result};
use crate::task::MaterialParams;

pub const NEWTON_TOLERANCE: f64 = 1e-8;
pub const NEWTON_MAX_ITERATIONS: usize = 100;

/// Stress in MPa, tensor (not Voigt) components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlasticState {
    pub stress: Matrix3<f64>,
    pub eq_plastic_strain: f64,
    /// Plastic work per unit volume, MJ/m^3.
    pub plastic_work: f64,
}

impl Default for PlasticState {
    fn default() -> Self {
        Self {
            stress: Matrix3::zeros(),
            eq_plastic_strain: 0.0,
            plastic_work: 0.0,
        }
    }
}

impl PlasticState {
    pub fn von_mises(&self) -> f64 {
        von_mises(&self.stress)
    }
}

pub fn deviator(t: &Matrix3<f64>) -> Matrix3<f64> {
    t - Matrix3::identity() * (t.trace() / 3.0)
}

pub fn von_mises(stress: &Matrix3<f64>) -> f64 {
    let s = deviator(stress);
    (1.5 * s.component_mul(&s).sum()).sqrt()
}

/// `sigma_y(p) = sigma_y0 (1 + p / eps0)^n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwiftHardening {
    pub sigma_y0: f64,
    pub eps0: f64,
    pub n: f64,
}

impl SwiftHardening {
    pub fn from_material(m: &MaterialParams) -> Self {
        Self {
            sigma_y0: m.yield_stress_0,
            eps0: m.reference_strain_eps0,
            n: m.hardening_exponent_n,
        }
    }

    pub fn yield_stress(&self, p: f64) -> f64 {
        self.sigma_y0 * (1.0 + p / self.eps0).powf(self.n)
    }

    pub fn slope(&self, p: f64) -> f64 {
        if self.n == 0.0 {
            return 0.0;
        }
        self.sigma_y0 * self.n / self.eps0 * (1.0 + p / self.eps0).powf(self.n - 1.0)
    }
}

/// Outcome of one return-mapping step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReturnStep {
    pub state: PlasticState,
    pub delta_gamma: f64,
    pub newton_iterations: usize,
}

/// Integrates one strain increment (tensor components). The elastic law is
/// the isotropic one carrying the averaged constants `E_avg` and `nu_avg`.
pub fn radial_return(
    state: &PlasticState,
    strain_increment: &Matrix3<f64>,
    material: &MaterialParams,
    elastic: &EngineeringConstants,
) -> Result<ReturnStep> {
    let (shear, bulk) = elastic.isotropic_moduli();
    if !(shear > 0.0 && bulk > 0.0) {
        return Err(Error::DegenerateMaterial(format!(
            "elastic moduli G = {shear}, K = {bulk}"
        )));
    }
    let hardening = SwiftHardening::from_material(material);

    let trial = state.stress
        + Matrix3::identity() * (bulk * strain_increment.trace())
        + deviator(strain_increment) * (2.0 * shear);
    let trial_vm = von_mises(&trial);
    let p0 = state.eq_plastic_strain;
    if trial_vm - hardening.yield_stress(p0) <= 0.0 {
        return Ok(ReturnStep {
            state: PlasticState {
                stress: trial,
                ..*state
            },
            delta_gamma: 0.0,
            newton_iterations: 0,
        });
    }

    // r(dg) = trial_vm - 3 G dg - sigma_y(p0 + dg)
    let upper = trial_vm / (3.0 * shear);
    let mut dg = 0.0f64;
    let mut iterations = 0;
    loop {
        if iterations == NEWTON_MAX_ITERATIONS {
            let r = trial_vm - 3.0 * shear * dg - hardening.yield_stress(p0 + dg);
            return Err(Error::ReturnMapping(format!(
                "Newton did not converge in {NEWTON_MAX_ITERATIONS} iterations (residual {r:.3e})"
            )));
        }
        iterations += 1;
        let r = trial_vm - 3.0 * shear * dg - hardening.yield_stress(p0 + dg);
        let dr = -3.0 * shear - hardening.slope(p0 + dg);
        let next = (dg - r / dr).clamp(0.0, upper);
        let step = next - dg;
        dg = next;
        if step.abs() < NEWTON_TOLERANCE {
            break;
        }
    }
    if dg < 0.0 {
        return Err(Error::ReturnMapping(format!(
            "negative plastic multiplier {dg}"
        )));
    }

    let factor = 1.0 - 3.0 * shear * dg / trial_vm;
    let stress = deviator(&trial) * factor + Matrix3::identity() * (trial.trace() / 3.0);
    let p1 = p0 + dg;
    let work = 0.5 * (hardening.yield_stress(p0) + hardening.yield_stress(p1)) * dg;
    Ok(ReturnStep {
        state: PlasticState {
            stress,
            eq_plastic_strain: p1,
            plastic_work: state.plastic_work + work,
        },
        delta_gamma: dg,
        newton_iterations: iterations,
    })
}

pub const RAMP_STEPS: usize = 20;
pub const RAMP_STRAIN: f64 = 0.05;

/// Plastic work after a 20-step uniaxial-strain ramp to 5 % along x, with
/// the initial yield stress scaled by the solid volume fraction.
pub fn plastic_work_sweep(
    material: &MaterialParams,
    elastic: &EngineeringConstants,
    volume_fraction: f64,
) -> Result<PlasticState> {
    let mut scaled = material.clone();
    scaled.yield_stress_0 *= volume_fraction;
    let mut inc = Matrix3::zeros();
    inc[(0, 0)] = RAMP_STRAIN / RAMP_STEPS as f64;
    let mut state = PlasticState::default();
    for _ in 0..RAMP_STEPS {
        state = radial_return(&state, &inc, &scaled, elastic)?.state;
    }
    Ok(state)
}
