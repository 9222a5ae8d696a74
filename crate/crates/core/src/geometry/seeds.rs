//! Precomputed design library used to seed the initial population.
//!
//! Entries store properties normalized by the base material (moduli by
//! `E_base`, conductivities by the base conductivity), so one library serves
//! every task. Predictions for a task rescale them with the task's material;
//! Poisson's ratio is taken as stored, which is an approximation whenever the
//! task's base Poisson ratio differs from the library's reference value.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gyroid::{generate, ConditioningVector, CONDITIONING_DIM, GENERATOR_VERSION};
use crate::error::Result;
use crate::homogenize::{
    elastic_homogenize, engineering_constants, normalized_conduction, SolverConfig,
};
use crate::properties::{PropertyId, PropertyVector};
use crate::task::{MaterialParams, ObjectiveKind, TaskSpec};

const BUNDLED: &str = include_str!("../../data/seed_library.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedProvenance {
    pub generator_version: u32,
    pub resolution: usize,
    pub residual_tol: f64,
    pub ersatz_stiffness: f64,
    pub reference_poisson: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedEntry {
    pub coords: ConditioningVector,
    pub young_ratio: f64,
    pub shear_ratio: f64,
    pub poisson: f64,
    pub conductivity_ratio: f64,
    pub volume_fraction: f64,
    pub connected: bool,
    pub provenance: SeedProvenance,
}

impl SeedEntry {
    /// Properties this entry predicts for a design made of `material`.
    pub fn predicted(&self, material: &MaterialParams) -> PropertyVector {
        PropertyVector {
            young_modulus: Some(self.young_ratio * material.young_modulus_base),
            shear_modulus: Some(self.shear_ratio * material.young_modulus_base),
            poisson: Some(self.poisson),
            thermal_conductivity: Some(
                self.conductivity_ratio * material.thermal_conductivity_base,
            ),
            electrical_conductivity: Some(
                self.conductivity_ratio * material.electrical_conductivity_base,
            ),
            volume_fraction: Some(self.volume_fraction),
            plastic_work: None,
            feasible: self.connected,
        }
    }

    pub fn is_stale(&self) -> bool {
        self.provenance.generator_version != GENERATOR_VERSION
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SeedLibrary {
    pub entries: Vec<SeedEntry>,
}

impl SeedLibrary {
    /// The library shipped with the crate (5 x 5 x 5 lattice at n = 16).
    pub fn bundled() -> Self {
        serde_json::from_str(BUNDLED).expect("bundled seed library is valid JSON")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn stale_entries(&self) -> usize {
        self.entries.iter().filter(|e| e.is_stale()).count()
    }

    /// Simulates every point of a `per_axis`-per-dimension lattice of cell
    /// centers in the unit box against a unit-modulus reference material.
    pub fn build(per_axis: usize, resolution: usize, solver: &SolverConfig) -> Result<Self> {
        solver.validate()?;
        let reference = MaterialParams::isotropic("reference", 1.0, REFERENCE_POISSON);
        let provenance = SeedProvenance {
            generator_version: GENERATOR_VERSION,
            resolution,
            residual_tol: solver.residual_tol,
            ersatz_stiffness: solver.ersatz_stiffness,
            reference_poisson: REFERENCE_POISSON,
        };
        let entries = lattice_points(per_axis)
            .into_par_iter()
            .map(|coords| {
                let grid = generate(&coords, resolution);
                let k =
                    engineering_constants(&elastic_homogenize(&grid, &reference, solver)?.tensor)?;
                let kappa = normalized_conduction(&grid, solver)?.tensor.average();
                Ok(SeedEntry {
                    coords,
                    young_ratio: k.e_avg,
                    shear_ratio: k.g_avg,
                    poisson: k.nu_avg,
                    conductivity_ratio: kappa,
                    volume_fraction: grid.volume_fraction(),
                    connected: grid.is_connected(),
                    provenance: provenance.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { entries })
    }
}

pub const REFERENCE_POISSON: f64 = 0.3;

/// Cell centers `(i + 0.5) / per_axis` of a regular lattice, last axis fastest.
pub fn lattice_points(per_axis: usize) -> Vec<ConditioningVector> {
    let total = per_axis.pow(CONDITIONING_DIM as u32);
    (0..total)
        .map(|mut idx| {
            let mut c = vec![0.0; CONDITIONING_DIM];
            for slot in c.iter_mut().rev() {
                *slot = ((idx % per_axis) as f64 + 0.5) / per_axis as f64;
                idx /= per_axis;
            }
            ConditioningVector::new(c)
        })
        .collect()
}

/// Squared normalized deviation of a prediction from the task's match targets.
fn seed_distance(props: &PropertyVector, spec: &TaskSpec) -> f64 {
    spec.objectives
        .iter()
        .filter(|o| o.kind == ObjectiveKind::MatchTarget)
        .filter_map(|o| {
            props
                .get(o.property)
                .map(|v| ((v - o.target) / o.target).powi(2))
        })
        .sum()
}

/// The `k` library entries closest to the task's match targets, best first.
/// Ties keep library order.
pub fn retrieve_seeds(spec: &TaskSpec, library: &SeedLibrary, k: usize) -> Vec<ConditioningVector> {
    let mut scored: Vec<(f64, usize)> = library
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| (seed_distance(&e.predicted(&spec.material), spec), i))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    scored
        .into_iter()
        .take(k)
        .map(|(_, i)| library.entries[i].coords.clone())
        .collect()
}

/// Summed objective error of the entry's predicted properties, thresholds
/// included. Plastic work has no prediction and is skipped.
pub fn predicted_error(entry: &SeedEntry, spec: &TaskSpec) -> f64 {
    let props = entry.predicted(&spec.material);
    spec.objectives
        .iter()
        .filter(|o| o.property != PropertyId::PlasticWork)
        .filter_map(|o| props.get(o.property).map(|v| o.error(v)))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::ObjectiveSpec;

    fn entry(coord: f64, young_ratio: f64) -> SeedEntry {
        SeedEntry {
            coords: ConditioningVector::new(vec![coord, 0.5, 0.5]),
            young_ratio,
            shear_ratio: young_ratio / 2.6,
            poisson: 0.3,
            conductivity_ratio: young_ratio,
            volume_fraction: coord,
            connected: true,
            provenance: SeedProvenance {
                generator_version: GENERATOR_VERSION,
                resolution: 16,
                residual_tol: 1e-6,
                ersatz_stiffness: 1e-6,
                reference_poisson: 0.3,
            },
        }
    }

    fn spec_with_young(target: f64) -> TaskSpec {
        TaskSpec::new(
            "t",
            MaterialParams::isotropic("m", 1000.0, 0.3),
            vec![ObjectiveSpec::matching(PropertyId::YoungModulus, target)],
        )
    }

    #[test]
    fn trivial_cases() {
        let lib = SeedLibrary {
            entries: vec![entry(0.4, 0.2)],
        };
        let spec = spec_with_young(100.0);
        assert!(retrieve_seeds(&spec, &lib, 0).is_empty());
        assert_eq!(retrieve_seeds(&spec, &lib, 3).len(), 1);
        assert!(retrieve_seeds(&spec, &SeedLibrary::default(), 3).is_empty());
    }

    #[test]
    fn matches_brute_force_sort() {
        let ratios = [0.31, 0.05, 0.12, 0.44, 0.09, 0.27, 0.18, 0.02, 0.36, 0.15];
        let lib = SeedLibrary {
            entries: ratios
                .iter()
                .enumerate()
                .map(|(i, &r)| entry(i as f64 / 10.0, r))
                .collect(),
        };
        let target = 170.0;
        let spec = spec_with_young(target);
        // oracle: exhaustive sort by |E_i - T|
        let mut order: Vec<usize> = (0..ratios.len()).collect();
        order.sort_by(|&a, &b| {
            let da = (ratios[a] * 1000.0 - target).abs();
            let db = (ratios[b] * 1000.0 - target).abs();
            da.partial_cmp(&db).unwrap().then(a.cmp(&b))
        });
        for k in 0..=ratios.len() {
            let got = retrieve_seeds(&spec, &lib, k);
            let want: Vec<_> = order[..k]
                .iter()
                .map(|&i| lib.entries[i].coords.clone())
                .collect();
            assert_eq!(got, want, "k = {k}");
        }
    }

    #[test]
    fn lattice_covers_cell_centers() {
        let pts = lattice_points(5);
        assert_eq!(pts.len(), 125);
        assert_eq!(pts[0].coords(), &[0.1, 0.1, 0.1]);
        assert_eq!(pts[1].coords(), &[0.1, 0.1, 0.3]);
        assert!((pts[124].coords()[0] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn bundled_library_is_current() {
        let lib = SeedLibrary::bundled();
        assert_eq!(lib.len(), 125);
        assert_eq!(lib.stale_entries(), 0);
        assert!(lib.entries.iter().all(|e| e.provenance.resolution == 16));
    }
}
