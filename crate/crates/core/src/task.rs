//! Task specifications: targets, tolerances, base material and budget.
//!
//! Tasks are read from TOML files. Every objective carries a target `T`; for
//! `maximize`/`minimize` objectives that target is the threshold the property
//! has to clear. Relative errors are measured against `|T|`, so zero targets
//! are rejected when a task is loaded.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::properties::{PropertyId, PropertyVector};

pub const DEFAULT_TOLERANCE: f64 = 0.10;
pub const DEFAULT_MAX_GENERATIONS: usize = 10;
pub const DEFAULT_POPULATION: usize = 20;

/// Allowed band for a stiffness target, as a fraction of the base modulus.
pub const STIFFNESS_BAND: (f64, f64) = (0.05, 0.40);
/// Relative tolerance of the `E = 2G(1 + nu)` consistency check.
pub const CONSISTENCY_TOLERANCE: f64 = 0.10;
/// Poisson targets at or above this value are rejected.
pub const MAX_POISSON_TARGET: f64 = 0.45;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialParams {
    pub name: String,
    /// MPa
    pub young_modulus_base: f64,
    /// MPa
    pub shear_modulus_base: f64,
    pub poisson_base: f64,
    /// W/(m K)
    pub thermal_conductivity_base: f64,
    /// S/m
    pub electrical_conductivity_base: f64,
    /// MPa
    pub yield_stress_0: f64,
    pub reference_strain_eps0: f64,
    pub hardening_exponent_n: f64,
}

impl MaterialParams {
    /// Isotropic material with the shear modulus derived from `E` and `nu`.
    pub fn isotropic(name: &str, young: f64, poisson: f64) -> Self {
        Self {
            name: name.to_string(),
            young_modulus_base: young,
            shear_modulus_base: young / (2.0 * (1.0 + poisson)),
            poisson_base: poisson,
            thermal_conductivity_base: 1.0,
            electrical_conductivity_base: 1.0,
            yield_stress_0: 0.0,
            reference_strain_eps0: 1.0,
            hardening_exponent_n: 0.0,
        }
    }

    pub fn copper() -> Self {
        Self {
            name: "copper".into(),
            young_modulus_base: 110_000.0,
            shear_modulus_base: 110_000.0 / (2.0 * 1.34),
            poisson_base: 0.34,
            thermal_conductivity_base: 400.0,
            electrical_conductivity_base: 5.96e7,
            yield_stress_0: 70.0,
            reference_strain_eps0: 0.002,
            hardening_exponent_n: 0.3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, field: &str, reason: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Schema {
                    field: format!("material.{field}"),
                    reason: reason.to_string(),
                })
            }
        };
        check(
            self.young_modulus_base > 0.0,
            "young_modulus_base",
            "must be > 0",
        )?;
        check(
            self.shear_modulus_base > 0.0,
            "shear_modulus_base",
            "must be > 0",
        )?;
        check(
            (0.0..0.5).contains(&self.poisson_base),
            "poisson_base",
            "must lie in [0, 0.5)",
        )?;
        check(
            self.thermal_conductivity_base >= 0.0,
            "thermal_conductivity_base",
            "must be >= 0",
        )?;
        check(
            self.electrical_conductivity_base >= 0.0,
            "electrical_conductivity_base",
            "must be >= 0",
        )?;
        check(self.yield_stress_0 >= 0.0, "yield_stress_0", "must be >= 0")?;
        check(
            self.reference_strain_eps0 > 0.0,
            "reference_strain_eps0",
            "must be > 0",
        )?;
        check(
            self.hardening_exponent_n >= 0.0,
            "hardening_exponent_n",
            "must be >= 0",
        )
    }

    /// Same material with every modulus multiplied by `s`.
    pub fn scaled_stiffness(&self, s: f64) -> Self {
        Self {
            young_modulus_base: self.young_modulus_base * s,
            shear_modulus_base: self.shear_modulus_base * s,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    MatchTarget,
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    pub property: PropertyId,
    pub kind: ObjectiveKind,
    pub target: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

impl ObjectiveSpec {
    pub fn matching(property: PropertyId, target: f64) -> Self {
        Self {
            property,
            kind: ObjectiveKind::MatchTarget,
            target,
            tolerance: DEFAULT_TOLERANCE,
        }
    }

    pub fn at_least(property: PropertyId, threshold: f64) -> Self {
        Self {
            kind: ObjectiveKind::Maximize,
            ..Self::matching(property, threshold)
        }
    }

    pub fn at_most(property: PropertyId, threshold: f64) -> Self {
        Self {
            kind: ObjectiveKind::Minimize,
            ..Self::matching(property, threshold)
        }
    }

    /// Normalized absolute error used by MRE and the search utility. For
    /// threshold objectives this is the relative shortfall, zero once met.
    pub fn error(&self, value: f64) -> f64 {
        let scale = self.target.abs();
        match self.kind {
            ObjectiveKind::MatchTarget => (value - self.target).abs() / scale,
            ObjectiveKind::Maximize => ((self.target - value) / scale).max(0.0),
            ObjectiveKind::Minimize => ((value - self.target) / scale).max(0.0),
        }
    }

    pub fn is_satisfied(&self, value: f64) -> bool {
        match self.kind {
            ObjectiveKind::MatchTarget => {
                (value - self.target).abs() <= self.tolerance * self.target.abs()
            }
            ObjectiveKind::Maximize => value >= self.target,
            ObjectiveKind::Minimize => value <= self.target,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budget {
    #[serde(default = "default_max_generations")]
    pub max_generations: usize,
    /// Simulator calls. Defaults to `population * (max_generations + 1)`.
    #[serde(default)]
    pub max_evaluations: Option<usize>,
    #[serde(default = "default_population")]
    pub population: usize,
}

fn default_max_generations() -> usize {
    DEFAULT_MAX_GENERATIONS
}

fn default_population() -> usize {
    DEFAULT_POPULATION
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_generations: DEFAULT_MAX_GENERATIONS,
            max_evaluations: None,
            population: DEFAULT_POPULATION,
        }
    }
}

impl Budget {
    pub fn evaluations(&self) -> usize {
        self.max_evaluations
            .unwrap_or(self.population * (self.max_generations + 1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub task_id: String,
    pub difficulty: Difficulty,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub budget: Budget,
    pub material: MaterialParams,
    pub objectives: Vec<ObjectiveSpec>,
}

impl TaskSpec {
    pub fn new(task_id: &str, material: MaterialParams, objectives: Vec<ObjectiveSpec>) -> Self {
        Self {
            task_id: task_id.to_string(),
            difficulty: Difficulty::Medium,
            seed: 0,
            budget: Budget::default(),
            material,
            objectives,
        }
    }

    pub fn num_objectives(&self) -> usize {
        self.objectives.len()
    }

    pub fn objective(&self, property: PropertyId) -> Option<&ObjectiveSpec> {
        self.objectives.iter().find(|o| o.property == property)
    }

    pub fn needs(&self, property: PropertyId) -> bool {
        self.objective(property).is_some()
    }

    pub fn validate(&self) -> Result<()> {
        if self.task_id.trim().is_empty() {
            return Err(schema("task_id", "must not be empty"));
        }
        self.material.validate()?;
        if self.objectives.is_empty() {
            return Err(schema("objectives", "at least one objective is required"));
        }
        if self.budget.population < 2 {
            return Err(schema("budget.population", "must be at least 2"));
        }
        for (i, obj) in self.objectives.iter().enumerate() {
            let field = |name: &str| format!("objectives[{i}].{name}");
            if self.objectives[..i]
                .iter()
                .any(|o| o.property == obj.property)
            {
                return Err(schema(
                    &field("property"),
                    &format!("duplicate objective for `{}`", obj.property),
                ));
            }
            if !obj.target.is_finite() {
                return Err(schema(&field("target"), "must be finite"));
            }
            if obj.target == 0.0 {
                return Err(schema(
                    &field("target"),
                    "zero targets have no relative error",
                ));
            }
            if obj.property != PropertyId::Poisson && obj.target < 0.0 {
                return Err(schema(&field("target"), "must be positive"));
            }
            if obj.property == PropertyId::VolumeFraction && obj.target > 1.0 {
                return Err(schema(&field("target"), "volume fraction above 1"));
            }
            if !(obj.tolerance > 0.0 && obj.tolerance < 1.0) {
                return Err(schema(&field("tolerance"), "must lie in (0, 1)"));
            }
            if obj.property == PropertyId::Poisson && obj.target >= MAX_POISSON_TARGET {
                return Err(schema(
                    &field("target"),
                    "Poisson targets >= 0.45 are outside the supported stiffness band",
                ));
            }
        }
        Ok(())
    }
}

fn schema(field: &str, reason: &str) -> Error {
    Error::Schema {
        field: field.to_string(),
        reason: reason.to_string(),
    }
}

/// Parses and validates a task from TOML text. `origin` only labels errors.
pub fn parse_task(text: &str, origin: &Path) -> Result<TaskSpec> {
    let spec: TaskSpec = toml::from_str(text).map_err(|e| {
        let (line, column) = e
            .span()
            .map(|span| line_column(text, span.start))
            .unwrap_or((0, 0));
        Error::Parse {
            path: origin.to_path_buf(),
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    spec.validate()?;
    Ok(spec)
}

pub fn load_task(path: &Path) -> Result<TaskSpec> {
    let text = std::fs::read_to_string(path)?;
    parse_task(&text, path)
}

/// Loads one task file, or every `*.toml` in a directory in file-name order.
/// The first failure aborts the whole load.
pub fn load_tasks(path: &Path) -> Result<Vec<TaskSpec>> {
    if !path.is_dir() {
        return Ok(vec![load_task(path)?]);
    }
    let mut files: Vec<_> = std::fs::read_dir(path)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| p.extension().is_some_and(|e| e == "toml"));
    files.sort();
    files.iter().map(|f| load_task(f)).collect()
}

pub fn to_toml(spec: &TaskSpec) -> String {
    toml::to_string_pretty(spec).expect("task specs always serialize")
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum FeasibilityNote {
    /// Stiffness target moved into the admissible band.
    Clamped { from: f64, to: f64 },
    /// `E`, `G` and `nu` targets disagree with isotropic elasticity.
    Inconsistent {
        implied_young: f64,
        target_young: f64,
        relative_gap: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub spec: TaskSpec,
    pub notes: Vec<FeasibilityNote>,
}

impl FeasibilityReport {
    pub fn is_consistent(&self) -> bool {
        !self
            .notes
            .iter()
            .any(|n| matches!(n, FeasibilityNote::Inconsistent { .. }))
    }
}

/// Clamps an out-of-band stiffness target and checks `E = 2G(1 + nu)` when
/// all three targets are present. Inconsistencies are reported, never fixed.
pub fn check_stiffness_feasibility(spec: &TaskSpec) -> FeasibilityReport {
    let mut adjusted = spec.clone();
    let mut notes = Vec::new();
    let base = spec.material.young_modulus_base;
    let (lo, hi) = (STIFFNESS_BAND.0 * base, STIFFNESS_BAND.1 * base);

    for obj in adjusted.objectives.iter_mut() {
        if obj.property == PropertyId::YoungModulus && obj.kind == ObjectiveKind::MatchTarget {
            let clamped = obj.target.clamp(lo, hi);
            if clamped != obj.target {
                notes.push(FeasibilityNote::Clamped {
                    from: obj.target,
                    to: clamped,
                });
                obj.target = clamped;
            }
        }
    }

    let target = |p: PropertyId| {
        adjusted
            .objective(p)
            .filter(|o| o.kind == ObjectiveKind::MatchTarget)
            .map(|o| o.target)
    };
    if let (Some(e), Some(g), Some(nu)) = (
        target(PropertyId::YoungModulus),
        target(PropertyId::ShearModulus),
        target(PropertyId::Poisson),
    ) {
        let implied = 2.0 * g * (1.0 + nu);
        let gap = (implied - e).abs() / e.abs();
        if gap > CONSISTENCY_TOLERANCE {
            notes.push(FeasibilityNote::Inconsistent {
                implied_young: implied,
                target_young: e,
                relative_gap: gap,
            });
        }
    }

    FeasibilityReport {
        spec: adjusted,
        notes,
    }
}

/// Signed deviation `(P - T) / T` in percent.
pub fn signed_error(value: f64, target: f64) -> Result<f64> {
    if target == 0.0 {
        return Err(Error::ZeroTarget);
    }
    Ok((value - target) / target * 100.0)
}

/// True iff every objective of `spec` is met by `props`.
pub fn is_fully_valid(props: &PropertyVector, spec: &TaskSpec) -> Result<bool> {
    let mut valid = true;
    for obj in &spec.objectives {
        let value = props.require(obj.property)?;
        valid &= obj.is_satisfied(value);
    }
    Ok(valid)
}

/// Per-objective satisfied flags and normalized errors, in objective order.
pub fn assess(props: &PropertyVector, spec: &TaskSpec) -> Result<(Vec<bool>, Vec<f64>)> {
    let mut flags = Vec::with_capacity(spec.objectives.len());
    let mut errors = Vec::with_capacity(spec.objectives.len());
    for obj in &spec.objectives {
        let value = props.require(obj.property)?;
        flags.push(obj.is_satisfied(value));
        errors.push(obj.error(value));
    }
    Ok((flags, errors))
}
