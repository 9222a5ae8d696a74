use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Effective properties an objective can refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PropertyId {
    #[serde(rename = "E")]
    YoungModulus,
    #[serde(rename = "G")]
    ShearModulus,
    #[serde(rename = "nu")]
    Poisson,
    #[serde(rename = "kappa")]
    ThermalConductivity,
    #[serde(rename = "sigma")]
    ElectricalConductivity,
    #[serde(rename = "vf")]
    VolumeFraction,
    #[serde(rename = "Wp")]
    PlasticWork,
}

impl PropertyId {
    pub const ALL: [PropertyId; 7] = [
        PropertyId::YoungModulus,
        PropertyId::ShearModulus,
        PropertyId::Poisson,
        PropertyId::ThermalConductivity,
        PropertyId::ElectricalConductivity,
        PropertyId::VolumeFraction,
        PropertyId::PlasticWork,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PropertyId::YoungModulus => "E",
            PropertyId::ShearModulus => "G",
            PropertyId::Poisson => "nu",
            PropertyId::ThermalConductivity => "kappa",
            PropertyId::ElectricalConductivity => "sigma",
            PropertyId::VolumeFraction => "vf",
            PropertyId::PlasticWork => "Wp",
        }
    }

    /// Whether evaluating this property needs the elastic cell problems.
    pub fn needs_elasticity(self) -> bool {
        matches!(
            self,
            PropertyId::YoungModulus
                | PropertyId::ShearModulus
                | PropertyId::Poisson
                | PropertyId::PlasticWork
        )
    }
}

impl fmt::Display for PropertyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PropertyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PropertyId::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::Schema {
                field: "property".into(),
                reason: format!("unknown property `{s}`"),
            })
    }
}

/// Simulated effective properties of one candidate. Only the properties an
/// objective asked for are populated.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PropertyVector {
    #[serde(rename = "E", skip_serializing_if = "Option::is_none", default)]
    pub young_modulus: Option<f64>,
    #[serde(rename = "G", skip_serializing_if = "Option::is_none", default)]
    pub shear_modulus: Option<f64>,
    #[serde(rename = "nu", skip_serializing_if = "Option::is_none", default)]
    pub poisson: Option<f64>,
    #[serde(rename = "kappa", skip_serializing_if = "Option::is_none", default)]
    pub thermal_conductivity: Option<f64>,
    #[serde(rename = "sigma", skip_serializing_if = "Option::is_none", default)]
    pub electrical_conductivity: Option<f64>,
    #[serde(rename = "vf", skip_serializing_if = "Option::is_none", default)]
    pub volume_fraction: Option<f64>,
    #[serde(rename = "Wp", skip_serializing_if = "Option::is_none", default)]
    pub plastic_work: Option<f64>,
    /// False when the solid phase is not a single periodic component.
    pub feasible: bool,
}

impl PropertyVector {
    pub fn feasible() -> Self {
        Self {
            feasible: true,
            ..Self::default()
        }
    }

    pub fn get(&self, id: PropertyId) -> Option<f64> {
        match id {
            PropertyId::YoungModulus => self.young_modulus,
            PropertyId::ShearModulus => self.shear_modulus,
            PropertyId::Poisson => self.poisson,
            PropertyId::ThermalConductivity => self.thermal_conductivity,
            PropertyId::ElectricalConductivity => self.electrical_conductivity,
            PropertyId::VolumeFraction => self.volume_fraction,
            PropertyId::PlasticWork => self.plastic_work,
        }
    }

    pub fn set(&mut self, id: PropertyId, value: f64) {
        let slot = match id {
            PropertyId::YoungModulus => &mut self.young_modulus,
            PropertyId::ShearModulus => &mut self.shear_modulus,
            PropertyId::Poisson => &mut self.poisson,
            PropertyId::ThermalConductivity => &mut self.thermal_conductivity,
            PropertyId::ElectricalConductivity => &mut self.electrical_conductivity,
            PropertyId::VolumeFraction => &mut self.volume_fraction,
            PropertyId::PlasticWork => &mut self.plastic_work,
        };
        *slot = Some(value);
    }

    pub fn with(mut self, id: PropertyId, value: f64) -> Self {
        self.set(id, value);
        self
    }

    pub fn require(&self, id: PropertyId) -> Result<f64, Error> {
        self.get(id)
            .ok_or_else(|| Error::MissingProperty(id.as_str().to_string()))
    }
}
