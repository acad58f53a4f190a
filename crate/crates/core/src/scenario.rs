//! Detector placement, switching and validation for a three-detector run.
//!
//! All lengths and times are in units of the switching strength η, which is
//! fixed to one. Gaps carry units of 1/η.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Switching strength of every detector; it is the unit of time and length.
pub const SWITCHING_STRENGTH: f64 = 1.0;

pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-10;
pub const DEFAULT_EIGEN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    A,
    B,
    C,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::A, Label::B, Label::C];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Label> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::A => "A",
            Label::B => "B",
            Label::C => "C",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Label {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" | "a" => Ok(Label::A),
            "B" | "b" => Ok(Label::B),
            "C" | "c" => Ok(Label::C),
            other => Err(ScenarioError::UnknownLabel(other.to_string())),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("detector {label}: {field} must be finite")]
    NonFinite { label: Label, field: &'static str },
    #[error("detector {label}: smearing_width must be positive")]
    NonPositiveWidth { label: Label },
    #[error("detector {label}: coupling must be non-negative")]
    NegativeCoupling { label: Label },
    #[error("detector label {0} appears more than once")]
    DuplicateLabel(Label),
    #[error("unknown detector label {0:?}")]
    UnknownLabel(String),
    #[error("tolerance {field} must be positive and finite")]
    BadTolerance { field: &'static str },
}

/// Overall scale of the Gaussian smearing profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmearingNorm {
    /// `F(x) = exp(-x²/(2σ²))`, unit height.
    #[default]
    Peak,
    /// `F(x) = exp(-x²/(2σ²)) / (2πσ²)^{3/2}`, unit integral.
    Unit,
}

impl SmearingNorm {
    /// Factor multiplying the peak-normalized profile.
    pub fn scale(self, sigma: f64) -> f64 {
        match self {
            SmearingNorm::Peak => 1.0,
            SmearingNorm::Unit => (2.0 * std::f64::consts::PI * sigma * sigma).powf(-1.5),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SmearingNorm::Peak => "peak",
            SmearingNorm::Unit => "unit",
        }
    }
}

impl std::str::FromStr for SmearingNorm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "peak" => Ok(SmearingNorm::Peak),
            "unit" => Ok(SmearingNorm::Unit),
            other => Err(format!(
                "unknown smearing normalization {other:?} (expected peak or unit)"
            )),
        }
    }
}

/// One static detector coupled once through a delta switch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorSpec {
    pub label: Label,
    pub position: [f64; 3],
    pub switch_time: f64,
    pub gap: f64,
    pub coupling: f64,
    pub smearing_width: f64,
    #[serde(default)]
    pub normalization: SmearingNorm,
}

impl DetectorSpec {
    /// Detector with the default width σ = 1 and gap Ω = 1.
    pub fn new(label: Label, position: [f64; 3], switch_time: f64, coupling: f64) -> Self {
        DetectorSpec {
            label,
            position,
            switch_time,
            gap: 1.0,
            coupling,
            smearing_width: 1.0,
            normalization: SmearingNorm::Peak,
        }
    }

    pub fn switching_strength(&self) -> f64 {
        SWITCHING_STRENGTH
    }

    /// `λ η` times the smearing scale: the factor multiplying the
    /// peak-normalized `F̃` everywhere it appears.
    pub fn effective_coupling(&self) -> f64 {
        self.coupling * self.switching_strength() * self.normalization.scale(self.smearing_width)
    }

    pub fn distance_to(&self, other: &DetectorSpec) -> f64 {
        let [dx, dy, dz] = [
            other.position[0] - self.position[0],
            other.position[1] - self.position[1],
            other.position[2] - self.position[2],
        ];
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        let label = self.label;
        let finite = |field, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(ScenarioError::NonFinite { label, field })
            }
        };
        for (field, v) in ["position.x", "position.y", "position.z"]
            .into_iter()
            .zip(self.position)
        {
            finite(field, v)?;
        }
        finite("switch_time", self.switch_time)?;
        finite("gap", self.gap)?;
        finite("coupling", self.coupling)?;
        finite("smearing_width", self.smearing_width)?;
        if self.smearing_width <= 0.0 {
            return Err(ScenarioError::NonPositiveWidth { label });
        }
        if self.coupling < 0.0 {
            return Err(ScenarioError::NegativeCoupling { label });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative error target for every radial quadrature.
    pub quadrature: f64,
    pub eigen: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            quadrature: DEFAULT_QUADRATURE_TOL,
            eigen: DEFAULT_EIGEN_TOL,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.quadrature.is_finite() && self.quadrature > 0.0) {
            return Err(ScenarioError::BadTolerance {
                field: "quadrature",
            });
        }
        if !(self.eigen.is_finite() && self.eigen > 0.0) {
            return Err(ScenarioError::BadTolerance { field: "eigen" });
        }
        Ok(())
    }
}

/// Three validated detectors sorted by switch time.
///
/// Slot `i` plays the role of canonical detector `Label::from_index(i)` in
/// the evolution operator; `detectors[i].label` keeps the label the caller
/// used, so results can be mapped back with [`ScenarioConfig::user_label`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub detectors: [DetectorSpec; 3],
    pub tolerances: Tolerances,
}

impl ScenarioConfig {
    pub fn new(raw: [DetectorSpec; 3], tolerances: Tolerances) -> Result<Self, ScenarioError> {
        tolerances.validate()?;
        let mut seen = [false; 3];
        for d in &raw {
            d.validate()?;
            if std::mem::replace(&mut seen[d.label.index()], true) {
                return Err(ScenarioError::DuplicateLabel(d.label));
            }
        }
        let mut detectors = raw;
        // Stable on ties; ties are broken alphabetically by label.
        detectors.sort_by(|a, b| {
            a.switch_time
                .total_cmp(&b.switch_time)
                .then(a.label.cmp(&b.label))
        });
        Ok(ScenarioConfig {
            detectors,
            tolerances,
        })
    }

    /// The canonical detector in slot `canonical`.
    pub fn detector(&self, canonical: Label) -> &DetectorSpec {
        &self.detectors[canonical.index()]
    }

    /// Caller's label of the detector that plays canonical role `canonical`.
    pub fn user_label(&self, canonical: Label) -> Label {
        self.detectors[canonical.index()].label
    }

    /// Canonical role of the detector the caller called `user`.
    pub fn canonical_label(&self, user: Label) -> Label {
        let slot = self
            .detectors
            .iter()
            .position(|d| d.label == user)
            .expect("labels are a permutation of A, B, C");
        Label::ALL[slot]
    }

    /// Slot → caller label.
    pub fn permutation(&self) -> [Label; 3] {
        [
            self.detectors[0].label,
            self.detectors[1].label,
            self.detectors[2].label,
        ]
    }

    pub fn is_identity_order(&self) -> bool {
        self.permutation() == Label::ALL
    }

    pub fn map_detectors(
        &self,
        f: impl Fn(DetectorSpec) -> DetectorSpec,
    ) -> Result<Self, ScenarioError> {
        ScenarioConfig::new(self.detectors.map(f), self.tolerances)
    }
}

/// Validate three detector specs and sort them into switching order.
pub fn validate_and_order(raw: [DetectorSpec; 3]) -> Result<ScenarioConfig, ScenarioError> {
    ScenarioConfig::new(raw, Tolerances::default())
}
