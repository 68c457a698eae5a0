use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::graphs::WeightFunction;
use crate::point_process::Shape;
use crate::shot_noise::{KernelSpec, SmoothTest};

/// Campaign kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    OnngClt,
    MstClt,
    MstMultivariate,
    ComponentsClt,
    ShotnoiseClt,
    PsiDecay,
    RadiusTails,
    TwoArmFrequency,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::OnngClt => "onng_clt",
            ExperimentKind::MstClt => "mst_clt",
            ExperimentKind::MstMultivariate => "mst_multivariate",
            ExperimentKind::ComponentsClt => "components_clt",
            ExperimentKind::ShotnoiseClt => "shotnoise_clt",
            ExperimentKind::PsiDecay => "psi_decay",
            ExperimentKind::RadiusTails => "radius_tails",
            ExperimentKind::TwoArmFrequency => "two_arm_frequency",
        }
    }
}

/// Functional whose two-scale discrepancy a `psi_decay` campaign measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiTarget {
    Mst,
    Onng,
    Components,
    ShotNoise,
}

/// Radius collected by a `radius_tails` campaign at the window centre.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusKind {
    /// Cone radius of the online nearest-neighbour graph at a fixed mark.
    Onng,
    /// MST attachment radius (cube side).
    MstAttachment,
    /// Wall failure indicator at each threshold.
    WallFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// One campaign, read from a flat JSON document. Every field except
/// `experiment` has a default; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub experiment: ExperimentKind,
    #[serde(default = "d_dimension")]
    pub dimension: usize,
    /// Window scales `n`; `B_n` has half-side (or radius) `n`.
    #[serde(default = "d_scales")]
    pub scales: Vec<f64>,
    /// Inner scale exponent: `b_n = n^alpha`.
    #[serde(default = "d_alpha")]
    pub alpha: f64,
    /// Use `b_n = n`, so that every local window is the whole window.
    #[serde(default)]
    pub full_inner_window: bool,
    #[serde(default = "d_replicas")]
    pub replicas: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "d_one")]
    pub intensity: f64,
    #[serde(default = "d_shape")]
    pub shape: Shape,
    #[serde(default = "d_weight")]
    pub weight: WeightFunction,
    /// Connection radius of the component count.
    #[serde(default = "d_radius")]
    pub radius: f64,
    #[serde(default = "d_kernel")]
    pub kernel: KernelSpec,
    /// Excursion threshold `u`.
    #[serde(default = "d_level")]
    pub level: f64,
    /// Smoothed excursion volume instead of the threshold.
    #[serde(default)]
    pub smooth: Option<SmoothTest>,
    #[serde(default = "d_spacing")]
    pub spacing: f64,
    #[serde(default)]
    pub cutoff: Option<f64>,
    #[serde(default = "d_target")]
    pub target: PsiTarget,
    #[serde(default = "d_sites")]
    pub sites_per_axis: usize,
    #[serde(default = "d_theta")]
    pub theta: f64,
    /// Spread sites over the whole window instead of the shrunk one.
    #[serde(default)]
    pub full_window_sites: bool,
    /// Half-side fractions `c_i` of the nested sub-windows `c_i B_n`.
    #[serde(default = "d_sub_windows")]
    pub sub_windows: Vec<f64>,
    #[serde(default = "d_radius_kind")]
    pub radius_kind: RadiusKind,
    #[serde(default = "d_time_mark")]
    pub time_mark: f64,
    #[serde(default = "d_thresholds")]
    pub thresholds: Vec<f64>,
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub format: Option<OutputFormat>,
}

fn d_dimension() -> usize {
    2
}
fn d_scales() -> Vec<f64> {
    vec![8.0, 12.0, 16.0, 24.0, 32.0]
}
fn d_alpha() -> f64 {
    0.5
}
fn d_replicas() -> usize {
    200
}
fn d_one() -> f64 {
    1.0
}
fn d_shape() -> Shape {
    Shape::Cube
}
fn d_weight() -> WeightFunction {
    WeightFunction::Identity
}
fn d_radius() -> f64 {
    0.8
}
fn d_kernel() -> KernelSpec {
    KernelSpec::PolynomialDecay { c_g: 1.0, delta: 3.0 }
}
fn d_level() -> f64 {
    0.125
}
fn d_spacing() -> f64 {
    0.1
}
fn d_target() -> PsiTarget {
    PsiTarget::Components
}
fn d_sites() -> usize {
    3
}
fn d_theta() -> f64 {
    1.1
}
fn d_sub_windows() -> Vec<f64> {
    vec![0.5, 1.0]
}
fn d_radius_kind() -> RadiusKind {
    RadiusKind::Onng
}
fn d_time_mark() -> f64 {
    0.5
}
fn d_thresholds() -> Vec<f64> {
    vec![1.0, 2.0, 3.0, 4.0, 5.0]
}

/// Fewest replicas a campaign accepts.
pub const MIN_CAMPAIGN_REPLICAS: usize = 30;

/// Why a spec document was rejected.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpecError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("invalid field `{field}`: {reason}")]
    Domain { field: String, reason: String },
}

fn domain(field: &str, reason: impl Into<String>) -> SpecError {
    SpecError::Domain {
        field: field.into(),
        reason: reason.into(),
    }
}

impl ExperimentSpec {
    /// Spec with every default and the given kind.
    pub fn new(experiment: ExperimentKind) -> Self {
        serde_json::from_value(serde_json::json!({ "experiment": experiment })).expect("defaults are valid")
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        if !(1..=3).contains(&self.dimension) {
            return Err(domain("dimension", "must be 1, 2 or 3"));
        }
        if self.scales.is_empty() {
            return Err(domain("scales", "need at least one window scale"));
        }
        if self.scales.iter().any(|n| !(*n > 0.0) || !n.is_finite()) {
            return Err(domain("scales", "window scales must be positive and finite"));
        }
        if self.scales.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(domain("scales", "must be strictly increasing"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(domain("alpha", "inner scale exponent must lie in (0, 1)"));
        }
        if self.replicas < MIN_CAMPAIGN_REPLICAS {
            return Err(domain("replicas", format!("need at least {MIN_CAMPAIGN_REPLICAS}")));
        }
        if !(self.intensity > 0.0) || !self.intensity.is_finite() {
            return Err(domain("intensity", "must be positive and finite"));
        }
        self.weight.validate().map_err(|e| domain("weight", e.to_string()))?;
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(domain("radius", "must be positive and finite"));
        }
        self.kernel
            .validate(self.dimension)
            .map_err(|e| domain("kernel", e.to_string()))?;
        if !self.level.is_finite() {
            return Err(domain("level", "must be finite"));
        }
        if let Some(t) = &self.smooth {
            SmoothTest::new(t.a, t.b, t.scale).map_err(|e| domain("smooth", e.to_string()))?;
        }
        if !(self.spacing > 0.0) || !self.spacing.is_finite() {
            return Err(domain("spacing", "must be positive and finite"));
        }
        if let Some(c) = self.cutoff {
            if !(c > 0.0) {
                return Err(domain("cutoff", "must be positive"));
            }
        }
        if self.sites_per_axis == 0 {
            return Err(domain("sites_per_axis", "must be at least 1"));
        }
        if !(self.theta >= 1.0) || !self.theta.is_finite() {
            return Err(domain("theta", "must be at least 1"));
        }
        if self.sub_windows.is_empty() || self.sub_windows.iter().any(|c| !(*c > 0.0 && *c <= 1.0)) {
            return Err(domain("sub_windows", "fractions must lie in (0, 1]"));
        }
        if !(self.time_mark > 0.0 && self.time_mark < 1.0) {
            return Err(domain("time_mark", "must lie in (0, 1)"));
        }
        if self.thresholds.is_empty() || self.thresholds.iter().any(|u| !u.is_finite()) {
            return Err(domain("thresholds", "need finite thresholds"));
        }
        if self.experiment == ExperimentKind::RadiusTails && self.radius_kind == RadiusKind::WallFailure {
            let n0 = self.scales[0];
            if self.thresholds.iter().any(|u| !(*u > 0.0 && *u < 2.0 * n0)) {
                return Err(domain("thresholds", "wall scales must lie in (0, 2 n)"));
            }
        }
        if matches!(self.experiment, ExperimentKind::TwoArmFrequency) && self.shape != Shape::Cube {
            return Err(domain("shape", "two-arm campaigns need cube windows"));
        }
        Ok(())
    }

    /// `b_n` for window scale `n`.
    pub fn inner_scale(&self, n: f64) -> f64 {
        if self.full_inner_window {
            n
        } else {
            n.powf(self.alpha)
        }
    }

    /// Canonical JSON (sorted keys, no whitespace).
    pub fn canonical_json(&self) -> String {
        let v = serde_json::to_value(self).expect("spec serialises");
        serde_json::to_string(&v).expect("value serialises")
    }

    /// SHA-256 of the canonical JSON, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

/// Parses and validates a spec document.
pub fn parse_spec(text: &str) -> Result<ExperimentSpec, SpecError> {
    let spec: ExperimentSpec = serde_json::from_str(text).map_err(|e| SpecError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    spec.validate()?;
    Ok(spec)
}

/// Pretty JSON document that [`parse_spec`] reads back to an equal spec.
pub fn emit_spec(spec: &ExperimentSpec) -> String {
    serde_json::to_string_pretty(spec).expect("spec serialises")
}
