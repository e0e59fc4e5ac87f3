use std::path::PathBuf;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::spacetime::Chart;
use crate::transport::Integrator;

fn one() -> f64 {
    1.0
}

fn is_one(v: &f64) -> bool {
    *v == 1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    /// `minkowski`, `schwarzschild`, `weak-field` or `grid`.
    pub name: String,
    /// Mandatory: media and ray initial data are chart dependent.
    pub chart: Chart,
    #[serde(default = "one")]
    pub rs: f64,
    /// Conformal scale already applied to this background.
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSpec {
    #[serde(default = "default_integrator")]
    pub integrator: Integrator,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub project_every: Option<usize>,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_integrator() -> Integrator {
    Integrator::Rk4
}
fn default_step() -> f64 {
    1e-3
}
fn default_rtol() -> f64 {
    1e-10
}
fn default_atol() -> f64 {
    1e-12
}
fn default_sample_every() -> usize {
    100
}
fn default_max_steps() -> usize {
    50_000_000
}

impl Default for ControlSpec {
    fn default() -> Self {
        Self {
            integrator: default_integrator(),
            step: default_step(),
            rtol: default_rtol(),
            atol: default_atol(),
            sample_every: default_sample_every(),
            project_every: None,
            max_steps: default_max_steps(),
        }
    }
}

/// Tolerances of the pass/fail checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSpec {
    #[serde(default = "default_null")]
    pub null_residual: f64,
    #[serde(default = "default_transport")]
    pub transport: f64,
    #[serde(default = "default_deviation")]
    pub deviation: f64,
    #[serde(default = "default_gauge")]
    pub gauge: f64,
    #[serde(default = "default_phase")]
    pub phase: f64,
    #[serde(default = "default_identity")]
    pub identity: f64,
    #[serde(default = "default_invariance")]
    pub invariance: f64,
    #[serde(default = "default_medium")]
    pub medium: f64,
    #[serde(default = "default_validity")]
    pub validity_threshold: f64,
}

fn default_null() -> f64 {
    1e-9
}
fn default_transport() -> f64 {
    1e-9
}
fn default_deviation() -> f64 {
    1e-7
}
fn default_gauge() -> f64 {
    1e-8
}
fn default_phase() -> f64 {
    1e-9
}
fn default_identity() -> f64 {
    1e-12
}
fn default_invariance() -> f64 {
    1e-9
}
fn default_medium() -> f64 {
    0.01
}
fn default_validity() -> f64 {
    crate::spacetime::DEFAULT_VALIDITY_THRESHOLD
}

impl Default for CheckSpec {
    fn default() -> Self {
        Self {
            null_residual: default_null(),
            transport: default_transport(),
            deviation: default_deviation(),
            gauge: default_gauge(),
            phase: default_phase(),
            identity: default_identity(),
            invariance: default_invariance(),
            medium: default_medium(),
            validity_threshold: default_validity(),
        }
    }
}

/// Initial data of one ray: either a lensing setup (impact parameter and
/// start distance) or an explicit event and direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub impact_parameter: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<f64>,
    /// Chart coordinates (t, x¹, x², x³).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<[f64; 4]>,
    /// Spatial direction on the static observer's Cartesian-oriented axes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<[f64; 3]>,
    #[serde(default = "one")]
    pub frequency: f64,
    /// Affine length; defaults to twice the lensing distance over the
    /// frequency.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_end: Option<f64>,
}

impl RaySpec {
    pub fn end(&self) -> f64 {
        self.l_end
            .or(self.distance.map(|d| 2.0 * d / self.frequency))
            .unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveSpec {
    #[serde(with = "complex_pair")]
    pub c_plus: Complex64,
    #[serde(with = "complex_pair", default = "zero")]
    pub c_minus: Complex64,
    #[serde(default = "half")]
    pub kappa: f64,
    #[serde(default)]
    pub phi0: f64,
    /// Extra randomized lensing rays for the equivalence check.
    #[serde(default)]
    pub random_rays: usize,
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}
fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraSpec {
    /// Photon frequency of the sector table states.
    #[serde(default = "one")]
    pub frequency: f64,
    #[serde(default = "default_random_pairs")]
    pub random_pairs: usize,
    #[serde(default = "default_kappas")]
    pub kappas: Vec<f64>,
}

fn default_random_pairs() -> usize {
    1000
}
fn default_kappas() -> Vec<f64> {
    (1..10).map(|i| i as f64 / 10.0).collect()
}

impl Default for AlgebraSpec {
    fn default() -> Self {
        Self {
            frequency: 1.0,
            random_pairs: default_random_pairs(),
            kappas: default_kappas(),
        }
    }
}

/// Voxel grid of a medium export on flat Cartesian positions, plus the step
/// of the medium ray check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediumSpec {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub z: [f64; 2],
    pub n: [usize; 3],
    #[serde(default = "default_ray_step")]
    pub ray_step: f64,
}

fn default_ray_step() -> f64 {
    10.0
}

/// Down-conversion source. Lengths are in units of `length_unit_m` metres;
/// only the dimensionless quality ratio depends on them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub pump_frequency: f64,
    #[serde(default = "half")]
    pub kappa: f64,
    pub crystal_length: f64,
    pub pump_wavenumber: f64,
    pub pump_waist: f64,
    #[serde(with = "complex_pair", default = "unit")]
    pub amplitude_plus: Complex64,
    #[serde(with = "complex_pair", default = "zero")]
    pub amplitude_minus: Complex64,
    #[serde(default)]
    pub degenerate_filter: bool,
    #[serde(default = "default_quality")]
    pub quality_threshold: f64,
    #[serde(default = "z_axis")]
    pub direction: [f64; 3],
    #[serde(default = "one")]
    pub length_unit_m: f64,
}

fn unit() -> Complex64 {
    Complex64::new(1.0, 0.0)
}
fn default_quality() -> f64 {
    crate::emulation::DEFAULT_QUALITY_THRESHOLD
}
fn z_axis() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

/// A complete, validated scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    /// Conformal scale applied by the `scale` subcommand.
    #[serde(default = "one")]
    pub scale: f64,
    pub metric: MetricSpec,
    #[serde(default)]
    pub controls: ControlSpec,
    #[serde(default)]
    pub checks: CheckSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rays: Vec<RaySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wave: Option<WaveSpec>,
    #[serde(default)]
    pub algebra: AlgebraSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub medium: Option<MediumSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceSpec>,
}

/// Accepted keys per table, used for unknown-key diagnostics.
pub(crate) const SCHEMA: &[(&str, &[&str])] = &[
    ("", &["title", "scale", "metric", "controls", "checks", "rays", "wave", "algebra", "medium", "source"]),
    ("metric", &["name", "chart", "rs", "scale", "grid_file"]),
    (
        "controls",
        &["integrator", "step", "rtol", "atol", "sample_every", "project_every", "max_steps"],
    ),
    (
        "checks",
        &[
            "null_residual",
            "transport",
            "deviation",
            "gauge",
            "phase",
            "identity",
            "invariance",
            "medium",
            "validity_threshold",
        ],
    ),
    (
        "rays",
        &["label", "impact_parameter", "distance", "position", "direction", "frequency", "l_end"],
    ),
    ("wave", &["c_plus", "c_minus", "kappa", "phi0", "random_rays"]),
    ("algebra", &["frequency", "random_pairs", "kappas"]),
    ("medium", &["x", "y", "z", "n", "ray_step"]),
    (
        "source",
        &[
            "pump_frequency",
            "kappa",
            "crystal_length",
            "pump_wavenumber",
            "pump_waist",
            "amplitude_plus",
            "amplitude_minus",
            "degenerate_filter",
            "quality_threshold",
            "direction",
            "length_unit_m",
        ],
    ),
];

/// Complex numbers as `[re, im]`.
mod complex_pair {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(c: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [c.re, c.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}
