//! Background geometry: metric evaluation, Christoffel symbols, index
//! operations and the geometric-optics validity estimate.
//!
//! Conventions: signature (+,−,−,−), c = 1, coordinates ordered `(t, x¹, x², x³)`.

mod builtin;
mod chart;
mod christoffel;
mod curvature;
mod frame;
mod grid;

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use builtin::{IsotropicSchwarzschild, Minkowski, Schwarzschild, WeakField};
pub use chart::Chart;
pub use christoffel::{finite_difference_christoffel, Christoffel};
pub use curvature::numeric_kretschmann;
pub use frame::LocalFrame;
pub use grid::{write_grid_file, GridMetric};

/// Raw chart coordinates `(t, x¹, x², x³)`.
pub type Coords = Vector4<f64>;

/// Default threshold on λ_h / L_γ below which geometric optics is trusted.
pub const DEFAULT_VALIDITY_THRESHOLD: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("event outside the domain of the {metric} chart: {reason}")]
    OutsideChartDomain { metric: String, reason: String },
    #[error("numerical derivative failed: {0}")]
    NumericalDerivativeFailure(String),
    #[error("event is expressed in the {found} chart but the metric uses the {expected} chart")]
    ChartMismatch { expected: Chart, found: Chart },
    #[error("non-finite coordinate in event {0:?}")]
    NonFiniteCoordinates([f64; 4]),
    #[error("wavelength must be positive, got {0}")]
    NonPositiveWavelength(f64),
    #[error("metric is singular at {0:?}")]
    SingularMetric([f64; 4]),
    #[error("no static observer at this event (g_00 = {g00} must be positive)")]
    NoStaticObserver { g00: f64 },
    #[error("invalid metric parameter {name} = {value}: {rule}")]
    InvalidParameter {
        name: String,
        value: f64,
        rule: String,
    },
    #[error("unknown metric `{name}` in chart `{chart}`")]
    UnknownMetric { name: String, chart: String },
    #[error("grid file line {line}: {message}")]
    GridFile { line: usize, message: String },
}

/// A point of spacetime tagged with the chart its coordinates belong to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeEvent {
    pub chart: Chart,
    pub coords: [f64; 4],
}

impl SpacetimeEvent {
    pub fn new(chart: Chart, coords: [f64; 4]) -> Result<Self, GeometryError> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GeometryError::NonFiniteCoordinates(coords));
        }
        Ok(Self { chart, coords })
    }

    pub fn from_vector(chart: Chart, x: &Coords) -> Result<Self, GeometryError> {
        Self::new(chart, [x[0], x[1], x[2], x[3]])
    }

    pub fn vector(&self) -> Coords {
        Vector4::from(self.coords)
    }
}

/// A prescribed background γ_μν.
///
/// Implementors supply the components; Christoffel symbols and the Kretschmann
/// scalar fall back to finite differences when no closed form is given.
pub trait Metric: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn chart(&self) -> Chart;

    /// Named parameters, in a stable order (used for report headers).
    fn parameters(&self) -> Vec<(String, f64)>;

    /// γ_μν at raw chart coordinates.
    fn components(&self, x: &Coords) -> Result<Matrix4<f64>, GeometryError>;

    fn christoffel_at(&self, x: &Coords) -> Result<Christoffel, GeometryError> {
        finite_difference_christoffel(self, x)
    }

    /// Kretschmann scalar R_αβγδ R^αβγδ, in the chart's length units.
    fn kretschmann_at(&self, x: &Coords) -> Result<f64, GeometryError> {
        numeric_kretschmann(self, x)
    }
}

pub type SharedMetric = Arc<dyn Metric>;

/// Builds one of the built-in backgrounds from its name, chart and parameters.
///
/// Recognised names: `minkowski`, `schwarzschild` (Schwarzschild or isotropic
/// chart) and `weak-field`. The curvature parameter is the Schwarzschild
/// radius `rs`.
pub fn builtin_metric(name: &str, chart: Chart, rs: f64) -> Result<SharedMetric, GeometryError> {
    match (name, chart) {
        ("minkowski", Chart::Cartesian) => Ok(Arc::new(Minkowski)),
        ("schwarzschild", Chart::Schwarzschild) => Ok(Arc::new(Schwarzschild::new(rs)?)),
        ("schwarzschild", Chart::Isotropic) => Ok(Arc::new(IsotropicSchwarzschild::new(rs)?)),
        ("weak-field", Chart::Cartesian) => Ok(Arc::new(WeakField::new(rs)?)),
        _ => Err(GeometryError::UnknownMetric {
            name: name.to_string(),
            chart: chart.to_string(),
        }),
    }
}

fn check_chart(metric: &dyn Metric, event: &SpacetimeEvent) -> Result<(), GeometryError> {
    if metric.chart() != event.chart {
        return Err(GeometryError::ChartMismatch {
            expected: metric.chart(),
            found: event.chart,
        });
    }
    Ok(())
}

/// γ_μν at an event.
pub fn evaluate_metric(
    metric: &dyn Metric,
    event: &SpacetimeEvent,
) -> Result<Matrix4<f64>, GeometryError> {
    check_chart(metric, event)?;
    metric.components(&event.vector())
}

/// Γ^μ_αβ at an event.
pub fn christoffel(metric: &dyn Metric, event: &SpacetimeEvent) -> Result<Christoffel, GeometryError> {
    check_chart(metric, event)?;
    metric.christoffel_at(&event.vector())
}

/// γ_μν u^μ v^ν without conjugation.
pub fn inner_product(
    u: &Vector4<Complex64>,
    v: &Vector4<Complex64>,
    metric: &dyn Metric,
    event: &SpacetimeEvent,
) -> Result<Complex64, GeometryError> {
    let g = evaluate_metric(metric, event)?;
    Ok(bilinear(&g, u, v))
}

/// γ_μν ū^μ v^ν, the conjugating variant used for norms.
pub fn conjugate_inner_product(
    u: &Vector4<Complex64>,
    v: &Vector4<Complex64>,
    metric: &dyn Metric,
    event: &SpacetimeEvent,
) -> Result<Complex64, GeometryError> {
    let g = evaluate_metric(metric, event)?;
    Ok(bilinear(&g, &u.map(|c| c.conj()), v))
}

pub(crate) fn bilinear(g: &Matrix4<f64>, u: &Vector4<Complex64>, v: &Vector4<Complex64>) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for mu in 0..4 {
        for nu in 0..4 {
            acc += u[mu] * v[nu] * g[(mu, nu)];
        }
    }
    acc
}

pub(crate) fn real_bilinear(g: &Matrix4<f64>, u: &Vector4<f64>, v: &Vector4<f64>) -> f64 {
    (g * v).dot(u)
}

/// L_γ = K^(−1/4); `+∞` where the Kretschmann scalar vanishes.
pub fn curvature_length_scale(metric: &dyn Metric, event: &SpacetimeEvent) -> Result<f64, GeometryError> {
    check_chart(metric, event)?;
    let k = metric.kretschmann_at(&event.vector())?.abs();
    if k == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(k.powf(-0.25))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Warn,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Warn => "warn",
            Verdict::Fail => "fail",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidityReport {
    pub wavelength: f64,
    pub curvature_length: f64,
    pub ratio: f64,
    pub threshold: f64,
    pub verdict: Verdict,
}

/// Compares the largest wavelength λ_h with the background scale L_γ.
///
/// Pass below `threshold`, warn below ten times it, fail otherwise.
pub fn validity_ratio(
    wavelength: f64,
    metric: &dyn Metric,
    event: &SpacetimeEvent,
    threshold: f64,
) -> Result<ValidityReport, GeometryError> {
    if !(wavelength > 0.0) {
        return Err(GeometryError::NonPositiveWavelength(wavelength));
    }
    let curvature_length = curvature_length_scale(metric, event)?;
    let ratio = wavelength / curvature_length;
    let verdict = if ratio < threshold {
        Verdict::Pass
    } else if ratio < 10.0 * threshold {
        Verdict::Warn
    } else {
        Verdict::Fail
    };
    Ok(ValidityReport {
        wavelength,
        curvature_length,
        ratio,
        threshold,
        verdict,
    })
}

/// Flat metric η = diag(1, −1, −1, −1).
pub fn eta() -> Matrix4<f64> {
    Matrix4::from_diagonal(&Vector4::new(1.0, -1.0, -1.0, -1.0))
}

pub(crate) fn inverse(g: &Matrix4<f64>, x: &Coords) -> Result<Matrix4<f64>, GeometryError> {
    g.try_inverse()
        .ok_or(GeometryError::SingularMetric([x[0], x[1], x[2], x[3]]))
}
