//! Null geodesics and parallel transport of polarization vectors and tensors
//! along them.
//!
//! Vectors and tensors are carried with upper indices. Complex quantities are
//! transported as separate real and imaginary parts, since the connection is
//! real.

mod gauge;
mod geodesic;
mod ode;
mod parallel;

use nalgebra::{Vector3, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spacetime::{
    real_bilinear, GeometryError, LocalFrame, Metric, SpacetimeEvent,
};

pub use gauge::{
    check_tt_gauge, constraint_drift, project_static_gauge_tensor, project_static_gauge_vector,
    DriftSummary, GaugeReport,
};
pub use geodesic::{
    frame_direction, integrate_null_geodesic, lensing_ray, scattering_angle, RayPath, RaySample,
};
pub use parallel::{
    parallel_transport_tensor, parallel_transport_vector, TransportedTensor, TransportedVector,
};

/// Default tolerance for gauge and constraint checks.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
/// Tolerance on |γ p p| / (p^0)² for accepting an initial momentum as null.
pub const NULL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("step size underflow at l = {l}: h = {h:e}")]
    StepSizeUnderflow { l: f64, h: f64 },
    #[error("step limit of {0} exceeded")]
    StepLimitExceeded(usize),
    #[error("initial momentum is not null: |γ p p|/(p⁰)² = {0:e}")]
    NonNullInitialMomentum(f64),
    #[error("initial momentum must be future directed (p⁰ = {0})")]
    PastDirected(f64),
    #[error("l_end = {l_end} must exceed the initial affine parameter {l0}")]
    InvalidEndpoint { l0: f64, l_end: f64 },
    #[error("invalid integration controls: {0}")]
    InvalidControls(String),
    #[error("path has no samples")]
    EmptyPath,
    #[error("input tensor is not symmetric")]
    NonSymmetricInput,
    #[error("path was integrated in the {path} chart but the metric uses {metric}")]
    ChartMismatch { path: String, metric: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    /// Classical fixed-step fourth-order Runge–Kutta.
    Rk4,
    /// Dormand–Prince 5(4) with step-size control.
    Dp45,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Controls {
    pub integrator: Integrator,
    /// Fixed step for RK4, initial step for DP45.
    pub step: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Record a sample every this many accepted steps (the last step is always
    /// recorded).
    pub sample_every: usize,
    /// Re-solve p⁰ from the null condition every this many steps.
    pub project_every: Option<usize>,
    pub max_steps: usize,
}

impl Default for Controls {
    fn default() -> Self {
        Self {
            integrator: Integrator::Rk4,
            step: 1e-3,
            rtol: 1e-10,
            atol: 1e-12,
            sample_every: 100,
            project_every: None,
            max_steps: 50_000_000,
        }
    }
}

impl Controls {
    pub fn validate(&self) -> Result<(), TransportError> {
        let bad = |m: &str| Err(TransportError::InvalidControls(m.to_string()));
        if !(self.step > 0.0) || !self.step.is_finite() {
            return bad("step must be positive");
        }
        if !(self.rtol > 0.0) || !(self.atol >= 0.0) {
            return bad("tolerances must be positive");
        }
        if self.sample_every == 0 {
            return bad("sample_every must be at least 1");
        }
        if self.project_every == Some(0) {
            return bad("project_every must be at least 1");
        }
        Ok(())
    }
}

/// Event, phase-gradient momentum p^μ and affine parameter of a light ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullRay {
    pub event: SpacetimeEvent,
    pub momentum: Vector4<f64>,
    pub l: f64,
}

impl NullRay {
    /// Checks nullity and future orientation.
    pub fn new(
        metric: &dyn Metric,
        event: SpacetimeEvent,
        momentum: Vector4<f64>,
        l: f64,
    ) -> Result<Self, TransportError> {
        if momentum[0] <= 0.0 {
            return Err(TransportError::PastDirected(momentum[0]));
        }
        let g = crate::spacetime::evaluate_metric(metric, &event)?;
        let residual = real_bilinear(&g, &momentum, &momentum).abs() / (momentum[0] * momentum[0]);
        if !(residual <= NULL_TOLERANCE) {
            return Err(TransportError::NonNullInitialMomentum(residual));
        }
        Ok(Self { event, momentum, l })
    }

    /// Builds a ray from a spatial direction and frequency seen by the static
    /// observer at `event`.
    ///
    /// `direction` is given on the observer's Cartesian-oriented axes. Its
    /// spatial coordinate components are fixed first and p⁰ is the positive
    /// root of γ_μν p^μ p^ν = 0.
    pub fn from_direction(
        metric: &dyn Metric,
        event: SpacetimeEvent,
        direction: &Vector3<f64>,
        frequency: f64,
    ) -> Result<Self, TransportError> {
        let n = direction.norm();
        if !(n > 0.0) || !(frequency > 0.0) {
            return Err(TransportError::InvalidControls(
                "ray direction must be non-zero and frequency positive".into(),
            ));
        }
        let x = event.vector();
        let frame = LocalFrame::at(metric, &x)?;
        let k = frame.vector(0.0, &(direction * (frequency / n)));
        let p0 = solve_time_component(&frame.metric, &k, 1.0)
            .ok_or(GeometryError::NoStaticObserver { g00: frame.metric[(0, 0)] })?;
        let p = Vector4::new(p0, k[1], k[2], k[3]);
        Self::new(metric, event, p, 0.0)
    }

    /// The same ray with its momentum reversed (past directed), for
    /// retracing a path backwards.
    pub fn reversed(&self) -> Self {
        Self {
            event: self.event,
            momentum: -self.momentum,
            l: self.l,
        }
    }

    pub fn null_residual(&self, metric: &dyn Metric) -> Result<f64, TransportError> {
        let g = crate::spacetime::evaluate_metric(metric, &self.event)?;
        Ok(real_bilinear(&g, &self.momentum, &self.momentum).abs())
    }
}

/// Root of γ_00 p0² + 2γ_0i p^i p0 + γ_ij p^i p^j = 0 with the sign of
/// `orientation`.
pub(crate) fn solve_time_component(
    g: &nalgebra::Matrix4<f64>,
    p: &Vector4<f64>,
    orientation: f64,
) -> Option<f64> {
    let a = g[(0, 0)];
    if !(a > 0.0) {
        return None;
    }
    let mut b = 0.0;
    let mut c = 0.0;
    for i in 1..4 {
        b += 2.0 * g[(0, i)] * p[i];
        for j in 1..4 {
            c += g[(i, j)] * p[i] * p[j];
        }
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    // numerically stable pair of roots
    let (r1, r2) = if b >= 0.0 {
        let q = -0.5 * (b + s);
        (q / a, if q != 0.0 { c / q } else { 0.0 })
    } else {
        let q = -0.5 * (b - s);
        (q / a, if q != 0.0 { c / q } else { 0.0 })
    };
    let (hi, lo) = if r1 >= r2 { (r1, r2) } else { (r2, r1) };
    Some(if orientation >= 0.0 { hi } else { lo })
}
