//! Direct and factored propagation of a gravitational wave, and the
//! comparison between them.
//!
//! A helicity ±2 tensor c± ê±⊗ê± can be carried along a ray either as a
//! tensor or as two electromagnetic vector waves ê± whose outer product is
//! taken afterwards. This module builds both and measures the difference,
//! together with the polarization phases of each.

mod frame;
mod phase;
mod propagate;

use num_complex::Complex64;
use thiserror::Error;

use crate::algebra::{AlgebraError, Helicity};
use crate::spacetime::{GeometryError, Metric, SpacetimeEvent};
use crate::transport::{RayPath, TransportError};

pub use frame::{decompose_helicity, helicity_frame, observer_tensor_norm, HelicityAmplitudes, HelicityFrame};
pub use phase::{
    em_phase_series, equivalence_report, gw_phase_series, EquivalenceReport, PhaseSeries,
    PHASE_EPSILON,
};
pub use propagate::{
    assemble_gw, propagate_direct, propagate_factored, relative_deviation, GravitationalWave,
    PolarizationTensorField,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquivalenceError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("momentum is not null: |γ p p|/E² = {0:e}")]
    NonNullMomentum(f64),
    #[error("tensor is not transverse to the frame momentum (residual {0:e})")]
    NonTransverseInput(f64),
    #[error("tensor is not symmetric")]
    NonSymmetricInput,
    #[error("fields are sampled on different grids ({a} vs {b} samples)")]
    GridMismatch { a: usize, b: usize },
    #[error("helicity frame was built at a different event or momentum than the ray start")]
    FrameMismatch,
}

/// Everything computed when a wave is carried along one ray both ways.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceRun {
    pub direct: PolarizationTensorField,
    pub factored: PolarizationTensorField,
    /// Phases of the first helicity with a nonzero amplitude.
    pub helicity: Helicity,
    pub phases: PhaseSeries,
    pub report: EquivalenceReport,
}

/// Builds the wave at the start of `path`, propagates it directly and
/// factored, and compares the two. Both helicities share the split κ.
pub fn run_equivalence(
    metric: &dyn Metric,
    path: &RayPath,
    c_plus: Complex64,
    c_minus: Complex64,
    kappa: f64,
    phi0: f64,
    tolerance: f64,
) -> Result<EquivalenceRun, EquivalenceError> {
    let start = path.first().ok_or(TransportError::EmptyPath)?;
    let event = SpacetimeEvent::from_vector(path.chart(), &start.x)?;
    let frame = helicity_frame(&start.p, metric, &event)?;
    let wave = assemble_gw(c_plus, c_minus, frame, phi0, kappa, kappa, path)?;
    let direct = propagate_direct(&wave, metric, tolerance)?;
    let factored = propagate_factored(&wave, metric, tolerance)?;

    let helicity = if c_plus.norm() > 0.0 { Helicity::Plus } else { Helicity::Minus };
    let e = propagate::transport_polarization(metric, path, wave.frame.vector(helicity))?;
    let b = propagate::transport_amplitude(metric, path, &wave.amplitude_tensor())?;
    let phases = PhaseSeries {
        em: em_phase_series(metric, path, &e, helicity, kappa, phi0)?,
        gw: gw_phase_series(metric, path, &b, helicity, phi0)?,
        kappa,
        phi0,
    };
    let report = equivalence_report(&direct, &factored, Some(&phases), tolerance)?;
    Ok(EquivalenceRun {
        direct,
        factored,
        helicity,
        phases,
        report,
    })
}
