//! Laboratory emulation: constant conformal rescaling of a scenario, the
//! flat-space medium equivalent to a stationary metric, and a kinematic
//! model of the down-conversion photon-pair source.

mod medium;
mod scaling;
mod scenario_scale;
mod source;

use thiserror::Error;

use crate::algebra::AlgebraError;
use crate::spacetime::GeometryError;
use crate::transport::TransportError;

pub use medium::{
    compile_voxels, export_medium_voxels, format_voxels, medium_ray_check, plebanski_medium, ConstitutiveTensors,
    MediumRayReport, VoxelAxes,
};
pub use scaling::{conformal_scale_field, conformal_scale_metric, ConformalScale, FieldSample, ScaledMetric};
pub use scenario_scale::scale_scenario;
pub use source::{
    coincidence_amplitude, momentum_correlation_quality, spdc_state, CorrelationQuality,
    SpdcSourceSpec, SpdcState, DEFAULT_QUALITY_THRESHOLD,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmulationError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("scale factor must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("g_00 = {g00} ≤ 0 at {position:?}: no equivalent medium inside an ergoregion or horizon")]
    ErgoregionOrHorizon { g00: f64, position: [f64; 3] },
    #[error("{name} must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("field tensor is not antisymmetric")]
    NonAntisymmetricField,
    #[error("source has no helicity content (both pair amplitudes are zero)")]
    EmptySource,
    #[error("medium ray left the stationary region or failed to advance: {0}")]
    MediumRay(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for EmulationError {
    fn from(e: std::io::Error) -> Self {
        EmulationError::Io(e.to_string())
    }
}
