//! Flat-space plane-wave algebra: circular polarization vectors, symmetrized
//! two-photon states, the mass-squared and helicity operators, and the
//! κ-family of electromagnetic tensor waves equivalent to one gravitational
//! plane wave.

mod rotation;
mod state;
mod tensor;
mod wave;

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use rotation::{rotate_tensor, rotate_vector, rotation_matrix};
pub use state::{
    equivalent_tensor_family, symmetrized_product, TotalHelicity, TwoPhotonState,
};
pub use tensor::{factorize_circular, PolarizationTensor2D, RANK_TOLERANCE};
pub use wave::{polarization_vector, split_plane_wave, PlaneWave, SplitPlaneWave, VectorWave};

pub type C64 = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("plane-wave momentum must be non-zero")]
    ZeroMomentum,
    #[error("helicity must be +1 or -1, got {0}")]
    InvalidHelicity(i32),
    #[error("gravitational helicity must be +2 or -2, got {0}")]
    InvalidGravHelicity(i32),
    #[error("kappa = {0} violates κ∈(0,1): a factor would propagate backwards along the ray")]
    KappaOutOfRange(f64),
    #[error("momenta are not parallel, so the state is not a helicity eigenstate along one direction")]
    NotHelicityEigenstate,
    #[error("momenta are not parallel; total four-momentum {sum:?} is not null")]
    NotMomentumEigenstateAlongRay { sum: [f64; 4] },
    #[error("tensor has rank 2 (|det| = {det:e}) and is not a square a⊗a")]
    NotFactorizable { det: f64 },
    #[error("tensor is zero")]
    DegenerateInput,
    #[error("rotation axis must have unit length, got |axis| = {0}")]
    NonUnitAxis(f64),
    #[error("frequency must be positive, got {0}")]
    NonPositiveFrequency(f64),
}

/// Circular polarization state of a single photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Helicity {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Helicity {
    pub fn from_i32(v: i32) -> Result<Self, AlgebraError> {
        match v {
            1 => Ok(Helicity::Plus),
            -1 => Ok(Helicity::Minus),
            other => Err(AlgebraError::InvalidHelicity(other)),
        }
    }

    /// Photon helicity from a gravitational one (±2 → ±1).
    pub fn from_gravitational(v: i32) -> Result<Self, AlgebraError> {
        match v {
            2 => Ok(Helicity::Plus),
            -2 => Ok(Helicity::Minus),
            other => Err(AlgebraError::InvalidGravHelicity(other)),
        }
    }

    pub fn value(self) -> i32 {
        match self {
            Helicity::Plus => 1,
            Helicity::Minus => -1,
        }
    }

    pub fn sign(self) -> f64 {
        self.value() as f64
    }

    pub fn flipped(self) -> Self {
        match self {
            Helicity::Plus => Helicity::Minus,
            Helicity::Minus => Helicity::Plus,
        }
    }
}

impl fmt::Display for Helicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Helicity::Plus => "+",
            Helicity::Minus => "-",
        })
    }
}

pub(crate) fn check_kappa(kappa: f64) -> Result<(), AlgebraError> {
    if kappa > 0.0 && kappa < 1.0 {
        Ok(())
    } else {
        Err(AlgebraError::KappaOutOfRange(kappa))
    }
}
