use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use super::{check_kappa, AlgebraError, Helicity};

/// Minimal rotation taking ẑ to the unit vector `n`.
///
/// Uses the rotation in the plane of ẑ and `n`; `n = −ẑ` maps through a half
/// turn about x̂.
pub(crate) fn rotation_from_z(n: &Vector3<f64>) -> Matrix3<f64> {
    let v = Vector3::z().cross(n);
    let c = n.z;
    if v.norm_squared() == 0.0 {
        return if c > 0.0 {
            Matrix3::identity()
        } else {
            Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0))
        };
    }
    let k = v.cross_matrix();
    Matrix3::identity() + k + k * k / (1.0 + c)
}

/// Unit circular polarization ê_λ(p̂) = R(ẑ→p̂)(x̂ + iλŷ)/√2.
pub fn polarization_vector(
    p: &Vector3<f64>,
    helicity: Helicity,
) -> Result<Vector3<Complex64>, AlgebraError> {
    let n = p.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(AlgebraError::ZeroMomentum);
    }
    let r = rotation_from_z(&(p / n));
    let l = helicity.sign();
    let mut e = Vector3::zeros();
    for i in 0..3 {
        e[i] = Complex64::new(r[(i, 0)], l * r[(i, 1)]) * FRAC_1_SQRT_2;
    }
    Ok(e)
}

/// Electromagnetic plane wave |p λ⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWave {
    pub momentum: Vector3<f64>,
    pub helicity: Helicity,
    pub polarization: Vector3<Complex64>,
}

impl PlaneWave {
    pub fn new(momentum: Vector3<f64>, helicity: Helicity) -> Result<Self, AlgebraError> {
        let polarization = polarization_vector(&momentum, helicity)?;
        Ok(Self {
            momentum,
            helicity,
            polarization,
        })
    }

    /// Builds a wave from an integer helicity, rejecting anything but ±1.
    pub fn from_parts(momentum: Vector3<f64>, helicity: i32) -> Result<Self, AlgebraError> {
        Self::new(momentum, Helicity::from_i32(helicity)?)
    }

    pub fn frequency(&self) -> f64 {
        self.momentum.norm()
    }

    pub fn direction(&self) -> Vector3<f64> {
        self.momentum / self.frequency()
    }

    /// ê exp(i(p·x − ωt)).
    pub fn field_at(&self, t: f64, x: &Vector3<f64>) -> Vector3<Complex64> {
        let phase = self.momentum.dot(x) - self.frequency() * t;
        self.polarization * Complex64::from_polar(1.0, phase)
    }
}

/// Vector plane wave ê exp(iω(z − t)) travelling along ẑ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorWave {
    pub polarization: Vector3<Complex64>,
    pub frequency: f64,
}

impl VectorWave {
    pub fn at(&self, z: f64, t: f64) -> Vector3<Complex64> {
        self.polarization * Complex64::from_polar(1.0, self.frequency * (z - t))
    }
}

/// A helicity ±2 plane wave written as two vector waves sharing its
/// polarization and splitting its frequency as κω + (1−κ)ω.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitPlaneWave {
    pub first: VectorWave,
    pub second: VectorWave,
}

impl SplitPlaneWave {
    /// ½(a ⊗ b + b ⊗ a) with both factors sampled at the same (z, t).
    pub fn symmetrized_at(&self, z: f64, t: f64) -> Matrix3<Complex64> {
        let a = self.first.at(z, t);
        let b = self.second.at(z, t);
        (a * b.transpose() + b * a.transpose()) * Complex64::from(0.5)
    }

    /// The gravitational plane wave [ê ⊗ ê] exp(iω(z − t)) it represents.
    pub fn tensor_wave_at(&self, z: f64, t: f64) -> Matrix3<Complex64> {
        let e = self.first.polarization;
        let omega = self.first.frequency + self.second.frequency;
        e * e.transpose() * Complex64::from_polar(1.0, omega * (z - t))
    }
}

pub fn split_plane_wave(
    grav_helicity: i32,
    omega: f64,
    kappa: f64,
) -> Result<SplitPlaneWave, AlgebraError> {
    let h = Helicity::from_gravitational(grav_helicity)?;
    check_kappa(kappa)?;
    if !(omega > 0.0) {
        return Err(AlgebraError::NonPositiveFrequency(omega));
    }
    let e = polarization_vector(&Vector3::z(), h)?;
    Ok(SplitPlaneWave {
        first: VectorWave {
            polarization: e,
            frequency: kappa * omega,
        },
        second: VectorWave {
            polarization: e,
            frequency: (1.0 - kappa) * omega,
        },
    })
}
