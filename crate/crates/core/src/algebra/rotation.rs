use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use super::AlgebraError;

const UNIT_TOLERANCE: f64 = 1e-12;

/// Right-handed rotation by `theta` about a unit `axis` (Rodrigues).
pub fn rotation_matrix(axis: &Vector3<f64>, theta: f64) -> Result<Matrix3<f64>, AlgebraError> {
    let n = axis.norm();
    if (n - 1.0).abs() > UNIT_TOLERANCE {
        return Err(AlgebraError::NonUnitAxis(n));
    }
    let k = axis.cross_matrix();
    let (s, c) = theta.sin_cos();
    Ok(Matrix3::identity() + k * s + k * k * (1.0 - c))
}

pub fn rotate_vector(
    axis: &Vector3<f64>,
    theta: f64,
    v: &Vector3<Complex64>,
) -> Result<Vector3<Complex64>, AlgebraError> {
    let r = rotation_matrix(axis, theta)?.map(|x| Complex64::new(x, 0.0));
    Ok(r * v)
}

/// R T Rᵀ: the rotation applied to both slots.
pub fn rotate_tensor(
    axis: &Vector3<f64>,
    theta: f64,
    t: &Matrix3<Complex64>,
) -> Result<Matrix3<Complex64>, AlgebraError> {
    let r = rotation_matrix(axis, theta)?.map(|x| Complex64::new(x, 0.0));
    Ok(r * t * r.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn half_turn_flips_x() {
        let x = Vector3::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        let out = rotate_vector(&Vector3::z(), PI, &x).unwrap();
        assert!((out + x).norm() < 1e-15);
    }

    #[test]
    fn circular_vector_picks_up_phase() {
        let e = Vector3::new(c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0));
        let theta = 0.7;
        let out = rotate_vector(&Vector3::z(), theta, &e).unwrap();
        let expect = e * Complex64::from_polar(1.0, -theta);
        assert!((out - expect).norm() < 1e-15);
    }

    #[test]
    fn circular_tensor_picks_up_double_phase() {
        let e = Vector3::new(c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0));
        let t = e * e.transpose();
        let theta = 0.3;
        let out = rotate_tensor(&Vector3::z(), theta, &t).unwrap();
        let expect = t * Complex64::from_polar(1.0, -2.0 * theta);
        assert!((out - expect).norm() < 1e-15);
    }

    #[test]
    fn rejects_non_unit_axis() {
        assert_eq!(
            rotation_matrix(&Vector3::new(0.0, 0.0, 2.0), 1.0),
            Err(AlgebraError::NonUnitAxis(2.0))
        );
    }
}
