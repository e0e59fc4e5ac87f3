use std::fmt;

use nalgebra::{Matrix3, Vector3, Vector4};
use serde::{Deserialize, Serialize};

/// Coordinate chart of a metric.
///
/// `Cartesian` and `Isotropic` both use `(t, x, y, z)`; `Schwarzschild` uses
/// `(t, r, θ, φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Chart {
    Cartesian,
    Schwarzschild,
    Isotropic,
}

impl Chart {
    pub fn is_spherical(self) -> bool {
        matches!(self, Chart::Schwarzschild)
    }

    /// Which coordinates carry units of length (scale under x̄ = s·x).
    pub fn length_mask(self) -> [bool; 4] {
        match self {
            Chart::Cartesian | Chart::Isotropic => [true; 4],
            Chart::Schwarzschild => [true, true, false, false],
        }
    }

    /// Spatial position in the flat Cartesian embedding of the chart.
    pub fn cartesian_position(self, x: &Vector4<f64>) -> Vector3<f64> {
        match self {
            Chart::Cartesian | Chart::Isotropic => Vector3::new(x[1], x[2], x[3]),
            Chart::Schwarzschild => {
                let (r, th, ph) = (x[1], x[2], x[3]);
                Vector3::new(
                    r * th.sin() * ph.cos(),
                    r * th.sin() * ph.sin(),
                    r * th.cos(),
                )
            }
        }
    }

    /// Inverse of [`Chart::cartesian_position`] at coordinate time `t`.
    pub fn from_cartesian_position(self, t: f64, pos: &Vector3<f64>) -> Vector4<f64> {
        match self {
            Chart::Cartesian | Chart::Isotropic => Vector4::new(t, pos.x, pos.y, pos.z),
            Chart::Schwarzschild => {
                let r = pos.norm();
                let th = if r > 0.0 { (pos.z / r).clamp(-1.0, 1.0).acos() } else { 0.0 };
                let ph = pos.y.atan2(pos.x);
                Vector4::new(t, r, th, ph)
            }
        }
    }

    /// Rotation taking the chart's natural orthonormal spatial directions to
    /// Cartesian-oriented ones: column `a` holds the components of Cartesian
    /// axis `a` on the natural directions.
    ///
    /// For the spherical chart the natural directions are (r̂, θ̂, φ̂).
    pub fn orientation(self, x: &Vector4<f64>) -> Matrix3<f64> {
        match self {
            Chart::Cartesian | Chart::Isotropic => Matrix3::identity(),
            Chart::Schwarzschild => {
                let (st, ct) = x[2].sin_cos();
                let (sp, cp) = x[3].sin_cos();
                Matrix3::new(
                    st * cp, st * sp, ct, //
                    ct * cp, ct * sp, -st, //
                    -sp, cp, 0.0,
                )
            }
        }
    }

    /// Jacobian ∂X^a/∂x^μ of the map to flat Cartesian coordinates `(t, x, y, z)`.
    pub fn cartesian_jacobian(self, x: &Vector4<f64>) -> nalgebra::Matrix4<f64> {
        match self {
            Chart::Cartesian | Chart::Isotropic => nalgebra::Matrix4::identity(),
            Chart::Schwarzschild => {
                let (r, th, ph) = (x[1], x[2], x[3]);
                let (st, ct) = th.sin_cos();
                let (sp, cp) = ph.sin_cos();
                let mut j = nalgebra::Matrix4::zeros();
                j[(0, 0)] = 1.0;
                j[(1, 1)] = st * cp;
                j[(1, 2)] = r * ct * cp;
                j[(1, 3)] = -r * st * sp;
                j[(2, 1)] = st * sp;
                j[(2, 2)] = r * ct * sp;
                j[(2, 3)] = r * st * cp;
                j[(3, 1)] = ct;
                j[(3, 2)] = -r * st;
                j
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Chart::Cartesian => "cartesian",
            Chart::Schwarzschild => "schwarzschild",
            Chart::Isotropic => "isotropic",
        }
    }
}

impl fmt::Display for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
