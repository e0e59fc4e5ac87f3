use nalgebra::{Matrix4, Vector3, Vector4};
use num_complex::Complex64;

use super::{real_bilinear, Coords, GeometryError, Metric};

/// Orthonormal frame of the static observer at an event.
///
/// `u` is the observer's four-velocity along ∂_t; `axes` are spatial unit
/// vectors oriented like the Cartesian x, y, z axes of the chart's flat
/// embedding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame {
    pub metric: Matrix4<f64>,
    pub u: Vector4<f64>,
    pub axes: [Vector4<f64>; 3],
}

impl LocalFrame {
    pub fn at(metric: &dyn Metric, x: &Coords) -> Result<Self, GeometryError> {
        let g = metric.components(x)?;
        let g00 = g[(0, 0)];
        if !(g00 > 0.0) {
            return Err(GeometryError::NoStaticObserver { g00 });
        }
        let u = Vector4::new(1.0 / g00.sqrt(), 0.0, 0.0, 0.0);

        // Gram–Schmidt on the coordinate directions, spatial product −γ.
        let mut natural: [Vector4<f64>; 3] = [Vector4::zeros(); 3];
        for i in 0..3 {
            let mut c = Vector4::zeros();
            c[i + 1] = 1.0;
            c -= u * real_bilinear(&g, &c, &u);
            for prev in natural.iter().take(i) {
                c += prev * real_bilinear(&g, prev, &c);
            }
            let n2 = -real_bilinear(&g, &c, &c);
            if !(n2 > 0.0) {
                return Err(GeometryError::SingularMetric([x[0], x[1], x[2], x[3]]));
            }
            natural[i] = c / n2.sqrt();
        }

        let o = metric.chart().orientation(x);
        let mut axes = [Vector4::zeros(); 3];
        for (a, axis) in axes.iter_mut().enumerate() {
            *axis = natural[0] * o[(0, a)] + natural[1] * o[(1, a)] + natural[2] * o[(2, a)];
        }
        Ok(Self { metric: g, u, axes })
    }

    /// Coordinate vector with frame components (time, spatial).
    pub fn vector(&self, time: f64, spatial: &Vector3<f64>) -> Vector4<f64> {
        self.u * time + self.axes[0] * spatial.x + self.axes[1] * spatial.y + self.axes[2] * spatial.z
    }

    pub fn complex_spatial_vector(&self, spatial: &Vector3<Complex64>) -> Vector4<Complex64> {
        let mut out = Vector4::from_element(Complex64::new(0.0, 0.0));
        for a in 0..3 {
            for mu in 0..4 {
                out[mu] += spatial[a] * self.axes[a][mu];
            }
        }
        out
    }

    /// Frame time component γ(v, u).
    pub fn time_component(&self, v: &Vector4<f64>) -> f64 {
        real_bilinear(&self.metric, v, &self.u)
    }

    /// Frame spatial components −γ(v, e_a).
    pub fn spatial_components(&self, v: &Vector4<f64>) -> Vector3<f64> {
        Vector3::new(
            -real_bilinear(&self.metric, v, &self.axes[0]),
            -real_bilinear(&self.metric, v, &self.axes[1]),
            -real_bilinear(&self.metric, v, &self.axes[2]),
        )
    }
}
