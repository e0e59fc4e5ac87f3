use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{Matrix4, Vector3, Vector4};
use num_complex::Complex64;

use super::EquivalenceError;
use crate::algebra::{polarization_vector, Helicity};
use crate::spacetime::{evaluate_metric, real_bilinear, LocalFrame, Metric, SpacetimeEvent};
use crate::transport::DEFAULT_TOLERANCE;

/// Circular polarization vectors ê± at an event, for a given null momentum.
///
/// Both are spatial for the static observer, transverse to p, null under the
/// non-conjugating product and of unit conjugate norm. Their phase follows
/// the flat-space convention applied on the observer's Cartesian-oriented
/// axes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HelicityFrame {
    pub e_plus: Vector4<Complex64>,
    pub e_minus: Vector4<Complex64>,
    /// Propagation direction on the observer's axes.
    pub direction: Vector3<f64>,
    pub momentum: Vector4<f64>,
    pub event: SpacetimeEvent,
    pub metric: Matrix4<f64>,
}

impl HelicityFrame {
    pub fn vector(&self, h: Helicity) -> &Vector4<Complex64> {
        match h {
            Helicity::Plus => &self.e_plus,
            Helicity::Minus => &self.e_minus,
        }
    }

    /// ê_h ⊗ ê_h
    pub fn circular_tensor(&self, h: Helicity) -> Matrix4<Complex64> {
        let e = self.vector(h);
        e * e.transpose()
    }

    /// (ê+⊗ê− + ê−⊗ê+)/√2, the helicity-0 combination.
    pub fn mixed_tensor(&self) -> Matrix4<Complex64> {
        (self.e_plus * self.e_minus.transpose() + self.e_minus * self.e_plus.transpose())
            * Complex64::from(FRAC_1_SQRT_2)
    }

    /// Σ conj(X^μν) γ_μα γ_νβ B^αβ
    pub fn tensor_product(&self, x: &Matrix4<Complex64>, b: &Matrix4<Complex64>) -> Complex64 {
        let g = self.metric.map(|v| Complex64::new(v, 0.0));
        let low = g * b * g;
        x.iter().zip(low.iter()).map(|(a, l)| a.conj() * l).sum()
    }

    /// −γ(conj(ê_h), v): the component of v along ê_h (positive for v = ê_h).
    pub fn overlap(&self, h: Helicity, v: &Vector4<Complex64>) -> Complex64 {
        let e = self.vector(h);
        let mut acc = Complex64::new(0.0, 0.0);
        for mu in 0..4 {
            for nu in 0..4 {
                acc += e[mu].conj() * v[nu] * self.metric[(mu, nu)];
            }
        }
        -acc
    }
}

pub fn helicity_frame(
    p: &Vector4<f64>,
    metric: &dyn Metric,
    event: &SpacetimeEvent,
) -> Result<HelicityFrame, EquivalenceError> {
    let g = evaluate_metric(metric, event)?;
    let frame = LocalFrame::at(metric, &event.vector())?;
    let energy = frame.time_component(p);
    let residual = real_bilinear(&g, p, p).abs() / (energy * energy);
    if !(energy > 0.0) || !(residual <= DEFAULT_TOLERANCE) {
        return Err(EquivalenceError::NonNullMomentum(residual));
    }
    let k = frame.spatial_components(p);
    let direction = k / k.norm();
    let plus = polarization_vector(&direction, Helicity::Plus)?;
    let minus = polarization_vector(&direction, Helicity::Minus)?;
    Ok(HelicityFrame {
        e_plus: frame.complex_spatial_vector(&plus),
        e_minus: frame.complex_spatial_vector(&minus),
        direction,
        momentum: *p,
        event: *event,
        metric: g,
    })
}

/// Coefficients of B on ê+⊗ê+, ê−⊗ê− and the helicity-0 combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HelicityAmplitudes {
    pub plus: Complex64,
    pub minus: Complex64,
    pub zero: Complex64,
    /// ‖B − reconstruction‖_F / ‖B‖_F
    pub residual: f64,
}

impl HelicityAmplitudes {
    pub fn get(&self, h: Helicity) -> Complex64 {
        match h {
            Helicity::Plus => self.plus,
            Helicity::Minus => self.minus,
        }
    }

    /// |c0| < 1e−9 (|c+| + |c−| + 1)
    pub fn is_tt(&self) -> bool {
        self.zero.norm() < 1e-9 * (self.plus.norm() + self.minus.norm() + 1.0)
    }
}

/// Positive-definite h_μν = 2u_μu_ν − g_μν of the static observer, which
/// sums squares of orthonormal-frame components.
fn observer_norm_metric(g: &Matrix4<f64>) -> Matrix4<Complex64> {
    let u = g.column(0) / g[(0, 0)].sqrt();
    (u * u.transpose() * 2.0 - g).map(|v| Complex64::new(v, 0.0))
}

/// Norm of a rank-2 tensor summed over the static observer's orthonormal
/// components, so that it does not depend on the chart's coordinate scales.
pub fn observer_tensor_norm(g: &Matrix4<f64>, b: &Matrix4<Complex64>) -> f64 {
    tensor_norm(&observer_norm_metric(g), b)
}

fn tensor_norm(h: &Matrix4<Complex64>, b: &Matrix4<Complex64>) -> f64 {
    let low = h * b * h;
    b.iter()
        .zip(low.iter())
        .map(|(a, l)| a.conj() * l)
        .sum::<Complex64>()
        .re
        .max(0.0)
        .sqrt()
}

pub fn decompose_helicity(
    b: &Matrix4<Complex64>,
    frame: &HelicityFrame,
) -> Result<HelicityAmplitudes, EquivalenceError> {
    let h = observer_norm_metric(&frame.metric);
    let scale = tensor_norm(&h, b).max(f64::MIN_POSITIVE);
    if tensor_norm(&h, &(b - b.transpose())) > 1e-12 * scale {
        return Err(EquivalenceError::NonSymmetricInput);
    }
    let p_low = frame.metric * frame.momentum;
    let energy = p_low[0].abs() / frame.metric[(0, 0)].sqrt();
    let pl = p_low.map(|v| Complex64::new(v, 0.0));
    let w = b * pl;
    let w_norm = (w.adjoint() * h * w)[0].re.max(0.0).sqrt();
    let transverse = w_norm / (energy * scale);
    if transverse > DEFAULT_TOLERANCE {
        return Err(EquivalenceError::NonTransverseInput(transverse));
    }
    let tp = frame.circular_tensor(Helicity::Plus);
    let tm = frame.circular_tensor(Helicity::Minus);
    let t0 = frame.mixed_tensor();
    let plus = frame.tensor_product(&tp, b);
    let minus = frame.tensor_product(&tm, b);
    let zero = frame.tensor_product(&t0, b);
    let rebuilt = tp * plus + tm * minus + t0 * zero;
    Ok(HelicityAmplitudes {
        plus,
        minus,
        zero,
        residual: tensor_norm(&h, &(b - rebuilt)) / scale,
    })
}
