use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;

use super::{observer_tensor_norm, EquivalenceError, HelicityFrame};
use crate::algebra::{check_kappa, Helicity};
use crate::transport::{
    check_tt_gauge, parallel_transport_tensor, parallel_transport_vector,
    project_static_gauge_tensor, project_static_gauge_vector, GaugeReport, RayPath,
};
use crate::spacetime::{Metric, SpacetimeEvent};

/// A helicity ±2 wave c+ ê+⊗ê+ + c− ê−⊗ê− with overall phase φ0, attached to
/// the ray along which it propagates.
///
/// Each helicity component is split into two electromagnetic factors with
/// phase shares κ_h φ0 and (1 − κ_h) φ0.
#[derive(Debug, Clone, PartialEq)]
pub struct GravitationalWave {
    pub c_plus: Complex64,
    pub c_minus: Complex64,
    pub phi0: f64,
    pub kappa_plus: f64,
    pub kappa_minus: f64,
    pub frame: HelicityFrame,
    pub ray: RayPath,
}

impl GravitationalWave {
    pub fn amplitude(&self, h: Helicity) -> Complex64 {
        match h {
            Helicity::Plus => self.c_plus,
            Helicity::Minus => self.c_minus,
        }
    }

    pub fn kappa(&self, h: Helicity) -> f64 {
        match h {
            Helicity::Plus => self.kappa_plus,
            Helicity::Minus => self.kappa_minus,
        }
    }

    /// c+ ê+⊗ê+ + c− ê−⊗ê−, without the phase factor.
    pub fn amplitude_tensor(&self) -> Matrix4<Complex64> {
        self.frame.circular_tensor(Helicity::Plus) * self.c_plus
            + self.frame.circular_tensor(Helicity::Minus) * self.c_minus
    }

    /// The initial field e^{iφ0} (c+ ê+⊗ê+ + c− ê−⊗ê−).
    pub fn initial_tensor(&self) -> Matrix4<Complex64> {
        self.amplitude_tensor() * Complex64::from_polar(1.0, self.phi0)
    }

    /// The initial field written as symmetrized products of the two factor
    /// waves of each helicity.
    pub fn initial_factored(&self) -> Matrix4<Complex64> {
        [Helicity::Plus, Helicity::Minus]
            .into_iter()
            .map(|h| {
                factor_product(
                    self.frame.vector(h),
                    self.frame.vector(h),
                    self.amplitude(h),
                    self.kappa(h),
                    self.phi0,
                )
            })
            .sum()
    }
}

/// (c/2)(a e^{iκφ} ⊗ b e^{i(1−κ)φ} + swap)
fn factor_product(
    a: &Vector4<Complex64>,
    b: &Vector4<Complex64>,
    c: Complex64,
    kappa: f64,
    phi0: f64,
) -> Matrix4<Complex64> {
    let f1 = a * Complex64::from_polar(1.0, kappa * phi0);
    let f2 = b * Complex64::from_polar(1.0, (1.0 - kappa) * phi0);
    (f1 * f2.transpose() + f2 * f1.transpose()) * (c * 0.5)
}

pub fn assemble_gw(
    c_plus: Complex64,
    c_minus: Complex64,
    frame: HelicityFrame,
    phi0: f64,
    kappa_plus: f64,
    kappa_minus: f64,
    ray: &RayPath,
) -> Result<GravitationalWave, EquivalenceError> {
    check_kappa(kappa_plus)?;
    check_kappa(kappa_minus)?;
    let start = ray.first().ok_or(crate::transport::TransportError::EmptyPath)?;
    let scale = start.p.norm().max(1.0);
    if frame.event.chart != ray.chart()
        || (frame.event.vector() - start.x).norm() > 1e-12 * start.x.norm().max(1.0)
        || (frame.momentum - start.p).norm() > 1e-12 * scale
    {
        return Err(EquivalenceError::FrameMismatch);
    }
    Ok(GravitationalWave {
        c_plus,
        c_minus,
        phi0,
        kappa_plus,
        kappa_minus,
        frame,
        ray: ray.clone(),
    })
}

/// A complex symmetric h^μν at each sample of a ray, with its TT gauge
/// verdicts.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarizationTensorField {
    pub l: Vec<f64>,
    pub tensors: Vec<Matrix4<Complex64>>,
    pub gauge: Vec<GaugeReport>,
    /// γ_μν at each sample.
    pub metrics: Vec<Matrix4<f64>>,
}

impl PolarizationTensorField {
    fn build(
        metric: &dyn Metric,
        ray: &RayPath,
        tensors: Vec<Matrix4<Complex64>>,
        tolerance: f64,
    ) -> Result<Self, EquivalenceError> {
        let mut gauge = Vec::with_capacity(tensors.len());
        let mut metrics = Vec::with_capacity(tensors.len());
        for (s, b) in ray.samples().iter().zip(&tensors) {
            let event = SpacetimeEvent::from_vector(ray.chart(), &s.x)?;
            gauge.push(check_tt_gauge(b, &s.p, metric, &event, tolerance));
            metrics.push(metric.components(&s.x)?);
        }
        Ok(Self {
            l: ray.samples().iter().map(|s| s.l).collect(),
            tensors,
            gauge,
            metrics,
        })
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn gauge_ok(&self) -> bool {
        self.gauge.iter().all(GaugeReport::passed)
    }

    pub fn max_gauge_residual(&self) -> f64 {
        self.gauge.iter().map(GaugeReport::max_residual).fold(0.0, f64::max)
    }
}

/// Parallel-transported ê_h along the ray, brought back to the static gauge
/// at every sample.
pub(crate) fn transport_polarization(
    metric: &dyn Metric,
    ray: &RayPath,
    e0: &Vector4<Complex64>,
) -> Result<Vec<Vector4<Complex64>>, EquivalenceError> {
    let moved = parallel_transport_vector(metric, ray, e0)?;
    ray.samples()
        .iter()
        .zip(&moved.values)
        .map(|(s, v)| Ok(project_static_gauge_vector(v, &s.p, &metric.components(&s.x)?)))
        .collect()
}

/// Parallel-transported B along the ray, in the static gauge.
pub(crate) fn transport_amplitude(
    metric: &dyn Metric,
    ray: &RayPath,
    b0: &Matrix4<Complex64>,
) -> Result<Vec<Matrix4<Complex64>>, EquivalenceError> {
    let moved = parallel_transport_tensor(metric, ray, b0)?;
    ray.samples()
        .iter()
        .zip(&moved.values)
        .map(|(s, b)| Ok(project_static_gauge_tensor(b, &s.p, &metric.components(&s.x)?)))
        .collect()
}

/// Transports the polarization tensor as a whole.
pub fn propagate_direct(
    wave: &GravitationalWave,
    metric: &dyn Metric,
    tolerance: f64,
) -> Result<PolarizationTensorField, EquivalenceError> {
    let phase = Complex64::from_polar(1.0, wave.phi0);
    let tensors = transport_amplitude(metric, &wave.ray, &wave.amplitude_tensor())?
        .into_iter()
        .map(|b| b * phase)
        .collect();
    PolarizationTensorField::build(metric, &wave.ray, tensors, tolerance)
}

/// Transports ê+ and ê− as vector waves and rebuilds the tensor from their
/// symmetrized products at each sample.
pub fn propagate_factored(
    wave: &GravitationalWave,
    metric: &dyn Metric,
    tolerance: f64,
) -> Result<PolarizationTensorField, EquivalenceError> {
    let mut tensors = vec![Matrix4::zeros(); wave.ray.len()];
    for h in [Helicity::Plus, Helicity::Minus] {
        let c = wave.amplitude(h);
        if c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let e = transport_polarization(metric, &wave.ray, wave.frame.vector(h))?;
        for (t, v) in tensors.iter_mut().zip(&e) {
            *t += factor_product(v, v, c, wave.kappa(h), wave.phi0);
        }
    }
    PolarizationTensorField::build(metric, &wave.ray, tensors, tolerance)
}

/// ‖a − b‖ / ‖a‖ in the static observer's orthonormal components at metric
/// `g`, with the denominator floored at 1e−300.
pub fn relative_deviation(g: &Matrix4<f64>, a: &Matrix4<Complex64>, b: &Matrix4<Complex64>) -> f64 {
    observer_tensor_norm(g, &(a - b)) / observer_tensor_norm(g, a).max(1e-300)
}
