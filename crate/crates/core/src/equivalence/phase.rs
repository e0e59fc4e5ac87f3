use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;

use super::{
    decompose_helicity, helicity_frame, relative_deviation, EquivalenceError,
    PolarizationTensorField,
};
use crate::algebra::Helicity;
use crate::spacetime::{Metric, SpacetimeEvent};
use crate::transport::RayPath;

/// Electromagnetic phases smaller than this in magnitude leave the phase
/// ratio undefined.
pub const PHASE_EPSILON: f64 = 1e-6;

fn principal(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(TAU) - PI;
    if r == -PI { PI } else { r }
}

/// Accumulates successive differences of principal arguments onto `start`.
fn unwrap(start: f64, args: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out = Vec::new();
    let mut prev: Option<f64> = None;
    let mut acc = start;
    for a in args {
        if let Some(p) = prev {
            acc += principal(a - p);
        }
        out.push(acc);
        prev = Some(a);
    }
    out
}

/// Phase of a transported ê_h relative to the local helicity frame, starting
/// from κφ0.
///
/// `transported` holds the static-gauge vector at each sample of `path`.
pub fn em_phase_series(
    metric: &dyn Metric,
    path: &RayPath,
    transported: &[Vector4<Complex64>],
    h: Helicity,
    kappa: f64,
    phi0: f64,
) -> Result<Vec<f64>, EquivalenceError> {
    check_grid(path.len(), transported.len())?;
    let mut args = Vec::with_capacity(transported.len());
    for (s, v) in path.samples().iter().zip(transported) {
        let event = SpacetimeEvent::from_vector(path.chart(), &s.x)?;
        let frame = helicity_frame(&s.p, metric, &event)?;
        args.push(frame.overlap(h, v).arg());
    }
    Ok(unwrap(kappa * phi0, args.into_iter()))
}

/// Phase of the helicity-h amplitude of a transported B relative to its
/// initial value, starting from φ0.
pub fn gw_phase_series(
    metric: &dyn Metric,
    path: &RayPath,
    transported: &[Matrix4<Complex64>],
    h: Helicity,
    phi0: f64,
) -> Result<Vec<f64>, EquivalenceError> {
    check_grid(path.len(), transported.len())?;
    let mut amplitudes = Vec::with_capacity(transported.len());
    for (s, b) in path.samples().iter().zip(transported) {
        let event = SpacetimeEvent::from_vector(path.chart(), &s.x)?;
        let frame = helicity_frame(&s.p, metric, &event)?;
        amplitudes.push(decompose_helicity(b, &frame)?.get(h));
    }
    let c_in = amplitudes[0];
    Ok(unwrap(phi0, amplitudes.iter().map(|c| (c / c_in).arg())))
}

fn check_grid(a: usize, b: usize) -> Result<(), EquivalenceError> {
    if a != b || a == 0 {
        return Err(EquivalenceError::GridMismatch { a, b });
    }
    Ok(())
}

/// Unwrapped polarization phases of one helicity along a ray.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSeries {
    pub em: Vec<f64>,
    pub gw: Vec<f64>,
    pub kappa: f64,
    pub phi0: f64,
}

impl PhaseSeries {
    /// |(φ_gw − φ0) − 2(φ_em − κφ0)| at each sample.
    pub fn doubling_residuals(&self) -> Vec<f64> {
        self.em
            .iter()
            .zip(&self.gw)
            .map(|(e, g)| ((g - self.phi0) - 2.0 * (e - self.kappa * self.phi0)).abs())
            .collect()
    }

    /// φ_gw/φ_em where |φ_em| > PHASE_EPSILON.
    pub fn ratios(&self) -> Vec<Option<f64>> {
        self.em
            .iter()
            .zip(&self.gw)
            .map(|(e, g)| (e.abs() > PHASE_EPSILON).then(|| g / e))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub l: Vec<f64>,
    /// Observer-norm distance between direct and factored tensors, relative to the direct one, per sample.
    pub deviations: Vec<f64>,
    pub max_deviation: f64,
    pub mean_deviation: f64,
    pub phase_ratio: Vec<Option<f64>>,
    pub max_doubling_residual: Option<f64>,
    pub gauge_ok: bool,
    pub max_gauge_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

pub fn equivalence_report(
    direct: &PolarizationTensorField,
    factored: &PolarizationTensorField,
    phases: Option<&PhaseSeries>,
    tolerance: f64,
) -> Result<EquivalenceReport, EquivalenceError> {
    check_grid(direct.len(), factored.len())?;
    if direct.l != factored.l {
        return Err(EquivalenceError::GridMismatch {
            a: direct.len(),
            b: factored.len(),
        });
    }
    if let Some(ph) = phases {
        check_grid(direct.len(), ph.em.len())?;
        check_grid(direct.len(), ph.gw.len())?;
    }
    let deviations: Vec<f64> = direct
        .tensors
        .iter()
        .zip(&factored.tensors)
        .zip(&direct.metrics)
        .map(|((a, b), g)| relative_deviation(g, a, b))
        .collect();
    let max_deviation = deviations.iter().copied().fold(0.0, f64::max);
    let mean_deviation = deviations.iter().sum::<f64>() / deviations.len() as f64;
    let max_doubling_residual =
        phases.map(|ph| ph.doubling_residuals().into_iter().fold(0.0, f64::max));
    let phase_ratio = phases.map(PhaseSeries::ratios).unwrap_or_default();
    let gauge_ok = direct.gauge_ok() && factored.gauge_ok();
    let max_gauge_residual = direct.max_gauge_residual().max(factored.max_gauge_residual());
    let passed = max_deviation <= tolerance
        && max_doubling_residual.is_none_or(|r| r <= tolerance)
        && gauge_ok;
    Ok(EquivalenceReport {
        l: direct.l.clone(),
        deviations,
        max_deviation,
        mean_deviation,
        phase_ratio,
        max_doubling_residual,
        gauge_ok,
        max_gauge_residual,
        tolerance,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unwrap_follows_continuous_phase() {
        let truth: Vec<f64> = (0..50).map(|i| 0.3 + 0.4 * i as f64).collect();
        let wrapped = truth.iter().map(|&a| principal(a));
        let u = unwrap(0.3, wrapped);
        for (a, b) in u.iter().zip(&truth) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn principal_range() {
        assert_eq!(principal(PI), PI);
        assert_eq!(principal(-PI), PI);
        assert!((principal(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
    }
}
