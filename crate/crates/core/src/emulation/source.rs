use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use super::EmulationError;
use crate::algebra::{check_kappa, equivalent_tensor_family, TwoPhotonState};

pub const DEFAULT_QUALITY_THRESHOLD: f64 = 0.2;

/// Pump and crystal parameters of a down-conversion pair source.
///
/// `pump_frequency` is in inverse length (c = 1); `crystal_length`,
/// `pump_wavenumber` and `pump_waist` only enter through the dimensionless
/// ratio w0/√(S/k_p), so any consistent length unit works.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpdcSourceSpec {
    pub pump_frequency: f64,
    pub kappa: f64,
    pub crystal_length: f64,
    pub pump_wavenumber: f64,
    pub pump_waist: f64,
    /// Amplitude of the (+,+) pair, emulating helicity +2.
    pub amplitude_plus: Complex64,
    /// Amplitude of the (−,−) pair, emulating helicity −2.
    pub amplitude_minus: Complex64,
    /// Keep only frequency-degenerate pairs (κ = 1/2).
    pub degenerate_filter: bool,
}

impl SpdcSourceSpec {
    pub fn validate(&self) -> Result<(), EmulationError> {
        for (name, value) in [
            ("pump frequency", self.pump_frequency),
            ("crystal length", self.crystal_length),
            ("pump wavenumber", self.pump_wavenumber),
            ("pump waist", self.pump_waist),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(EmulationError::NonPositiveParameter { name, value });
            }
        }
        check_kappa(self.kappa)?;
        if self.amplitude_plus.norm() == 0.0 && self.amplitude_minus.norm() == 0.0 {
            return Err(EmulationError::EmptySource);
        }
        Ok(())
    }

    /// κ after the optional degenerate filter.
    pub fn effective_kappa(&self) -> f64 {
        if self.degenerate_filter { 0.5 } else { self.kappa }
    }

    /// (ω_s, ω_i) with ω_s + ω_i = ω_p exactly in floating point.
    ///
    /// The larger share is rounded; the smaller is the exact remainder.
    pub fn frequencies(&self) -> (f64, f64) {
        let k = self.effective_kappa();
        let wp = self.pump_frequency;
        if k >= 0.5 {
            let ws = k * wp;
            (ws, wp - ws)
        } else {
            let wi = (1.0 - k) * wp;
            (wp - wi, wi)
        }
    }
}

/// The emulated gravitational state: one pair per helicity with its
/// amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdcState {
    pub kappa: f64,
    pub components: Vec<(Complex64, TwoPhotonState)>,
}

impl SpdcState {
    /// Σ a_h ½(ê_h⊗ê_h + ê_h⊗ê_h): the emulated polarization tensor.
    pub fn polarization_tensor(&self) -> Matrix3<Complex64> {
        self.components
            .iter()
            .map(|(a, s)| s.polarization_tensor() * *a)
            .sum()
    }

    /// Σ a_h times the coincidence sample of each pair at (t, x).
    pub fn field_at(&self, t: f64, x: &Vector3<f64>) -> Matrix3<Complex64> {
        self.components.iter().map(|(a, s)| s.field_at(t, x) * *a).sum()
    }
}

/// Pairs with momenta κ ω_p q̂ and (1 − κ) ω_p q̂ for each helicity present.
pub fn spdc_state(spec: &SpdcSourceSpec, direction: &Vector3<f64>) -> Result<SpdcState, EmulationError> {
    spec.validate()?;
    let n = direction.norm();
    if !(n > 0.0) {
        return Err(EmulationError::NonPositiveParameter {
            name: "direction norm",
            value: n,
        });
    }
    let q = direction / n * spec.pump_frequency;
    let kappa = spec.effective_kappa();
    let mut components = Vec::new();
    for (amp, h) in [(spec.amplitude_plus, 2), (spec.amplitude_minus, -2)] {
        if amp.norm() > 0.0 {
            let mut state = equivalent_tensor_family(&q, h, kappa)?;
            let (ws, wi) = spec.frequencies();
            // pin the momenta to the exactly conserving frequency split
            state.first.momentum = direction / n * ws;
            state.second.momentum = direction / n * wi;
            components.push((amp, state));
        }
    }
    Ok(SpdcState { kappa, components })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationQuality {
    /// w0 / √(S/k_p)
    pub ratio: f64,
    pub threshold: f64,
    pub good: bool,
}

/// How closely the pair momenta are parallel: the pump waist against the
/// crystal's diffraction scale √(S/k_p).
pub fn momentum_correlation_quality(
    spec: &SpdcSourceSpec,
    threshold: f64,
) -> Result<CorrelationQuality, EmulationError> {
    for (name, value) in [
        ("crystal length", spec.crystal_length),
        ("pump wavenumber", spec.pump_wavenumber),
        ("pump waist", spec.pump_waist),
    ] {
        if !(value > 0.0) {
            return Err(EmulationError::NonPositiveParameter { name, value });
        }
    }
    let ratio = spec.pump_waist / (spec.crystal_length / spec.pump_wavenumber).sqrt();
    Ok(CorrelationQuality {
        ratio,
        threshold,
        good: ratio < threshold,
    })
}

/// ½(A₁⊗A₂ + A₂⊗A₁) with both factors at the same (z, t) on the state's
/// propagation axis.
pub fn coincidence_amplitude(state: &TwoPhotonState, z: f64, t: f64) -> Matrix3<Complex64> {
    let axis = (state.first.momentum + state.second.momentum).normalize();
    state.field_at(t, &(axis * z))
}
