use nalgebra::Matrix4;

use super::EmulationError;
use crate::spacetime::{
    Chart, Christoffel, Coords, GeometryError, Metric, SharedMetric, SpacetimeEvent,
};

/// A constant rescaling x̄ = s·x of every length coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConformalScale(f64);

impl ConformalScale {
    pub fn new(s: f64) -> Result<Self, EmulationError> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(EmulationError::NonPositiveScale(s));
        }
        Ok(Self(s))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn then(self, other: ConformalScale) -> ConformalScale {
        ConformalScale(self.0 * other.0)
    }

    /// s^(number of length indices)
    fn weight(self, mask: &[bool; 4], indices: &[usize]) -> f64 {
        let n = indices.iter().filter(|&&i| mask[i]).count() as i32;
        self.0.powi(n)
    }

    /// x̄ ↦ x̄/s on the length coordinates.
    fn unscale(self, chart: Chart, x: &Coords) -> Coords {
        let mask = chart.length_mask();
        Coords::from_fn(|i, _| if mask[i] { x[i] / self.0 } else { x[i] })
    }

    pub fn scale_coords(self, chart: Chart, x: &Coords) -> Coords {
        let mask = chart.length_mask();
        Coords::from_fn(|i, _| if mask[i] { x[i] * self.0 } else { x[i] })
    }
}

/// The background with all lengths multiplied by s.
///
/// Components are γ̄_μν(x̄) = s² · s^(−n_μν) γ_μν(x̄/s), where n_μν counts the
/// length coordinates among μ, ν. In a chart whose coordinates are all
/// lengths this is γ_μν(x̄/s), which differs from s⁻²γ_μν(x̄/s) only by the
/// constant factor s². Null geodesics, parallel transport and polarization
/// are blind to that factor; proper lengths and curvature are those of the
/// scaled system, so L_γ scales by s.
#[derive(Debug, Clone)]
pub struct ScaledMetric {
    inner: SharedMetric,
    scale: ConformalScale,
}

impl ScaledMetric {
    pub fn inner(&self) -> &SharedMetric {
        &self.inner
    }

    pub fn scale(&self) -> ConformalScale {
        self.scale
    }
}

pub fn conformal_scale_metric(metric: SharedMetric, s: f64) -> Result<ScaledMetric, EmulationError> {
    Ok(ScaledMetric {
        inner: metric,
        scale: ConformalScale::new(s)?,
    })
}

impl Metric for ScaledMetric {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn chart(&self) -> Chart {
        self.inner.chart()
    }

    fn parameters(&self) -> Vec<(String, f64)> {
        let mut p = self.inner.parameters();
        p.push(("s".into(), self.scale.value()));
        p
    }

    fn components(&self, x: &Coords) -> Result<Matrix4<f64>, GeometryError> {
        let chart = self.chart();
        let mask = chart.length_mask();
        let g = self.inner.components(&self.scale.unscale(chart, x))?;
        let s2 = self.scale.value() * self.scale.value();
        Ok(Matrix4::from_fn(|m, n| {
            g[(m, n)] * s2 / self.scale.weight(&mask, &[m, n])
        }))
    }

    fn christoffel_at(&self, x: &Coords) -> Result<Christoffel, GeometryError> {
        let chart = self.chart();
        let mask = chart.length_mask();
        let inner = self.inner.christoffel_at(&self.scale.unscale(chart, x))?;
        let mut out = Christoffel::zero();
        for m in 0..4 {
            for a in 0..4 {
                for b in 0..4 {
                    out.0[m][a][b] = inner.0[m][a][b] * self.scale.weight(&mask, &[m])
                        / self.scale.weight(&mask, &[a, b]);
                }
            }
        }
        Ok(out)
    }

    fn kretschmann_at(&self, x: &Coords) -> Result<f64, GeometryError> {
        let k = self.inner.kretschmann_at(&self.scale.unscale(self.chart(), x))?;
        Ok(k / self.scale.value().powi(4))
    }
}

/// An electromagnetic field strength F_μν at an event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub event: SpacetimeEvent,
    pub f: Matrix4<f64>,
}

impl FieldSample {
    pub fn new(event: SpacetimeEvent, f: Matrix4<f64>) -> Result<Self, EmulationError> {
        if f != -f.transpose() {
            return Err(EmulationError::NonAntisymmetricField);
        }
        Ok(Self { event, f })
    }
}

/// F̄_μν(x̄) = s^(−n_μν) F_μν(x̄/s): the field carried to the scaled event,
/// s⁻² F in an all-length chart.
pub fn conformal_scale_field(field: &FieldSample, s: f64) -> Result<FieldSample, EmulationError> {
    let scale = ConformalScale::new(s)?;
    let chart = field.event.chart;
    let mask = chart.length_mask();
    let f = Matrix4::from_fn(|m, n| field.f[(m, n)] / scale.weight(&mask, &[m, n]));
    let x = scale.scale_coords(chart, &field.event.vector());
    Ok(FieldSample {
        event: SpacetimeEvent::from_vector(chart, &x)?,
        f,
    })
}
