use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;

use super::{RayPath, TransportError, TransportedVector};
use crate::spacetime::{evaluate_metric, real_bilinear, LocalFrame, Metric, SpacetimeEvent};

/// Residuals of the three transverse-traceless conditions, measured on the
/// static observer's orthonormal frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeReport {
    /// max_a |B^{0a}|
    pub spatial_residual: f64,
    /// |η_ab B^{ab}|
    pub trace_residual: f64,
    /// max_b |k_a B^{ab}| / k^0
    pub transversality_residual: f64,
    pub tolerance: f64,
    pub spatial_ok: bool,
    pub traceless_ok: bool,
    pub transverse_ok: bool,
}

impl GaugeReport {
    pub fn passed(&self) -> bool {
        self.spatial_ok && self.traceless_ok && self.transverse_ok
    }

    pub fn max_residual(&self) -> f64 {
        self.spatial_residual
            .max(self.trace_residual)
            .max(self.transversality_residual)
    }
}

/// Rows are the frame covectors θ^a, so that Θ v gives frame components.
fn coframe(frame: &LocalFrame) -> Matrix4<f64> {
    let g = &frame.metric;
    let mut theta = Matrix4::zeros();
    let u_low = g * frame.u;
    theta.set_row(0, &u_low.transpose());
    for a in 0..3 {
        let e_low = -(g * frame.axes[a]);
        theta.set_row(a + 1, &e_low.transpose());
    }
    theta
}

/// Checks B^μν against the TT conditions for momentum `p` at `event`.
///
/// Never fails: an event without a static observer yields NaN residuals and
/// failing verdicts.
pub fn check_tt_gauge(
    b: &Matrix4<Complex64>,
    p: &Vector4<f64>,
    metric: &dyn Metric,
    event: &SpacetimeEvent,
    tolerance: f64,
) -> GaugeReport {
    let residuals = evaluate_metric(metric, event)
        .and_then(|_| LocalFrame::at(metric, &event.vector()))
        .map(|frame| {
            let theta = coframe(&frame);
            let tc = theta.map(|v| Complex64::new(v, 0.0));
            let bf = tc * b * tc.transpose();
            let k = theta * p;
            let spatial = (0..4).map(|a| bf[(0, a)].norm()).fold(0.0, f64::max);
            let trace = (bf[(0, 0)] - bf[(1, 1)] - bf[(2, 2)] - bf[(3, 3)]).norm();
            let k_low = Vector4::new(k[0], -k[1], -k[2], -k[3]);
            let transverse = (0..4)
                .map(|col| {
                    let s: Complex64 = (0..4).map(|a| bf[(a, col)] * k_low[a]).sum();
                    s.norm()
                })
                .fold(0.0, f64::max)
                / k[0].abs();
            (spatial, trace, transverse)
        })
        .unwrap_or((f64::NAN, f64::NAN, f64::NAN));
    let (spatial_residual, trace_residual, transversality_residual) = residuals;
    GaugeReport {
        spatial_residual,
        trace_residual,
        transversality_residual,
        tolerance,
        spatial_ok: spatial_residual < tolerance,
        traceless_ok: trace_residual < tolerance,
        transverse_ok: transversality_residual < tolerance,
    }
}

/// P^μ_ν = δ^μ_ν − p^μ u_ν/(u·p) with u = ∂_t.
///
/// Removes the component along ∂_t that parallel transport generates in
/// curved charts, adding a multiple of p. Contractions with p and norms of
/// transverse vectors are unchanged.
fn static_projector(g: &Matrix4<f64>, p: &Vector4<f64>) -> Matrix4<f64> {
    let u_low = g.column(0).into_owned();
    let up = u_low.dot(p);
    Matrix4::identity() - p * u_low.transpose() / up
}

pub fn project_static_gauge_vector(
    v: &Vector4<Complex64>,
    p: &Vector4<f64>,
    g: &Matrix4<f64>,
) -> Vector4<Complex64> {
    let pr = static_projector(g, p).map(|x| Complex64::new(x, 0.0));
    pr * v
}

pub fn project_static_gauge_tensor(
    b: &Matrix4<Complex64>,
    p: &Vector4<f64>,
    g: &Matrix4<f64>,
) -> Matrix4<Complex64> {
    let pr = static_projector(g, p).map(|x| Complex64::new(x, 0.0));
    let out = pr * b * pr.transpose();
    // rounding leaves the product symmetric only to ~1 ulp
    (out + out.transpose()) * Complex64::from(0.5)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftSummary {
    pub max_null_residual: f64,
    pub mean_null_residual: f64,
    /// max |γ(p, v)| / E over samples, when a transported vector is supplied.
    pub max_transversality: Option<f64>,
}

/// Aggregates the per-sample null residuals of a path, and optionally the
/// transversality of a vector carried along it.
pub fn constraint_drift(
    path: &RayPath,
    transported: Option<(&dyn Metric, &TransportedVector)>,
) -> Result<DriftSummary, TransportError> {
    if path.is_empty() {
        return Err(TransportError::EmptyPath);
    }
    let n = path.len() as f64;
    let max_null_residual = path.samples().iter().map(|s| s.null_residual).fold(0.0, f64::max);
    let mean_null_residual = path.samples().iter().map(|s| s.null_residual).sum::<f64>() / n;
    let max_transversality = match transported {
        None => None,
        Some((metric, v)) => {
            let mut worst = 0.0f64;
            for (s, val) in path.samples().iter().zip(&v.values) {
                let g = metric.components(&s.x)?;
                let e = (g.column(0).dot(&s.p)).abs() / g[(0, 0)].abs().sqrt();
                let re = real_bilinear(&g, &s.p, &val.map(|c| c.re));
                let im = real_bilinear(&g, &s.p, &val.map(|c| c.im));
                worst = worst.max(re.hypot(im) / e);
            }
            Some(worst)
        }
    };
    Ok(DriftSummary {
        max_null_residual,
        mean_null_residual,
        max_transversality,
    })
}
