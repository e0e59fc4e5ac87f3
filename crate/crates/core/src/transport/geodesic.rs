use nalgebra::{Matrix4, Vector3, Vector4};

use super::ode::{dp45_step, rk4_step};
use super::{solve_time_component, Controls, Integrator, NullRay, TransportError, NULL_TOLERANCE};
use crate::spacetime::{
    real_bilinear, Chart, Christoffel, GeometryError, LocalFrame, Metric, SpacetimeEvent,
};

/// |γ_00| below which a stalled ray is treated as having reached a horizon.
const HORIZON_G00: f64 = 1e-6;

/// One recorded point of a ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaySample {
    pub l: f64,
    pub x: Vector4<f64>,
    pub p: Vector4<f64>,
    /// |γ p p| divided by the squared energy seen by the static observer.
    pub null_residual: f64,
}

/// A sampled null geodesic together with the exact step sequence that
/// produced it, so that transported quantities can be integrated in lockstep.
#[derive(Debug, Clone, PartialEq)]
pub struct RayPath {
    chart: Chart,
    metric_name: String,
    integrator: Integrator,
    project_every: Option<usize>,
    steps: Vec<f64>,
    sample_steps: Vec<usize>,
    samples: Vec<RaySample>,
}

impl RayPath {
    pub fn samples(&self) -> &[RaySample] {
        &self.samples
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    /// Number of completed steps at each sample.
    pub fn sample_steps(&self) -> &[usize] {
        &self.sample_steps
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    pub fn metric_name(&self) -> &str {
        &self.metric_name
    }

    pub fn integrator(&self) -> Integrator {
        self.integrator
    }

    pub fn first(&self) -> Option<&RaySample> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&RaySample> {
        self.samples.last()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// The ray at sample `i`, as an event-tagged [`NullRay`].
    pub fn ray_at(&self, i: usize) -> Result<NullRay, TransportError> {
        let s = self.samples.get(i).ok_or(TransportError::EmptyPath)?;
        Ok(NullRay {
            event: SpacetimeEvent::from_vector(self.chart, &s.x)?,
            momentum: s.p,
            l: s.l,
        })
    }
}

/// Fills dx/dl = p and dp/dl = −Γ(p, p) into `dy[..8]` and returns Γ.
pub(crate) fn geodesic_rhs(
    metric: &dyn Metric,
    y: &[f64],
    dy: &mut [f64],
) -> Result<Christoffel, GeometryError> {
    let x = Vector4::new(y[0], y[1], y[2], y[3]);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(GeometryError::NonFiniteCoordinates([y[0], y[1], y[2], y[3]]));
    }
    let gamma = metric.christoffel_at(&x)?;
    let p = &y[4..8];
    for mu in 0..4 {
        dy[mu] = p[mu];
        let mut acc = 0.0;
        for a in 0..4 {
            let mut row = 0.0;
            for b in 0..4 {
                row += gamma.get(mu, a, b) * p[b];
            }
            acc += row * p[a];
        }
        dy[4 + mu] = -acc;
    }
    Ok(gamma)
}

pub(crate) fn relative_null_residual(g: &Matrix4<f64>, p: &Vector4<f64>) -> f64 {
    let gpp = real_bilinear(g, p, p).abs();
    let g00 = g[(0, 0)];
    let energy2 = if g00 > 0.0 {
        let e: f64 = (0..4).map(|nu| g[(0, nu)] * p[nu]).sum();
        e * e / g00
    } else {
        p[0] * p[0]
    };
    gpp / energy2
}

fn project_null(metric: &dyn Metric, y: &mut [f64]) -> Result<(), GeometryError> {
    let x = Vector4::new(y[0], y[1], y[2], y[3]);
    let g = metric.components(&x)?;
    let p = Vector4::new(y[4], y[5], y[6], y[7]);
    let p0 = solve_time_component(&g, &p, y[4].signum())
        .ok_or(GeometryError::NoStaticObserver { g00: g[(0, 0)] })?;
    y[4] = p0;
    Ok(())
}

fn sample(metric: &dyn Metric, l: f64, y: &[f64]) -> Result<RaySample, GeometryError> {
    let x = Vector4::new(y[0], y[1], y[2], y[3]);
    let p = Vector4::new(y[4], y[5], y[6], y[7]);
    let g = metric.components(&x)?;
    Ok(RaySample {
        l,
        x,
        p,
        null_residual: relative_null_residual(&g, &p),
    })
}

/// Integrates dx^μ/dl = p^μ, dp^μ/dl = −Γ^μ_αβ p^α p^β from `initial` to
/// `l_end`.
///
/// RK4 takes `ceil((l_end − l0)/step)` equal steps. DP45 adapts the step to
/// keep the local error of x and p below `atol + rtol·|y|`.
pub fn integrate_null_geodesic(
    metric: &dyn Metric,
    initial: &NullRay,
    l_end: f64,
    controls: &Controls,
) -> Result<RayPath, TransportError> {
    controls.validate()?;
    if initial.event.chart != metric.chart() {
        return Err(GeometryError::ChartMismatch {
            expected: metric.chart(),
            found: initial.event.chart,
        }
        .into());
    }
    if !(l_end > initial.l) {
        return Err(TransportError::InvalidEndpoint {
            l0: initial.l,
            l_end,
        });
    }
    let mut y: Vec<f64> = initial.event.coords.iter().chain(initial.momentum.iter()).copied().collect();
    if controls.project_every.is_some() {
        project_null(metric, &mut y)?;
    }
    {
        let x = initial.event.vector();
        let g = metric.components(&x)?;
        let p = Vector4::new(y[4], y[5], y[6], y[7]);
        let r = real_bilinear(&g, &p, &p).abs() / (p[0] * p[0]);
        if !(r <= NULL_TOLERANCE) {
            return Err(TransportError::NonNullInitialMomentum(r));
        }
    }

    let mut path = RayPath {
        chart: metric.chart(),
        metric_name: metric.name().to_string(),
        integrator: controls.integrator,
        project_every: controls.project_every,
        steps: Vec::new(),
        sample_steps: vec![0],
        samples: vec![sample(metric, initial.l, &y)?],
    };
    let mut rhs = |y: &[f64], dy: &mut [f64]| geodesic_rhs(metric, y, dy).map(|_| ());
    let mut l = initial.l;
    let span = l_end - initial.l;

    match controls.integrator {
        Integrator::Rk4 => {
            let n = ((span / controls.step) - 1e-9).ceil().max(1.0) as usize;
            if n > controls.max_steps {
                return Err(TransportError::StepLimitExceeded(controls.max_steps));
            }
            let h = span / n as f64;
            for k in 1..=n {
                y = rk4_step(&mut rhs, &y, h)?;
                if let Some(every) = controls.project_every {
                    if k % every == 0 {
                        project_null(metric, &mut y)?;
                    }
                }
                l = if k == n { l_end } else { initial.l + h * k as f64 };
                path.steps.push(h);
                if k % controls.sample_every == 0 || k == n {
                    path.sample_steps.push(k);
                    path.samples.push(sample(metric, l, &y)?);
                }
            }
        }
        Integrator::Dp45 => {
            let mut h = controls.step.min(span);
            let mut k = 0usize;
            let mut last_failure: Option<GeometryError> = None;
            while l < l_end {
                if k >= controls.max_steps {
                    return Err(TransportError::StepLimitExceeded(controls.max_steps));
                }
                let remaining = l_end - l;
                let final_step = h >= remaining;
                let h_try = if final_step { remaining } else { h };
                let h_min = 1e-14 * l.abs().max(span);
                if h_try < h_min {
                    return Err(match last_failure {
                        Some(e) => e.into(),
                        None => stalled(metric, &y, l, h_try),
                    });
                }
                match dp45_step(&mut rhs, &y, h_try) {
                    Err(e) => {
                        last_failure = Some(e);
                        h = 0.25 * h_try;
                    }
                    Ok((y_new, err)) => {
                        let mut norm = 0.0f64;
                        for i in 0..8 {
                            let scale = controls.atol + controls.rtol * y[i].abs().max(y_new[i].abs());
                            norm = norm.max(err[i].abs() / scale);
                        }
                        if !norm.is_finite() {
                            h = 0.25 * h_try;
                            continue;
                        }
                        let factor = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
                        if norm <= 1.0 {
                            y = y_new;
                            k += 1;
                            if let Some(every) = controls.project_every {
                                if k % every == 0 {
                                    project_null(metric, &mut y)?;
                                }
                            }
                            l = if final_step { l_end } else { l + h_try };
                            path.steps.push(h_try);
                            if k % controls.sample_every == 0 || l >= l_end {
                                path.sample_steps.push(k);
                                path.samples.push(sample(metric, l, &y)?);
                            }
                            last_failure = None;
                            h = h_try * factor;
                        } else {
                            h = h_try * factor.min(1.0);
                        }
                    }
                }
            }
        }
    }
    Ok(path)
}

/// Error for a stalled adaptive integration. A vanishing γ_00 means the ray
/// is running into a horizon, where the static chart ends.
fn stalled(metric: &dyn Metric, y: &[f64], l: f64, h: f64) -> TransportError {
    let x = Vector4::new(y[0], y[1], y[2], y[3]);
    match metric.components(&x) {
        Ok(g) if g[(0, 0)].abs() < HORIZON_G00 => GeometryError::OutsideChartDomain {
            metric: metric.name().to_string(),
            reason: format!("ray reaches a horizon at {:?} (γ_00 = {:e})", [y[0], y[1], y[2], y[3]], g[(0, 0)]),
        }
        .into(),
        Ok(_) => TransportError::StepSizeUnderflow { l, h },
        Err(e) => e.into(),
    }
}

/// Re-integrates the path's step sequence with an extra payload carried along.
///
/// `payload_rhs(A, v, dv)` receives A^μ_β = Γ^μ_αβ p^α at the stage point.
/// Returns the full state `(x, p, payload)` at each sample.
pub(crate) fn replay<F>(
    metric: &dyn Metric,
    path: &RayPath,
    payload0: &[f64],
    mut payload_rhs: F,
) -> Result<Vec<Vec<f64>>, TransportError>
where
    F: FnMut(&Matrix4<f64>, &[f64], &mut [f64]),
{
    if path.chart != metric.chart() {
        return Err(TransportError::ChartMismatch {
            path: path.chart.to_string(),
            metric: metric.chart().to_string(),
        });
    }
    let first = path.samples.first().ok_or(TransportError::EmptyPath)?;
    let mut y: Vec<f64> = first.x.iter().chain(first.p.iter()).chain(payload0.iter()).copied().collect();
    if path.project_every.is_some() {
        project_null(metric, &mut y)?;
    }
    let mut rhs = |y: &[f64], dy: &mut [f64]| -> Result<(), GeometryError> {
        let gamma = geodesic_rhs(metric, y, dy)?;
        let p = Vector4::new(y[4], y[5], y[6], y[7]);
        let a = gamma.contract(&p);
        payload_rhs(&a, &y[8..], &mut dy[8..]);
        Ok(())
    };
    let mut out = Vec::with_capacity(path.samples.len());
    out.push(y.clone());
    let mut next_sample = 1;
    for (i, &h) in path.steps.iter().enumerate() {
        let k = i + 1;
        y = match path.integrator {
            Integrator::Rk4 => rk4_step(&mut rhs, &y, h)?,
            Integrator::Dp45 => dp45_step(&mut rhs, &y, h)?.0,
        };
        if let Some(every) = path.project_every {
            if k % every == 0 {
                project_null(metric, &mut y)?;
            }
        }
        if next_sample < path.sample_steps.len() && path.sample_steps[next_sample] == k {
            out.push(y.clone());
            next_sample += 1;
        }
    }
    Ok(out)
}

/// Unit propagation direction of `p` on the static observer's
/// Cartesian-oriented axes.
pub fn frame_direction(
    metric: &dyn Metric,
    x: &Vector4<f64>,
    p: &Vector4<f64>,
) -> Result<Vector3<f64>, GeometryError> {
    let frame = LocalFrame::at(metric, x)?;
    let d = frame.spatial_components(p);
    Ok(d / d.norm())
}

/// Angle between the propagation directions at the first and last samples.
pub fn scattering_angle(metric: &dyn Metric, path: &RayPath) -> Result<f64, TransportError> {
    let (a, b) = match (path.first(), path.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(TransportError::EmptyPath),
    };
    let d0 = frame_direction(metric, &a.x, &a.p)?;
    let d1 = frame_direction(metric, &b.x, &b.p)?;
    Ok(d0.cross(&d1).norm().atan2(d0.dot(&d1)))
}

/// A ray starting at Cartesian position (−distance, b, 0), heading along +x̂
/// with static-observer frequency `frequency`.
pub fn lensing_ray(
    metric: &dyn Metric,
    impact_parameter: f64,
    distance: f64,
    frequency: f64,
) -> Result<NullRay, TransportError> {
    let chart = metric.chart();
    let pos = Vector3::new(-distance, impact_parameter, 0.0);
    let x = chart.from_cartesian_position(0.0, &pos);
    let event = SpacetimeEvent::from_vector(chart, &x)?;
    NullRay::from_direction(metric, event, &Vector3::x(), frequency)
}
