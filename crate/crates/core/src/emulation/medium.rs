use std::fmt::Write as _;

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use rayon::prelude::*;

use super::EmulationError;
use crate::spacetime::{evaluate_metric, GeometryError, Metric, SpacetimeEvent};
use crate::transport::{integrate_null_geodesic, Controls, NullRay, RayPath};

/// Flat-space constitutive tensors equivalent to a stationary metric at one
/// point, on the Cartesian axes of the chart's flat embedding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstitutiveTensors {
    pub position: Vector3<f64>,
    pub epsilon: Matrix3<f64>,
    pub mu: Matrix3<f64>,
    pub w: Vector3<f64>,
}

impl ConstitutiveTensors {
    /// The scalar index n when ε = n·I to 1e−12 relative, else `None`.
    pub fn isotropic_index(&self) -> Option<f64> {
        let n = self.epsilon.trace() / 3.0;
        let spread = (self.epsilon - Matrix3::identity() * n).abs().max();
        (spread <= 1e-12 * n.abs()).then_some(n)
    }

    /// ε/det ε, the ray metric of an impedance-matched medium.
    fn ray_matrix(&self) -> Matrix3<f64> {
        self.epsilon / self.epsilon.determinant()
    }
}

/// γ_μν re-expressed on flat Cartesian embedding coordinates.
fn cartesian_components(metric: &dyn Metric, event: &SpacetimeEvent) -> Result<Matrix4<f64>, GeometryError> {
    let g = evaluate_metric(metric, event)?;
    let x = event.vector();
    let jac = event.chart.cartesian_jacobian(&x);
    let inv = jac
        .try_inverse()
        .ok_or(GeometryError::SingularMetric(event.coords))?;
    Ok(inv.transpose() * g * inv)
}

/// ε^ij = μ^ij = −√(−g) g^ij / g_00 and w_i = g_0i / g_00, evaluated after
/// transforming the metric to Cartesian embedding coordinates.
pub fn plebanski_medium(
    metric: &dyn Metric,
    event: &SpacetimeEvent,
) -> Result<ConstitutiveTensors, EmulationError> {
    let position = event.chart.cartesian_position(&event.vector());
    let g = cartesian_components(metric, event)?;
    let g00 = g[(0, 0)];
    if !(g00 > 0.0) {
        return Err(EmulationError::ErgoregionOrHorizon {
            g00,
            position: position.into(),
        });
    }
    let det = g.determinant();
    let inv = g
        .try_inverse()
        .ok_or(GeometryError::SingularMetric(event.coords))?;
    let root = (-det).sqrt();
    // upper triangle only, so ε is exactly symmetric; + 0.0 turns −0 into +0
    let epsilon = Matrix3::from_fn(|i, j| -root * inv[(i.min(j) + 1, i.max(j) + 1)] / g00 + 0.0);
    let w = Vector3::from_fn(|i, _| g[(0, i + 1)] / g00 + 0.0);
    Ok(ConstitutiveTensors {
        position,
        epsilon,
        mu: epsilon,
        w,
    })
}

fn medium_at(metric: &dyn Metric, pos: &Vector3<f64>) -> Result<ConstitutiveTensors, EmulationError> {
    let chart = metric.chart();
    let x = chart.from_cartesian_position(0.0, pos);
    plebanski_medium(metric, &SpacetimeEvent::from_vector(chart, &x)?)
}

/// Comparison between a null geodesic and the ray traced through the
/// compiled medium from the same start and initial direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumRayReport {
    /// Angle between initial and final coordinate velocities of the geodesic.
    pub geodesic_deflection: f64,
    pub medium_deflection: f64,
    /// Angle between the two exit directions.
    pub exit_angle: f64,
    /// |medium − geodesic| / geodesic deflection; `None` for an undeflected
    /// geodesic.
    pub relative_deviation: Option<f64>,
    pub medium_steps: usize,
}

fn angle(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Cartesian position and unit coordinate velocity of a path sample.
fn embedded(metric: &dyn Metric, x: &Vector4<f64>, p: &Vector4<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let chart = metric.chart();
    let v = chart.cartesian_jacobian(x) * p;
    let dir = Vector3::new(v[1], v[2], v[3]);
    (chart.cartesian_position(x), dir / dir.norm())
}

/// Rays of an impedance-matched medium follow H = ½(kᵀ M k − 1) with
/// M = ε/det ε; returns dX/dτ and dk/dτ.
fn medium_rhs(
    metric: &dyn Metric,
    x: &Vector3<f64>,
    k: &Vector3<f64>,
) -> Result<(Vector3<f64>, Vector3<f64>), EmulationError> {
    let c = medium_at(metric, x)?;
    if c.w.norm() > 0.0 {
        return Err(EmulationError::MediumRay(
            "magnetoelectric coupling w ≠ 0 is not modeled by the ray tracer".into(),
        ));
    }
    let m = c.ray_matrix();
    let r = x.norm();
    let delta = if r > 0.0 { 1e-6 * r } else { 1e-6 };
    let mut dk = Vector3::zeros();
    for i in 0..3 {
        let mut e = Vector3::zeros();
        e[i] = delta;
        let hi = medium_at(metric, &(x + e))?.ray_matrix();
        let lo = medium_at(metric, &(x - e))?.ray_matrix();
        let dm = (hi - lo) / (2.0 * delta);
        dk[i] = -0.5 * k.dot(&(dm * k));
    }
    Ok((m * k, dk))
}

/// Integrates the null geodesic from `ray` to `l_end`, traces the medium ray
/// with fixed RK4 step `medium_step` until it has advanced as far along the
/// initial direction as the geodesic did, and compares exit directions.
pub fn medium_ray_check(
    metric: &dyn Metric,
    ray: &NullRay,
    l_end: f64,
    controls: &Controls,
    medium_step: f64,
) -> Result<MediumRayReport, EmulationError> {
    if !(medium_step > 0.0) {
        return Err(EmulationError::NonPositiveParameter {
            name: "medium step",
            value: medium_step,
        });
    }
    let path: RayPath = integrate_null_geodesic(metric, ray, l_end, controls)?;
    let (first, last) = match (path.first(), path.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(crate::transport::TransportError::EmptyPath.into()),
    };
    let (x0, d0) = embedded(metric, &first.x, &first.p);
    let (x1, d1) = embedded(metric, &last.x, &last.p);
    let target = (x1 - x0).dot(&d0);

    let c0 = medium_at(metric, &x0)?;
    let m0 = c0.ray_matrix();
    let mut k = m0.try_inverse().ok_or_else(|| EmulationError::MediumRay("singular medium".into()))? * d0;
    k /= k.dot(&(m0 * k)).sqrt();

    let mut x = x0;
    let mut steps = 0usize;
    let limit = ((target / medium_step).abs() * 10.0) as usize + 1000;
    let h = medium_step;
    while (x - x0).dot(&d0) < target {
        if steps > limit {
            return Err(EmulationError::MediumRay(format!(
                "no progress after {steps} steps at {:?}",
                x.as_slice()
            )));
        }
        let (a1, b1) = medium_rhs(metric, &x, &k)?;
        let (a2, b2) = medium_rhs(metric, &(x + a1 * (h / 2.0)), &(k + b1 * (h / 2.0)))?;
        let (a3, b3) = medium_rhs(metric, &(x + a2 * (h / 2.0)), &(k + b2 * (h / 2.0)))?;
        let (a4, b4) = medium_rhs(metric, &(x + a3 * h), &(k + b3 * h))?;
        x += (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (h / 6.0);
        k += (b1 + b2 * 2.0 + b3 * 2.0 + b4) * (h / 6.0);
        steps += 1;
    }
    let v = medium_at(metric, &x)?.ray_matrix() * k;
    let dm = v / v.norm();
    let geodesic_deflection = angle(&d0, &d1);
    let medium_deflection = angle(&d0, &dm);
    Ok(MediumRayReport {
        geodesic_deflection,
        medium_deflection,
        exit_angle: angle(&d1, &dm),
        relative_deviation: (geodesic_deflection > 1e-15)
            .then(|| (medium_deflection - geodesic_deflection).abs() / geodesic_deflection),
        medium_steps: steps,
    })
}

/// Cartesian sample positions of a voxel export.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelAxes {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

/// Compiles the medium at every voxel of the grid, x outermost, z innermost.
///
/// Voxels without an equivalent medium (horizon, ergoregion or outside the
/// chart) are `None`.
pub fn compile_voxels(metric: &dyn Metric, axes: &VoxelAxes) -> Vec<(Vector3<f64>, Option<ConstitutiveTensors>)> {
    let mut points = Vec::with_capacity(axes.x.len() * axes.y.len() * axes.z.len());
    for &x in &axes.x {
        for &y in &axes.y {
            for &z in &axes.z {
                points.push(Vector3::new(x, y, z));
            }
        }
    }
    points
        .into_par_iter()
        .map(|p| {
            let c = medium_at(metric, &p).ok();
            (p, c)
        })
        .collect()
}

/// Voxel table: a header recording chart, scale and metric, then one row per
/// voxel with position, 6 ε, 6 μ and 3 w values. Missing media are written
/// as `nan` so the grid stays regular.
pub fn format_voxels(
    metric: &dyn Metric,
    s: f64,
    voxels: &[(Vector3<f64>, Option<ConstitutiveTensors>)],
) -> String {
    let params: Vec<String> = metric
        .parameters()
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect();
    let mut out = format!(
        "# chart={} s={} metric={} {}\n",
        metric.chart(),
        s,
        metric.name(),
        params.join(" ")
    );
    out.push_str(
        "x y z eps_xx eps_xy eps_xz eps_yy eps_yz eps_zz \
         mu_xx mu_xy mu_xz mu_yy mu_yz mu_zz w_x w_y w_z\n",
    );
    for (p, c) in voxels {
        let _ = write!(out, "{:.16e} {:.16e} {:.16e}", p.x, p.y, p.z);
        match c {
            Some(c) => {
                for m in [&c.epsilon, &c.mu] {
                    for (i, j) in PAIRS {
                        let _ = write!(out, " {:.16e}", m[(i, j)]);
                    }
                }
                for i in 0..3 {
                    let _ = write!(out, " {:.16e}", c.w[i]);
                }
            }
            None => out.push_str(&" nan".repeat(15)),
        }
        out.push('\n');
    }
    out
}

/// [`compile_voxels`] followed by [`format_voxels`]; also returns the number
/// of voxels without a medium.
pub fn export_medium_voxels(metric: &dyn Metric, s: f64, axes: &VoxelAxes) -> (String, usize) {
    let voxels = compile_voxels(metric, axes);
    let missing = voxels.iter().filter(|(_, c)| c.is_none()).count();
    (format_voxels(metric, s, &voxels), missing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spacetime::{Chart, IsotropicSchwarzschild, Minkowski, Schwarzschild};
    use crate::transport::lensing_ray;

    #[test]
    fn vacuum() {
        let ev = SpacetimeEvent::new(Chart::Cartesian, [0.0, 1.0, -2.0, 3.0]).unwrap();
        let c = plebanski_medium(&Minkowski, &ev).unwrap();
        assert_eq!(c.epsilon, Matrix3::identity());
        assert_eq!(c.mu, c.epsilon);
        assert_eq!(c.w, Vector3::zeros());
    }

    #[test]
    fn isotropic_index_oracle() {
        let m = IsotropicSchwarzschild::new(1.0).unwrap();
        for rho in [5.0, 10.0, 100.0] {
            let ev = SpacetimeEvent::new(Chart::Isotropic, [0.0, rho * 0.6, 0.0, rho * 0.8]).unwrap();
            let n = plebanski_medium(&m, &ev).unwrap().isotropic_index().unwrap();
            let q = 1.0 / (4.0 * rho);
            let oracle = (1.0 + q).powi(3) / (1.0 - q);
            assert!((n - oracle).abs() < 1e-10 * oracle, "{rho}: {n} {oracle}");
        }
    }

    #[test]
    fn spherical_chart_is_anisotropic_but_impedance_matched() {
        let m = Schwarzschild::new(1.0).unwrap();
        let ev = SpacetimeEvent::new(Chart::Schwarzschild, [0.0, 10.0, 1.0, 0.5]).unwrap();
        let c = plebanski_medium(&m, &ev).unwrap();
        assert_eq!(c.epsilon, c.mu);
        assert!(c.isotropic_index().is_none());
        assert!((c.epsilon - c.epsilon.transpose()).abs().max() < 1e-15);
        assert!(c.epsilon.symmetric_eigenvalues().iter().all(|&e| e > 0.0));
    }

    #[test]
    fn horizon_has_no_medium() {
        let m = Schwarzschild::new(1.0).unwrap();
        let (text, missing) = export_medium_voxels(
            &m,
            1.0,
            &VoxelAxes {
                x: vec![-0.5, 3.0],
                y: vec![0.25],
                z: vec![0.5],
            },
        );
        assert_eq!(missing, 1);
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("# chart=schwarzschild s=1 metric=schwarzschild rs=1"));
    }

    #[test]
    fn vacuum_ray_is_straight() {
        let ray = lensing_ray(&Minkowski, 3.0, 10.0, 1.0).unwrap();
        let r = medium_ray_check(&Minkowski, &ray, 20.0, &Controls::default(), 0.5).unwrap();
        assert_eq!(r.geodesic_deflection, 0.0);
        assert_eq!(r.medium_deflection, 0.0);
        assert!(r.relative_deviation.is_none());
    }
}
