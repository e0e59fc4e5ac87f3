use super::{ConformalScale, EmulationError};
use crate::scenario::Scenario;

/// The scenario with every length multiplied by s.
///
/// Positions, impact parameters, distances and medium extents scale by s,
/// frequencies by 1/s. Null momenta then scale by 1/s, so the affine
/// parameter (`l_end`, the integrator step) scales by s². The absolute
/// integrator tolerance scales like a length. Wave amplitudes, phases,
/// split parameters, check tolerances and the source hardware are
/// dimensionless or lab quantities and are kept.
pub fn scale_scenario(scenario: &Scenario, s: f64) -> Result<Scenario, EmulationError> {
    let scale = ConformalScale::new(s)?;
    let mut out = scenario.clone();
    let s2 = s * s;
    out.metric.scale *= s;
    out.controls.step *= s2;
    out.controls.atol *= s;
    let chart = scenario.metric.chart;
    for r in &mut out.rays {
        r.impact_parameter = r.impact_parameter.map(|b| b * s);
        r.distance = r.distance.map(|d| d * s);
        r.position = r
            .position
            .map(|x| scale.scale_coords(chart, &x.into()).into());
        r.frequency /= s;
        r.l_end = r.l_end.map(|l| l * s2);
    }
    out.algebra.frequency /= s;
    if let Some(m) = &mut out.medium {
        for range in [&mut m.x, &mut m.y, &mut m.z] {
            range[0] *= s;
            range[1] *= s;
        }
        m.ray_step *= s;
    }
    Ok(out)
}
