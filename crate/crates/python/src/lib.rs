//! Python bindings for the gravem toolkit.
//!
//! Arrays cross the boundary as nested lists and complex amplitudes as Python
//! `complex`. Errors surface as `ValueError` carrying the core error message.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use gravem_core::algebra::{symmetrized_product, Helicity, PlaneWave};
use gravem_core::emulation::{plebanski_medium, spdc_state, SpdcSourceSpec};
use gravem_core::equivalence::run_equivalence;
use gravem_core::scenario::{load_scenario, run, RunOptions, Subcommand};
use gravem_core::spacetime::{builtin_metric, Chart, SharedMetric, SpacetimeEvent};
use gravem_core::transport::{
    integrate_null_geodesic, lensing_ray, scattering_angle, Controls, Integrator, RayPath,
};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn chart(name: &str) -> PyResult<Chart> {
    match name {
        "cartesian" => Ok(Chart::Cartesian),
        "schwarzschild" => Ok(Chart::Schwarzschild),
        "isotropic" => Ok(Chart::Isotropic),
        _ => Err(err(format!("unknown chart `{name}`"))),
    }
}

fn metric(name: &str, chart_name: Option<&str>, rs: f64) -> PyResult<SharedMetric> {
    let default = match name {
        "schwarzschild" => "schwarzschild",
        _ => "cartesian",
    };
    builtin_metric(name, chart(chart_name.unwrap_or(default))?, rs).map_err(err)
}

fn helicity(sign: i32) -> PyResult<Helicity> {
    match sign {
        1 => Ok(Helicity::Plus),
        -1 => Ok(Helicity::Minus),
        _ => Err(err(format!("helicity must be +1 or -1, got {sign}"))),
    }
}

fn rows(m: &Matrix3<f64>) -> Vec<Vec<f64>> {
    (0..3).map(|i| (0..3).map(|j| m[(i, j)]).collect()).collect()
}

fn trace_lensing_ray(
    m: &SharedMetric,
    b: f64,
    distance: f64,
    frequency: f64,
    step: f64,
    dp45: bool,
) -> PyResult<RayPath> {
    let ray = lensing_ray(m.as_ref(), b, distance, frequency).map_err(err)?;
    let controls = Controls {
        integrator: if dp45 { Integrator::Dp45 } else { Integrator::Rk4 },
        step,
        sample_every: 100,
        ..Controls::default()
    };
    integrate_null_geodesic(m.as_ref(), &ray, 2.0 * distance / frequency, &controls).map_err(err)
}

/// Scattering angle of a ray launched at (−distance, b, 0) along +x̂.
#[pyfunction]
#[pyo3(signature = (b, distance, rs=1.0, metric_name="schwarzschild", chart_name=None, frequency=1.0, step=1e-2, dp45=false))]
#[allow(clippy::too_many_arguments)]
fn deflection(
    b: f64,
    distance: f64,
    rs: f64,
    metric_name: &str,
    chart_name: Option<&str>,
    frequency: f64,
    step: f64,
    dp45: bool,
) -> PyResult<f64> {
    let m = metric(metric_name, chart_name, rs)?;
    let path = trace_lensing_ray(&m, b, distance, frequency, step, dp45)?;
    scattering_angle(m.as_ref(), &path).map_err(err)
}

/// Transport a gravitational wave directly and as a same-helicity photon pair
/// along a lensing ray and compare them.
#[pyfunction]
#[pyo3(signature = (b, distance, c_plus, c_minus, kappa=0.5, phi0=0.0, rs=1.0, metric_name="schwarzschild", frequency=100.0, step=1e-4, tolerance=1e-8))]
#[allow(clippy::too_many_arguments)]
fn equivalence_check<'py>(
    py: Python<'py>,
    b: f64,
    distance: f64,
    c_plus: Complex64,
    c_minus: Complex64,
    kappa: f64,
    phi0: f64,
    rs: f64,
    metric_name: &str,
    frequency: f64,
    step: f64,
    tolerance: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let m = metric(metric_name, None, rs)?;
    let path = trace_lensing_ray(&m, b, distance, frequency, step, false)?;
    let r = run_equivalence(m.as_ref(), &path, c_plus, c_minus, kappa, phi0, tolerance)
        .map_err(err)?
        .report;
    let d = PyDict::new(py);
    d.set_item("max_deviation", r.max_deviation)?;
    d.set_item("mean_deviation", r.mean_deviation)?;
    d.set_item("max_doubling_residual", r.max_doubling_residual)?;
    d.set_item("gauge_ok", r.gauge_ok)?;
    d.set_item("max_gauge_residual", r.max_gauge_residual)?;
    d.set_item("samples", r.l.len())?;
    d.set_item("passed", r.passed)?;
    Ok(d)
}

/// Invariant mass², κ and α of the symmetrized product of two photons with
/// momenta `p1`, `p2` and helicities ±1. κ and α are `None` off-collinear.
#[pyfunction]
fn two_photon_state(
    p1: [f64; 3],
    h1: i32,
    p2: [f64; 3],
    h2: i32,
) -> PyResult<(f64, Option<f64>, Option<f64>)> {
    let w1 = PlaneWave::new(Vector3::from(p1), helicity(h1)?).map_err(err)?;
    let w2 = PlaneWave::new(Vector3::from(p2), helicity(h2)?).map_err(err)?;
    let st = symmetrized_product(w1, w2);
    Ok((st.mass_squared(), st.kappa, st.alpha))
}

/// ε and μ (3×3, Cartesian lab frame) of the medium equivalent to the metric
/// at a Cartesian position.
#[pyfunction]
#[pyo3(signature = (position, rs=1.0, metric_name="schwarzschild", chart_name=None))]
fn medium(
    position: [f64; 3],
    rs: f64,
    metric_name: &str,
    chart_name: Option<&str>,
) -> PyResult<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let m = metric(metric_name, chart_name, rs)?;
    let c = m.chart();
    let event = SpacetimeEvent::from_vector(c, &c.from_cartesian_position(0.0, &Vector3::from(position)))
        .map_err(err)?;
    let t = plebanski_medium(m.as_ref(), &event).map_err(err)?;
    Ok((rows(&t.epsilon), rows(&t.mu)))
}

/// Signal/idler frequencies and helicity ±2 weights of an SPDC pair source.
#[pyfunction]
#[pyo3(signature = (pump_frequency, kappa, amplitude_plus, amplitude_minus, direction=[0.0, 0.0, 1.0], degenerate_filter=false))]
fn spdc<'py>(
    py: Python<'py>,
    pump_frequency: f64,
    kappa: f64,
    amplitude_plus: Complex64,
    amplitude_minus: Complex64,
    direction: [f64; 3],
    degenerate_filter: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = SpdcSourceSpec {
        pump_frequency,
        kappa,
        crystal_length: 1.0,
        pump_wavenumber: 1.0,
        pump_waist: 1.0,
        amplitude_plus,
        amplitude_minus,
        degenerate_filter,
    };
    let state = spdc_state(&spec, &Vector3::from(direction)).map_err(err)?;
    let (ws, wi) = spec.frequencies();
    let tensor = state.polarization_tensor();
    let d = PyDict::new(py);
    d.set_item("signal_frequency", ws)?;
    d.set_item("idler_frequency", wi)?;
    d.set_item(
        "polarization_tensor",
        (0..3)
            .map(|i| (0..3).map(|j| tensor[(i, j)]).collect::<Vec<Complex64>>())
            .collect::<Vec<_>>(),
    )?;
    Ok(d)
}

/// Run a scenario file as the CLI would, without writing output files.
/// Returns `(exit_code, [(check, value, limit, passed), ...])`.
#[pyfunction]
#[pyo3(signature = (config, subcommand, tolerance=None, steps=None, seed=0))]
fn run_scenario(
    config: &str,
    subcommand: &str,
    tolerance: Option<f64>,
    steps: Option<usize>,
    seed: u64,
) -> PyResult<(i32, Vec<(String, f64, f64, bool)>)> {
    let cmd = match subcommand {
        "propagate" => Subcommand::Propagate,
        "equivalence-check" => Subcommand::EquivalenceCheck,
        "algebra" => Subcommand::Algebra,
        "medium" => Subcommand::Medium,
        "scale" => Subcommand::Scale,
        "source" => Subcommand::Source,
        _ => return Err(err(format!("unknown subcommand `{subcommand}`"))),
    };
    let path = Path::new(config);
    let scenario = load_scenario(path).map_err(err)?;
    let opts = RunOptions {
        tolerance,
        steps,
        seed,
        base_dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    let report = run(&scenario, cmd, &opts).map_err(err)?;
    let checks = report
        .checks
        .iter()
        .map(|c| (c.name.clone(), c.value, c.limit, c.passed))
        .collect();
    Ok((report.exit_code(), checks))
}

#[pymodule]
fn gravem(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(deflection, m)?)?;
    m.add_function(wrap_pyfunction!(equivalence_check, m)?)?;
    m.add_function(wrap_pyfunction!(two_photon_state, m)?)?;
    m.add_function(wrap_pyfunction!(medium, m)?)?;
    m.add_function(wrap_pyfunction!(spdc, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
