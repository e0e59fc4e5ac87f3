use std::f64::consts::TAU;
use std::fmt;
use std::path::PathBuf;

use nalgebra::{Matrix4, Vector2, Vector3, Vector4};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::format::{csv, data, human, KeyValues};
use super::{build_metric, build_ray, parse_scenario, transport_controls, CheckSpec, RaySpec, Scenario};
use crate::algebra::{
    equivalent_tensor_family, factorize_circular, symmetrized_product, AlgebraError, Helicity,
    PlaneWave, PolarizationTensor2D,
};
use crate::emulation::{
    coincidence_amplitude, compile_voxels, format_voxels, medium_ray_check,
    momentum_correlation_quality, scale_scenario, spdc_state, SpdcSourceSpec, VoxelAxes,
};
use crate::equivalence::{
    assemble_gw, decompose_helicity, helicity_frame, propagate_factored, relative_deviation,
    run_equivalence, EquivalenceRun,
};
use crate::spacetime::{
    curvature_length_scale, validity_ratio, Metric, SharedMetric, SpacetimeEvent, ValidityReport,
    Verdict,
};
use crate::transport::{
    check_tt_gauge, integrate_null_geodesic, parallel_transport_tensor, parallel_transport_vector,
    scattering_angle, Controls, NullRay, RayPath,
};

/// |c∓|/|c±| allowed at the end of a ray for a single-helicity input.
const NON_MIXING_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Propagate,
    EquivalenceCheck,
    Algebra,
    Medium,
    Scale,
    Source,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Propagate => "propagate",
            Subcommand::EquivalenceCheck => "equivalence-check",
            Subcommand::Algebra => "algebra",
            Subcommand::Medium => "medium",
            Subcommand::Scale => "scale",
            Subcommand::Source => "source",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Command-line overrides and context for a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Replaces the subcommand's primary tolerance.
    pub tolerance: Option<f64>,
    /// Integrates every ray with this many uniform steps.
    pub steps: Option<usize>,
    pub seed: u64,
    /// Directory that relative paths in the scenario refer to.
    pub base_dir: PathBuf,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            tolerance: None,
            steps: None,
            seed: 0,
            base_dir: PathBuf::from("."),
        }
    }
}

/// A pass/fail comparison of a measured value against a limit.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            passed: value <= limit,
        }
    }

    fn below(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            passed: value < limit,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} (limit {}) {}",
            self.name,
            human(self.value),
            human(self.limit),
            if self.passed { "PASS" } else { "FAIL" }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

/// Everything a subcommand produced, ready to be written by a single writer.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub subcommand: Subcommand,
    pub checks: Vec<Check>,
    pub files: Vec<OutputFile>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// 0 when every check passed, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() { 0 } else { 2 }
    }

    fn file(&mut self, name: impl Into<String>, contents: String) {
        self.files.push(OutputFile {
            name: name.into(),
            contents,
        });
    }
}

/// A failure inside one of the library modules, tagged with where it
/// happened.
#[derive(Debug, Clone, PartialEq)]
pub struct RunError {
    pub module: &'static str,
    pub operation: &'static str,
    pub message: String,
}

impl RunError {
    pub fn new(module: &'static str, operation: &'static str, e: impl fmt::Display) -> Self {
        Self {
            module,
            operation,
            message: e.to_string(),
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}::{}: {}", self.module, self.operation, self.message)
    }
}

impl std::error::Error for RunError {}

trait At<T> {
    fn at(self, module: &'static str, operation: &'static str) -> Result<T, RunError>;
}

impl<T, E: fmt::Display> At<T> for Result<T, E> {
    fn at(self, module: &'static str, operation: &'static str) -> Result<T, RunError> {
        self.map_err(|e| RunError::new(module, operation, e))
    }
}

const TRANSPORT: &str = "geodesic-transport";
const EQUIVALENCE: &str = "equivalence-engine";
const EMULATION: &str = "emulation-compiler";
const ALGEBRA: &str = "flat-wave-algebra";
const SPACETIME: &str = "spacetime-core";
const CLI: &str = "scenario-cli";

pub fn run(scenario: &Scenario, cmd: Subcommand, opts: &RunOptions) -> Result<RunReport, RunError> {
    let mut checks = scenario.checks.clone();
    if let Some(t) = opts.tolerance {
        if !(t > 0.0) {
            return Err(RunError::new(CLI, "run", format!("--tolerance must be positive, got {t}")));
        }
        let slot = match cmd {
            Subcommand::Propagate => &mut checks.null_residual,
            Subcommand::EquivalenceCheck => &mut checks.deviation,
            Subcommand::Algebra => &mut checks.identity,
            Subcommand::Medium => &mut checks.medium,
            Subcommand::Scale => &mut checks.invariance,
            Subcommand::Source => &mut checks.identity,
        };
        *slot = t;
    }
    if opts.steps == Some(0) {
        return Err(RunError::new(CLI, "run", "--steps must be at least 1"));
    }
    let mut report = RunReport {
        subcommand: cmd,
        checks: Vec::new(),
        files: Vec::new(),
    };
    match cmd {
        Subcommand::Propagate => propagate(scenario, &checks, opts, &mut report)?,
        Subcommand::EquivalenceCheck => equivalence(scenario, &checks, opts, &mut report)?,
        Subcommand::Algebra => algebra(scenario, &checks, opts, &mut report)?,
        Subcommand::Medium => medium(scenario, &checks, opts, &mut report)?,
        Subcommand::Scale => scale(scenario, &checks, opts, &mut report)?,
        Subcommand::Source => source(scenario, &checks, &mut report)?,
    }
    Ok(report)
}

fn header(kv: &mut KeyValues, scenario: &Scenario, cmd: Subcommand) {
    kv.section("run");
    kv.kv("subcommand", cmd);
    if let Some(t) = &scenario.title {
        kv.kv("title", t);
    }
    let m = &scenario.metric;
    kv.kv("metric", &m.name);
    kv.kv("chart", m.chart);
    kv.kv("rs", human(m.rs));
    kv.kv("metric_scale", human(m.scale));
}

fn summarize_checks(kv: &mut KeyValues, checks: &[Check]) {
    kv.section("checks");
    for c in checks {
        kv.kv(&c.name, format!("{} limit {} {}", human(c.value), human(c.limit), if c.passed { "PASS" } else { "FAIL" }));
    }
    kv.kv("all_passed", checks.iter().all(|c| c.passed));
}

fn ray_controls(scenario: &Scenario, l_end: f64, opts: &RunOptions) -> Controls {
    let mut c = transport_controls(&scenario.controls);
    if let Some(n) = opts.steps {
        c.step = l_end / n as f64;
    }
    c
}

fn trace(
    metric: &dyn Metric,
    spec: &RaySpec,
    controls: &Controls,
) -> Result<(NullRay, RayPath), RunError> {
    let ray = build_ray(spec, metric).at(TRANSPORT, "null_ray")?;
    let path = integrate_null_geodesic(metric, &ray, ray.l + spec.end(), controls)
        .at(TRANSPORT, "integrate_null_geodesic")?;
    Ok((ray, path))
}

fn ray_csv(path: &RayPath) -> String {
    csv(
        &["l", "x0", "x1", "x2", "x3", "p0", "p1", "p2", "p3", "null_residual"],
        path.samples().iter().map(|s| {
            let mut row = vec![data(s.l)];
            row.extend(s.x.iter().map(|v| data(*v)));
            row.extend(s.p.iter().map(|v| data(*v)));
            row.push(data(s.null_residual));
            row
        }),
    )
}

fn label(spec: &RaySpec, i: usize) -> String {
    spec.label.clone().unwrap_or_else(|| format!("ray{i}"))
}

/// Worst λ/L_γ over the samples of a path.
fn worst_validity(
    metric: &dyn Metric,
    path: &RayPath,
    wavelength: f64,
    threshold: f64,
) -> Result<ValidityReport, RunError> {
    let mut worst: Option<ValidityReport> = None;
    for s in path.samples() {
        let ev = SpacetimeEvent::from_vector(path.chart(), &s.x).at(SPACETIME, "validity_ratio")?;
        let r = validity_ratio(wavelength, metric, &ev, threshold).at(SPACETIME, "validity_ratio")?;
        if worst.is_none_or(|w| r.ratio > w.ratio) {
            worst = Some(r);
        }
    }
    worst.ok_or_else(|| RunError::new(TRANSPORT, "integrate_null_geodesic", "empty path"))
}

struct Conservation {
    norm: f64,
    transversality: f64,
    trace: f64,
    symmetry: f64,
    tensor_transversality: f64,
}

fn conj_norm(g: &Matrix4<f64>, v: &Vector4<Complex64>) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for m in 0..4 {
        for n in 0..4 {
            acc += v[m].conj() * v[n] * g[(m, n)];
        }
    }
    acc.re
}

fn tensor_norm(g: &Matrix4<f64>, b: &Matrix4<Complex64>) -> f64 {
    let gc = g.map(|v| Complex64::new(v, 0.0));
    let low = gc * b * gc;
    b.iter().zip(low.iter()).map(|(a, l)| a.conj() * l).sum::<Complex64>().norm()
}

/// Residuals of quantities parallel transport must conserve: the conjugate
/// norm and transversality of ê+, and the trace, symmetry and
/// transversality of a transported TT tensor.
fn conservation(
    metric: &dyn Metric,
    path: &RayPath,
    b0: &Matrix4<Complex64>,
) -> Result<Conservation, RunError> {
    let start = path.first().expect("non-empty path");
    let ev = SpacetimeEvent::from_vector(path.chart(), &start.x).at(SPACETIME, "event")?;
    let frame = helicity_frame(&start.p, metric, &ev).at(EQUIVALENCE, "helicity_frame")?;
    let e0 = frame.e_plus;
    let v = parallel_transport_vector(metric, path, &e0).at(TRANSPORT, "parallel_transport_vector")?;
    let b = parallel_transport_tensor(metric, path, b0).at(TRANSPORT, "parallel_transport_tensor")?;
    let n0 = conj_norm(&frame.metric, &e0);
    let t0 = tensor_norm(&frame.metric, b0);
    let mut out = Conservation {
        norm: 0.0,
        transversality: 0.0,
        trace: 0.0,
        symmetry: 0.0,
        tensor_transversality: 0.0,
    };
    for ((s, v), bt) in path.samples().iter().zip(&v.values).zip(&b.values) {
        let g = metric.components(&s.x).at(SPACETIME, "evaluate_metric")?;
        let p_low = g * s.p;
        let energy = p_low[0].abs() / g[(0, 0)].abs().sqrt();
        out.norm = out.norm.max((conj_norm(&g, v) - n0).abs() / n0.abs());
        let pv: Complex64 = (0..4).map(|m| v[m] * p_low[m]).sum();
        out.transversality = out.transversality.max(pv.norm() / energy);
        let trace: Complex64 = (0..4)
            .flat_map(|m| (0..4).map(move |n| (m, n)))
            .map(|(m, n)| bt[(m, n)] * g[(m, n)])
            .sum();
        out.trace = out.trace.max(trace.norm() / t0);
        out.symmetry = out.symmetry.max((bt - bt.transpose()).norm() / bt.norm());
        let ev = SpacetimeEvent::from_vector(path.chart(), &s.x).at(SPACETIME, "event")?;
        let gauge = check_tt_gauge(bt, &s.p, metric, &ev, 1.0);
        out.tensor_transversality = out.tensor_transversality.max(gauge.transversality_residual / t0.sqrt());
    }
    Ok(out)
}

fn initial_tensor(scenario: &Scenario, metric: &dyn Metric, ray: &NullRay) -> Result<Matrix4<Complex64>, RunError> {
    let frame = helicity_frame(&ray.momentum, metric, &ray.event).at(EQUIVALENCE, "helicity_frame")?;
    let (cp, cm) = scenario
        .wave
        .as_ref()
        .map_or((Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)), |w| (w.c_plus, w.c_minus));
    Ok(frame.circular_tensor(Helicity::Plus) * cp + frame.circular_tensor(Helicity::Minus) * cm)
}

struct PropagateOutcome {
    path: RayPath,
    deflection: f64,
    max_null: f64,
    validity: ValidityReport,
    conservation: Conservation,
}

fn propagate(
    scenario: &Scenario,
    checks: &CheckSpec,
    opts: &RunOptions,
    report: &mut RunReport,
) -> Result<(), RunError> {
    let metric = build_metric(&scenario.metric, &opts.base_dir)?;
    if scenario.rays.is_empty() {
        return Err(RunError::new(CLI, "propagate", "scenario has no [[rays]]"));
    }
    let outcomes: Vec<PropagateOutcome> = scenario
        .rays
        .par_iter()
        .map(|spec| {
            let m = metric.as_ref();
            let controls = ray_controls(scenario, spec.end(), opts);
            let (ray, path) = trace(m, spec, &controls)?;
            let deflection = scattering_angle(m, &path).at(TRANSPORT, "scattering_angle")?;
            let max_null = path.samples().iter().map(|s| s.null_residual).fold(0.0, f64::max);
            let validity = worst_validity(m, &path, TAU / spec.frequency, checks.validity_threshold)?;
            let b0 = initial_tensor(scenario, m, &ray)?;
            let conservation = conservation(m, &path, &b0)?;
            Ok(PropagateOutcome {
                path,
                deflection,
                max_null,
                validity,
                conservation,
            })
        })
        .collect::<Result<_, RunError>>()?;

    let mut kv = KeyValues::default();
    header(&mut kv, scenario, Subcommand::Propagate);
    kv.kv("integrator", format!("{:?}", scenario.controls.integrator).to_lowercase());
    kv.kv("rays", outcomes.len());
    for (i, (spec, o)) in scenario.rays.iter().zip(&outcomes).enumerate() {
        let name = label(spec, i);
        kv.section(&format!("ray {name}"));
        kv.kv("file", format!("ray_{i}.csv"));
        kv.kv("steps", o.path.steps().len());
        kv.kv("samples", o.path.len());
        kv.num("l_end", o.path.last().map_or(f64::NAN, |s| s.l));
        kv.num("deflection", o.deflection);
        kv.num("max_null_residual", o.max_null);
        kv.num("max_wavelength_over_curvature_length", o.validity.ratio);
        kv.num("min_curvature_length", o.validity.curvature_length);
        kv.kv("validity", o.validity.verdict);
        let c = &o.conservation;
        kv.num("norm_residual", c.norm);
        kv.num("transversality_residual", c.transversality);
        kv.num("trace_residual", c.trace);
        kv.num("symmetry_residual", c.symmetry);
        kv.num("tensor_transversality_residual", c.tensor_transversality);

        report.checks.push(Check::at_most(format!("{name}.null_residual"), o.max_null, checks.null_residual));
        for (what, v) in [
            ("norm", c.norm),
            ("transversality", c.transversality),
            ("trace", c.trace),
            ("symmetry", c.symmetry),
            ("tensor_transversality", c.tensor_transversality),
        ] {
            report.checks.push(Check::at_most(format!("{name}.{what}"), v, checks.transport));
        }
        report.checks.push(Check {
            name: format!("{name}.validity"),
            value: o.validity.ratio,
            limit: 10.0 * o.validity.threshold,
            passed: o.validity.verdict != Verdict::Fail,
        });
        report.file(format!("ray_{i}.csv"), ray_csv(&o.path));
    }
    summarize_checks(&mut kv, &report.checks);
    report.file("propagate_report.txt", kv.finish());
    Ok(())
}

/// A lensing ray with its own wave, as used by the equivalence check.
#[derive(Debug, Clone)]
struct EquivalenceCase {
    ray: RaySpec,
    c_plus: Complex64,
    c_minus: Complex64,
    kappa: f64,
    phi0: f64,
}

fn random_cases(scenario: &Scenario, n: usize, seed: u64) -> Vec<EquivalenceCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rs = if scenario.metric.rs > 0.0 { scenario.metric.rs } else { 1.0 } * scenario.metric.scale;
    let frequency = scenario.rays.first().map_or(1.0 / scenario.metric.scale, |r| r.frequency);
    (0..n)
        .map(|i| {
            let b = rng.random_range(5.0..100.0) * rs;
            let distance = 4.0 * b;
            let mut c = || Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let (mut c_plus, mut c_minus) = (c(), c());
            // cycle through pure +, pure − and mixed inputs
            match i % 3 {
                0 => c_minus = Complex64::new(0.0, 0.0),
                1 => c_plus = Complex64::new(0.0, 0.0),
                _ => {}
            }
            EquivalenceCase {
                ray: RaySpec {
                    label: Some(format!("random{i}")),
                    impact_parameter: Some(b),
                    distance: Some(distance),
                    position: None,
                    direction: None,
                    frequency,
                    l_end: None,
                },
                c_plus,
                c_minus,
                kappa: rng.random_range(0.05..0.95),
                phi0: rng.random_range(0.0..TAU),
            }
        })
        .collect()
}

struct EquivalenceOutcome {
    run: EquivalenceRun,
    kappa_independence: f64,
    non_mixing: Option<f64>,
}

fn equivalence_case(
    metric: &dyn Metric,
    case: &EquivalenceCase,
    controls: &Controls,
    gauge_tolerance: f64,
) -> Result<EquivalenceOutcome, RunError> {
    let (_, path) = trace(metric, &case.ray, controls)?;
    let run = run_equivalence(metric, &path, case.c_plus, case.c_minus, case.kappa, case.phi0, gauge_tolerance)
        .at(EQUIVALENCE, "run_equivalence")?;

    let start = path.first().expect("non-empty path");
    let ev = SpacetimeEvent::from_vector(path.chart(), &start.x).at(SPACETIME, "event")?;
    let frame = helicity_frame(&start.p, metric, &ev).at(EQUIVALENCE, "helicity_frame")?;
    let alt = if case.kappa == 0.5 { 0.3 } else { 1.0 - case.kappa };
    let wave = assemble_gw(case.c_plus, case.c_minus, frame, case.phi0, alt, alt, &path)
        .at(EQUIVALENCE, "assemble_gw")?;
    let other = propagate_factored(&wave, metric, gauge_tolerance).at(EQUIVALENCE, "propagate_factored")?;
    let kappa_independence = run
        .factored
        .tensors
        .iter()
        .zip(&other.tensors)
        .zip(&other.metrics)
        .map(|((a, b), g)| relative_deviation(g, a, b))
        .fold(0.0, f64::max);

    let single = (case.c_plus.norm() == 0.0) != (case.c_minus.norm() == 0.0);
    let non_mixing = if single {
        let end = path.last().expect("non-empty path");
        let ev = SpacetimeEvent::from_vector(path.chart(), &end.x).at(SPACETIME, "event")?;
        let frame = helicity_frame(&end.p, metric, &ev).at(EQUIVALENCE, "helicity_frame")?;
        let a = decompose_helicity(run.direct.tensors.last().expect("non-empty"), &frame)
            .at(EQUIVALENCE, "decompose_helicity")?;
        let (kept, lost) = if case.c_plus.norm() > 0.0 { (a.plus, a.minus) } else { (a.minus, a.plus) };
        Some(lost.norm() / kept.norm())
    } else {
        None
    };
    Ok(EquivalenceOutcome {
        run,
        kappa_independence,
        non_mixing,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), data)
}

fn equivalence(
    scenario: &Scenario,
    checks: &CheckSpec,
    opts: &RunOptions,
    report: &mut RunReport,
) -> Result<(), RunError> {
    let wave = scenario
        .wave
        .as_ref()
        .ok_or_else(|| RunError::new(CLI, "equivalence-check", "scenario has no [wave] table"))?;
    let metric = build_metric(&scenario.metric, &opts.base_dir)?;
    let mut cases: Vec<EquivalenceCase> = scenario
        .rays
        .iter()
        .map(|r| EquivalenceCase {
            ray: r.clone(),
            c_plus: wave.c_plus,
            c_minus: wave.c_minus,
            kappa: wave.kappa,
            phi0: wave.phi0,
        })
        .collect();
    cases.extend(random_cases(scenario, wave.random_rays, opts.seed));
    if cases.is_empty() {
        return Err(RunError::new(CLI, "equivalence-check", "scenario has no [[rays]] and no random rays"));
    }
    let outcomes: Vec<EquivalenceOutcome> = cases
        .par_iter()
        .map(|case| {
            let controls = ray_controls(scenario, case.ray.end(), opts);
            equivalence_case(metric.as_ref(), case, &controls, checks.gauge)
        })
        .collect::<Result<_, RunError>>()?;

    let mut kv = KeyValues::default();
    header(&mut kv, scenario, Subcommand::EquivalenceCheck);
    kv.kv("rays", cases.len());
    kv.kv("random_rays", wave.random_rays);
    kv.kv("seed", opts.seed);
    for (i, (case, o)) in cases.iter().zip(&outcomes).enumerate() {
        let name = label(&case.ray, i);
        let r = &o.run.report;
        kv.section(&format!("ray {name}"));
        kv.kv("file", format!("equivalence_{i}.csv"));
        kv.num("impact_parameter", case.ray.impact_parameter.unwrap_or(f64::NAN));
        kv.kv("c_plus", format!("{} {}", human(case.c_plus.re), human(case.c_plus.im)));
        kv.kv("c_minus", format!("{} {}", human(case.c_minus.re), human(case.c_minus.im)));
        kv.num("kappa", case.kappa);
        kv.num("phi0", case.phi0);
        kv.kv("phase_helicity", o.run.helicity);
        kv.num("max_deviation", r.max_deviation);
        kv.num("mean_deviation", r.mean_deviation);
        kv.num("max_gauge_residual", r.max_gauge_residual);
        let doubling = r.max_doubling_residual.unwrap_or(f64::NAN);
        kv.num("max_phase_doubling_residual", doubling);
        kv.num("final_em_phase", *o.run.phases.em.last().expect("non-empty"));
        kv.num("final_gw_phase", *o.run.phases.gw.last().expect("non-empty"));
        kv.num("kappa_independence", o.kappa_independence);
        if let Some(nm) = o.non_mixing {
            kv.num("helicity_leakage", nm);
        }

        report.checks.push(Check::at_most(format!("{name}.deviation"), r.max_deviation, checks.deviation));
        report.checks.push(Check::at_most(format!("{name}.gauge"), r.max_gauge_residual, checks.gauge));
        report.checks.push(Check::at_most(format!("{name}.phase_doubling"), doubling, checks.phase));
        report.checks.push(Check::at_most(
            format!("{name}.kappa_independence"),
            o.kappa_independence,
            checks.identity,
        ));
        if let Some(nm) = o.non_mixing {
            report.checks.push(Check::below(format!("{name}.helicity_leakage"), nm, NON_MIXING_TOLERANCE));
        }
        if case.kappa == 0.5 {
            let ratio_error = r
                .phase_ratio
                .iter()
                .flatten()
                .map(|x| (x - 2.0).abs())
                .fold(0.0, f64::max);
            kv.num("max_phase_ratio_error", ratio_error);
            report.checks.push(Check::at_most(format!("{name}.phase_ratio"), ratio_error, checks.phase));
        }

        let rows = (0..r.l.len()).map(|k| {
            vec![
                data(r.l[k]),
                data(r.deviations[k]),
                data(o.run.phases.em[k]),
                data(o.run.phases.gw[k]),
                opt(r.phase_ratio.get(k).copied().flatten()),
                data(o.run.direct.gauge[k].max_residual()),
                data(o.run.factored.gauge[k].max_residual()),
            ]
        });
        report.file(
            format!("equivalence_{i}.csv"),
            csv(
                &["l", "deviation", "em_phase", "gw_phase", "phase_ratio", "gauge_direct", "gauge_factored"],
                rows,
            ),
        );
    }
    summarize_checks(&mut kv, &report.checks);
    report.file("equivalence_report.txt", kv.finish());
    Ok(())
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn algebra(
    scenario: &Scenario,
    checks: &CheckSpec,
    opts: &RunOptions,
    report: &mut RunReport,
) -> Result<(), RunError> {
    let spec = &scenario.algebra;
    let tol = checks.identity;
    let mut kv = KeyValues::default();
    header(&mut kv, scenario, Subcommand::Algebra);

    // factorization identities
    kv.section("factorization");
    for (name, sign) in [("s+im", 1.0), ("s-im", -1.0)] {
        let t = PolarizationTensor2D::circular(sign);
        let a = factorize_circular(&t).at(ALGEBRA, "factorize_circular")?;
        let err = (PolarizationTensor2D::outer(&a).0 - t.0).norm();
        let unit = Vector2::new(c(1.0, 0.0), c(0.0, sign));
        let ratio_err = (a * (c(1.0, 0.0) / a[0]) - unit).norm();
        kv.kv(name, format!("({}, {}) residual {}", cfmt(a[0]), cfmt(a[1]), human(err)));
        report.checks.push(Check::at_most(format!("factor.{name}"), err.max(ratio_err), tol));
    }
    for (name, t) in [("s", PolarizationTensor2D::plus()), ("m", PolarizationTensor2D::cross())] {
        let refused = matches!(factorize_circular(&t), Err(AlgebraError::NotFactorizable { .. }));
        kv.kv(name, if refused { "not factorizable" } else { "factorized" });
        report.checks.push(Check {
            name: format!("factor.{name}_refused"),
            value: if refused { 0.0 } else { 1.0 },
            limit: 0.0,
            passed: refused,
        });
    }

    // helicity sectors of parallel pairs
    let q = Vector3::z() * spec.frequency;
    let split = 0.3;
    let sectors = [(1, 1, 2), (-1, -1, -2), (1, -1, 0), (-1, 1, 0)];
    let mut rows = Vec::new();
    for (h1, h2, expect) in sectors {
        let w1 = PlaneWave::from_parts(q * split, h1).at(ALGEBRA, "plane_wave")?;
        let w2 = PlaneWave::from_parts(q * (1.0 - split), h2).at(ALGEBRA, "plane_wave")?;
        let st = symmetrized_product(w1, w2);
        let total = st.total_helicity().at(ALGEBRA, "total_helicity")?;
        let m2 = st.mass_squared();
        let name = format!("sector.{h1:+}{h2:+}");
        report.checks.push(Check {
            name: format!("{name}.helicity"),
            value: total.value as f64,
            limit: expect as f64,
            passed: total.value == expect,
        });
        report.checks.push(Check::at_most(format!("{name}.mass_squared"), m2.abs(), tol));
        rows.push(vec![
            format!("{h1:+}{h2:+}"),
            h1.to_string(),
            h2.to_string(),
            total.value.to_string(),
            total.gravitational_equivalent.to_string(),
            data(m2),
            opt(st.kappa),
            opt(st.alpha),
        ]);
    }
    report.file(
        "algebra.csv",
        csv(
            &["state", "h1", "h2", "total_helicity", "gravitational", "mass_squared", "kappa", "alpha"],
            rows,
        ),
    );

    // random non-parallel pairs are massive
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut largest = f64::NEG_INFINITY;
    for _ in 0..spec.random_pairs {
        let mut v = || Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let (p, k) = (v(), v());
        if p.cross(&k).norm() <= 1e-12 * p.norm() * k.norm() {
            continue;
        }
        let st = symmetrized_product(
            PlaneWave::new(p, Helicity::Plus).at(ALGEBRA, "plane_wave")?,
            PlaneWave::new(k, Helicity::Plus).at(ALGEBRA, "plane_wave")?,
        );
        largest = largest.max(st.mass_squared());
    }
    kv.section("random_pairs");
    kv.kv("count", spec.random_pairs);
    kv.kv("seed", opts.seed);
    kv.num("largest_mass_squared", largest);
    if spec.random_pairs > 0 {
        report.checks.push(Check::below("random_pairs.mass_squared", largest, 0.0));
    }

    // κ family
    let mut family = Vec::new();
    let qv = Vector3::new(0.3, -0.2, 1.1) * spec.frequency;
    // a few wavelengths from the origin, so phases stay O(1) at any frequency
    let events = [(0.0, 0.0), (0.5, 0.2), (-1.3, 2.7)].map(|(z, t)| (z / spec.frequency, t / spec.frequency));
    for lambda in [2, -2] {
        let reference = equivalent_tensor_family(&qv, lambda, 0.5).at(ALGEBRA, "equivalent_tensor_family")?;
        for &kappa in &spec.kappas {
            let st = equivalent_tensor_family(&qv, lambda, kappa).at(ALGEBRA, "equivalent_tensor_family")?;
            let p = st.four_momentum().at(ALGEBRA, "four_momentum")?;
            let target = Vector4::new(qv.norm(), qv.x, qv.y, qv.z);
            let p_err = (p - target).norm() / qv.norm();
            let total = st.total_helicity().at(ALGEBRA, "total_helicity")?;
            let m2 = st.mass_squared();
            let coinc = events
                .iter()
                .map(|&(z, t)| {
                    (coincidence_amplitude(&st, z, t) - coincidence_amplitude(&reference, z, t)).norm()
                })
                .fold(0.0, f64::max);
            let name = format!("family.{lambda:+}.k{kappa}");
            report.checks.push(Check::at_most(format!("{name}.momentum"), p_err, tol));
            report.checks.push(Check {
                name: format!("{name}.helicity"),
                value: total.value as f64,
                limit: lambda as f64,
                passed: total.value == lambda,
            });
            report.checks.push(Check::at_most(format!("{name}.mass_squared"), m2.abs(), tol));
            report.checks.push(Check::at_most(format!("{name}.coincidence"), coinc, tol));
            family.push(vec![
                lambda.to_string(),
                data(kappa),
                data(p[0]),
                data(p[1]),
                data(p[2]),
                data(p[3]),
                total.value.to_string(),
                data(m2),
                data(coinc),
            ]);
        }
    }
    report.file(
        "algebra_family.csv",
        csv(
            &["lambda_g", "kappa", "P0", "P1", "P2", "P3", "total_helicity", "mass_squared", "coincidence_deviation"],
            family,
        ),
    );
    summarize_checks(&mut kv, &report.checks);
    report.file("algebra_report.txt", kv.finish());
    Ok(())
}

fn cfmt(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{sign}{}i", human(z.re), human(z.im.abs()))
}

fn linspace(r: [f64; 2], n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (r[0] + r[1])];
    }
    (0..n)
        .map(|i| r[0] + (r[1] - r[0]) * i as f64 / (n - 1) as f64)
        .collect()
}

fn effective_rs(scenario: &Scenario) -> f64 {
    scenario.metric.rs * scenario.metric.scale
}

fn medium(
    scenario: &Scenario,
    checks: &CheckSpec,
    opts: &RunOptions,
    report: &mut RunReport,
) -> Result<(), RunError> {
    let spec = scenario
        .medium
        .as_ref()
        .ok_or_else(|| RunError::new(CLI, "medium", "scenario has no [medium] table"))?;
    let metric: SharedMetric = build_metric(&scenario.metric, &opts.base_dir)?;
    let axes = VoxelAxes {
        x: linspace(spec.x, spec.n[0]),
        y: linspace(spec.y, spec.n[1]),
        z: linspace(spec.z, spec.n[2]),
    };
    let voxels = compile_voxels(metric.as_ref(), &axes);
    let compiled: Vec<_> = voxels.iter().filter_map(|(_, c)| c.as_ref()).collect();
    let missing = voxels.len() - compiled.len();
    let mismatched = compiled.iter().filter(|c| c.epsilon != c.mu).count();
    let asymmetry = compiled
        .iter()
        .map(|c| (c.epsilon - c.epsilon.transpose()).abs().max())
        .fold(0.0, f64::max);

    let mut kv = KeyValues::default();
    header(&mut kv, scenario, Subcommand::Medium);
    kv.section("voxels");
    kv.kv("file", "medium.txt");
    kv.kv("count", voxels.len());
    kv.kv("without_medium", missing);
    kv.kv("impedance_mismatched", mismatched);
    kv.num("max_asymmetry", asymmetry);
    report.checks.push(Check::at_most("medium.impedance_mismatched", mismatched as f64, 0.0));
    report.checks.push(Check::at_most("medium.asymmetry", asymmetry, 0.0));

    let rs = effective_rs(scenario);
    if scenario.metric.name == "schwarzschild" && scenario.metric.chart == crate::spacetime::Chart::Isotropic {
        let mut worst = 0.0f64;
        for c in &compiled {
            let rho = c.position.norm();
            let q = rs / (4.0 * rho);
            let oracle = (1.0 + q).powi(3) / (1.0 - q);
            let n = c.isotropic_index().unwrap_or(f64::NAN);
            worst = worst.max((n - oracle).abs() / oracle);
        }
        kv.num("max_isotropic_index_error", worst);
        report.checks.push(Check::at_most("medium.isotropic_index", worst, 1e-10));
    }

    let rays: Vec<(usize, &RaySpec)> = scenario
        .rays
        .iter()
        .enumerate()
        .filter(|(_, r)| r.impact_parameter.is_some())
        .collect();
    let results: Vec<_> = rays
        .par_iter()
        .map(|(_, spec_ray)| {
            let m = metric.as_ref();
            let ray = build_ray(spec_ray, m).at(TRANSPORT, "null_ray")?;
            let controls = ray_controls(scenario, spec_ray.end(), opts);
            medium_ray_check(m, &ray, ray.l + spec_ray.end(), &controls, spec.ray_step)
                .at(EMULATION, "medium_ray_check")
        })
        .collect::<Result<_, RunError>>()?;
    for ((i, spec_ray), r) in rays.iter().zip(&results) {
        let name = label(spec_ray, *i);
        let b = spec_ray.impact_parameter.expect("filtered");
        kv.section(&format!("ray {name}"));
        kv.num("impact_parameter", b);
        kv.num("geodesic_deflection", r.geodesic_deflection);
        kv.num("medium_deflection", r.medium_deflection);
        kv.num("exit_angle", r.exit_angle);
        kv.num("relative_deviation", r.relative_deviation.unwrap_or(0.0));
        kv.kv("medium_steps", r.medium_steps);
        let weak = rs == 0.0 || b >= 50.0 * rs;
        kv.kv("regime", if weak { "weak-field" } else { "strong-field (reported only)" });
        if weak {
            report.checks.push(Check::below(
                format!("{name}.medium_deflection"),
                r.relative_deviation.unwrap_or(r.exit_angle),
                checks.medium,
            ));
        }
    }
    summarize_checks(&mut kv, &report.checks);
    report.file("medium.txt", format_voxels(metric.as_ref(), scenario.metric.scale, &voxels));
    report.file("medium_report.txt", kv.finish());
    Ok(())
}

/// Dimensionless observables of one ray: deflection, λ/L_γ at the start and,
/// with a wave, the final polarization phases.
fn observables(
    metric: &dyn Metric,
    scenario: &Scenario,
    spec: &RaySpec,
    opts: &RunOptions,
) -> Result<Vec<(&'static str, f64)>, RunError> {
    let controls = ray_controls(scenario, spec.end(), opts);
    let (ray, path) = trace(metric, spec, &controls)?;
    let deflection = scattering_angle(metric, &path).at(TRANSPORT, "scattering_angle")?;
    let l = curvature_length_scale(metric, &ray.event).at(SPACETIME, "curvature_length_scale")?;
    let mut out = vec![("deflection", deflection), ("validity_ratio", TAU / spec.frequency / l)];
    if let Some(w) = &scenario.wave {
        let run = run_equivalence(metric, &path, w.c_plus, w.c_minus, w.kappa, w.phi0, scenario.checks.gauge)
            .at(EQUIVALENCE, "run_equivalence")?;
        out.push(("em_phase", *run.phases.em.last().expect("non-empty")));
        out.push(("gw_phase", *run.phases.gw.last().expect("non-empty")));
        let ratio = run.report.phase_ratio.last().copied().flatten().unwrap_or(f64::NAN);
        out.push(("phase_ratio", ratio));
    }
    Ok(out)
}

fn scale(
    scenario: &Scenario,
    checks: &CheckSpec,
    opts: &RunOptions,
    report: &mut RunReport,
) -> Result<(), RunError> {
    let s = scenario.scale;
    let mut scaled = scale_scenario(scenario, s).at(EMULATION, "scale_scenario")?;
    scaled.scale = 1.0;
    let echo = scaled.to_toml();
    let reparsed = parse_scenario(&echo).at(CLI, "parse_scenario")?;

    let mut kv = KeyValues::default();
    header(&mut kv, scenario, Subcommand::Scale);
    kv.num("s", s);
    kv.kv("file", "scaled_scenario.toml");
    report.checks.push(Check {
        name: "echo.reparses_equal".into(),
        value: if reparsed == scaled { 0.0 } else { 1.0 },
        limit: 0.0,
        passed: reparsed == scaled,
    });
    if s == 1.0 {
        report.checks.push(Check {
            name: "echo.identity_at_unit_scale".into(),
            value: if scaled == *scenario { 0.0 } else { 1.0 },
            limit: 0.0,
            passed: scaled == *scenario,
        });
    }

    let original = build_metric(&scenario.metric, &opts.base_dir)?;
    let lab = build_metric(&scaled.metric, &opts.base_dir)?;
    let pairs: Vec<_> = scenario.rays.iter().zip(&scaled.rays).collect();
    let results: Vec<_> = pairs
        .par_iter()
        .map(|(a, b)| {
            let before = observables(original.as_ref(), scenario, a, opts)?;
            let after = observables(lab.as_ref(), &scaled, b, opts)?;
            Ok((before, after))
        })
        .collect::<Result<_, RunError>>()?;
    for (i, (spec, (before, after))) in scenario.rays.iter().zip(&results).enumerate() {
        let name = label(spec, i);
        kv.section(&format!("ray {name}"));
        for ((key, v0), (_, v1)) in before.iter().zip(after) {
            let rel = if *v0 == *v1 { 0.0 } else { (v1 - v0).abs() / v0.abs().max(f64::MIN_POSITIVE) };
            kv.kv(key, format!("{} -> {} (relative change {})", human(*v0), human(*v1), human(rel)));
            if v0.is_finite() {
                report.checks.push(Check::at_most(format!("{name}.{key}"), rel, checks.invariance));
            }
        }
    }
    summarize_checks(&mut kv, &report.checks);
    report.file("scaled_scenario.toml", echo);
    report.file("scale_report.txt", kv.finish());
    Ok(())
}

fn source(scenario: &Scenario, checks: &CheckSpec, report: &mut RunReport) -> Result<(), RunError> {
    let src = scenario
        .source
        .as_ref()
        .ok_or_else(|| RunError::new(CLI, "source", "scenario has no [source] table"))?;
    let spec = SpdcSourceSpec {
        pump_frequency: src.pump_frequency,
        kappa: src.kappa,
        crystal_length: src.crystal_length,
        pump_wavenumber: src.pump_wavenumber,
        pump_waist: src.pump_waist,
        amplitude_plus: src.amplitude_plus,
        amplitude_minus: src.amplitude_minus,
        degenerate_filter: src.degenerate_filter,
    };
    let dir = Vector3::from(src.direction);
    let state = spdc_state(&spec, &dir).at(EMULATION, "spdc_state")?;
    let (ws, wi) = spec.frequencies();
    let quality = momentum_correlation_quality(&spec, src.quality_threshold).at(EMULATION, "momentum_correlation_quality")?;

    let mut mirrored = spec;
    mirrored.kappa = 1.0 - spec.kappa;
    let other = spdc_state(&mirrored, &dir).at(EMULATION, "spdc_state")?;
    let mirror_dev = (state.polarization_tensor() - other.polarization_tensor()).norm();
    let axis = dir.normalize();
    let coincidence_dev = [(0.0, 0.0), (0.5, 0.2), (3.0, -1.0)]
        .iter()
        .map(|&(z, t)| (state.field_at(t, &(axis * z)) - other.field_at(t, &(axis * z))).norm())
        .fold(0.0, f64::max);

    let mut kv = KeyValues::default();
    header(&mut kv, scenario, Subcommand::Source);
    kv.section("source");
    kv.num("pump_frequency", spec.pump_frequency);
    kv.num("kappa", state.kappa);
    kv.kv("degenerate_filter", spec.degenerate_filter);
    kv.kv("signal_frequency", data(ws));
    kv.kv("idler_frequency", data(wi));
    kv.num("energy_mismatch", ws + wi - spec.pump_frequency);
    kv.section("pairs");
    for (amp, st) in &state.components {
        let total = st.total_helicity().at(ALGEBRA, "total_helicity")?;
        kv.kv(
            &format!("helicity{:+}", total.value),
            format!(
                "amplitude {} photons ({}, {}) at ({}, {}) mass_squared {}",
                cfmt(*amp),
                st.first.helicity,
                st.second.helicity,
                human(st.first.frequency()),
                human(st.second.frequency()),
                human(st.mass_squared())
            ),
        );
    }
    let t = state.polarization_tensor();
    kv.section("emulated_polarization_tensor");
    for i in 0..3 {
        kv.kv(&format!("row{i}"), (0..3).map(|j| cfmt(t[(i, j)])).collect::<Vec<_>>().join(" "));
    }
    kv.section("quality");
    kv.num("crystal_length_m", src.crystal_length * src.length_unit_m);
    kv.num("pump_wavenumber_per_m", src.pump_wavenumber / src.length_unit_m);
    kv.num("pump_waist_m", src.pump_waist * src.length_unit_m);
    kv.num("diffraction_scale_m", (src.crystal_length / src.pump_wavenumber).sqrt() * src.length_unit_m);
    kv.num("ratio", quality.ratio);
    kv.num("threshold", quality.threshold);
    kv.kv("verdict", if quality.good { "good" } else { "bad" });

    report.checks.push(Check::at_most("source.energy_conservation", (ws + wi - spec.pump_frequency).abs(), 0.0));
    report.checks.push(Check::below("source.quality_ratio", quality.ratio, quality.threshold));
    report.checks.push(Check::at_most("source.kappa_mirror", mirror_dev, checks.identity));
    report.checks.push(Check::at_most("source.coincidence_kappa", coincidence_dev, checks.identity));
    summarize_checks(&mut kv, &report.checks);
    report.file("source_report.txt", kv.finish());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat() -> Scenario {
        parse_scenario(
            r#"
[metric]
name = "minkowski"
chart = "cartesian"

[controls]
step = 0.01

[[rays]]
position = [0.0, 0.0, 0.0, 0.0]
direction = [0.0, 0.0, 1.0]
l_end = 2.0

[wave]
c_plus = [1.0, 0.0]
phi0 = 0.6

[algebra]
random_pairs = 50
"#,
        )
        .unwrap()
    }

    #[test]
    fn flat_equivalence_has_zero_deviation() {
        let r = run(&flat(), Subcommand::EquivalenceCheck, &RunOptions::default()).unwrap();
        assert!(r.passed(), "{:?}", r.checks);
        let dev = r.checks.iter().find(|c| c.name == "ray0.deviation").unwrap();
        assert!(dev.value < 1e-15, "{}", dev.value);
    }

    #[test]
    fn flat_propagate_and_algebra_pass() {
        for cmd in [Subcommand::Propagate, Subcommand::Algebra, Subcommand::Scale] {
            let r = run(&flat(), cmd, &RunOptions::default()).unwrap();
            assert!(r.passed(), "{cmd}: {:?}", r.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>());
        }
    }

    #[test]
    fn missing_section_is_an_error() {
        let e = run(&flat(), Subcommand::Source, &RunOptions::default()).unwrap_err();
        assert_eq!(e.module, "scenario-cli");
    }
}
