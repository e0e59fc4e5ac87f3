//! One PASS/FAIL line per acceptance criterion.
//!
//! Exits non-zero when a criterion fails, except for sub-checks listed in
//! `KNOWN_UNATTAINABLE`, which are still printed as FAIL with their numbers.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{Matrix3, Vector2, Vector3, Vector4};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gravem_core::algebra::{
    equivalent_tensor_family, factorize_circular, symmetrized_product, AlgebraError, Helicity,
    PlaneWave, PolarizationTensor2D,
};
use gravem_core::emulation::{
    coincidence_amplitude, conformal_scale_metric, medium_ray_check, momentum_correlation_quality,
    plebanski_medium, scale_scenario, ConformalScale, SpdcSourceSpec,
};
use gravem_core::scenario::{load_scenario, run, RunOptions, Scenario, Subcommand};
use gravem_core::spacetime::{
    Chart, IsotropicSchwarzschild, Metric, Minkowski, Schwarzschild, SharedMetric, SpacetimeEvent,
};
use gravem_core::transport::{
    integrate_null_geodesic, lensing_ray, scattering_angle, Controls, Integrator, NullRay,
};

/// Criterion 4's "deflection within 1% of 2r_s/b": the second-order term of
/// the exact Schwarzschild deflection alone is 1.47% at b = 100 r_s.
const KNOWN_UNATTAINABLE: &[&str] = &["first-order deflection within 1%"];

struct Outcome {
    checks: Vec<(String, bool, String)>,
}

impl Outcome {
    fn new() -> Self {
        Self { checks: Vec::new() }
    }

    fn check(&mut self, name: &str, ok: bool, detail: String) {
        self.checks.push((name.to_string(), ok, detail));
    }

    fn at_most(&mut self, name: &str, value: f64, limit: f64) {
        self.check(name, value <= limit, format!("{value:.3e} <= {limit:.0e}"));
    }
}

fn demo(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("demos").join(name)
}

fn scenario(name: &str) -> Scenario {
    load_scenario(&demo(name)).expect("demo scenario parses")
}

fn worst(report: &gravem_core::scenario::RunReport, suffix: &str) -> (f64, bool) {
    report
        .checks
        .iter()
        .filter(|c| c.name.ends_with(suffix))
        .fold((0.0, true), |(v, ok), c| (v.max(c.value), ok && c.passed))
}

fn criterion_1() -> Outcome {
    let mut o = Outcome::new();
    let i = Complex64::i();
    for (sign, name) in [(1.0, "s+im"), (-1.0, "s-im")] {
        let t = PolarizationTensor2D::circular(sign);
        let a = factorize_circular(&t).expect("circular tensors factor");
        let direction = a * (Complex64::new(1.0, 0.0) / a[0]);
        let err = (direction - Vector2::new(Complex64::new(1.0, 0.0), i * sign)).norm()
            + (PolarizationTensor2D::outer(&a).0 - t.0).norm();
        o.at_most(&format!("{name} factors to (1, ±i)"), err, 1e-12);
    }
    for (t, name) in [(PolarizationTensor2D::plus(), "s"), (PolarizationTensor2D::cross(), "m")] {
        let refused = matches!(factorize_circular(&t), Err(AlgebraError::NotFactorizable { .. }));
        o.check(&format!("{name} is NotFactorizable"), refused, String::new());
    }
    o
}

fn criterion_2() -> Outcome {
    let mut o = Outcome::new();
    let q = Vector3::new(0.0, 0.0, 1.0);
    for (h1, h2, expect) in [(1, 1, 2), (-1, -1, -2), (1, -1, 0), (-1, 1, 0)] {
        let st = symmetrized_product(
            PlaneWave::from_parts(q * 0.3, h1).unwrap(),
            PlaneWave::from_parts(q * 0.7, h2).unwrap(),
        );
        let h = st.total_helicity().unwrap().value;
        o.check(
            &format!("({h1:+},{h2:+}) helicity {expect:+}, mass² 0"),
            h == expect && st.mass_squared() == 0.0,
            format!("helicity {h}, mass² {:e}", st.mass_squared()),
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut v = || Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let mut largest = f64::NEG_INFINITY;
    let mut n = 0;
    while n < 1000 {
        let (p, k) = (v(), v());
        if p.cross(&k).norm() < 1e-9 {
            continue;
        }
        let h = if n % 2 == 0 { Helicity::Plus } else { Helicity::Minus };
        let st = symmetrized_product(PlaneWave::new(p, h).unwrap(), PlaneWave::new(k, h).unwrap());
        largest = largest.max(st.mass_squared());
        n += 1;
    }
    o.check(
        "1000 random non-parallel pairs have mass² != 0",
        largest < 0.0,
        format!("largest mass² {largest:.3e}"),
    );
    o
}

fn criterion_3() -> Outcome {
    let mut o = Outcome::new();
    let q = Vector3::new(0.3, -0.2, 1.1);
    let target = Vector4::new(q.norm(), q.x, q.y, q.z);
    let events = [(0.0, 0.0), (0.4, 0.1), (2.5, -1.0), (-7.0, 3.0)];
    let (mut dp, mut dm, mut dc) = (0.0f64, 0.0f64, 0.0f64);
    let mut helicity_ok = true;
    for lambda in [2, -2] {
        let reference = equivalent_tensor_family(&q, lambda, 0.5).unwrap();
        for k in 1..10 {
            let st = equivalent_tensor_family(&q, lambda, k as f64 / 10.0).unwrap();
            dp = dp.max((st.four_momentum().unwrap() - target).norm());
            dm = dm.max(st.mass_squared().abs());
            helicity_ok &= st.total_helicity().unwrap().value == lambda;
            for &(z, t) in &events {
                let d: Matrix3<Complex64> = coincidence_amplitude(&st, z, t) - coincidence_amplitude(&reference, z, t);
                dc = dc.max(d.norm());
            }
        }
    }
    o.at_most("total four-momentum = q", dp, 1e-12);
    o.check("helicity = λ_g", helicity_ok, String::new());
    o.at_most("mass 0", dm, 1e-12);
    o.at_most("coincidence amplitude independent of κ", dc, 1e-12);
    o
}

fn criterion_4() -> Outcome {
    let mut o = Outcome::new();
    let m = Schwarzschild::new(1.0).unwrap();

    let b = 100.0;
    let ray = lensing_ray(&m, b, 1e5, 1.0).unwrap();
    let controls = Controls {
        integrator: Integrator::Dp45,
        step: 1.0,
        sample_every: 1000,
        ..Controls::default()
    };
    let path = integrate_null_geodesic(&m, &ray, 2e5, &controls).unwrap();
    let alpha = scattering_angle(&m, &path).unwrap();
    let first = 2.0 / b;
    let excess = (alpha - first) / first;
    o.check(
        "first-order deflection within 1%",
        excess.abs() < 0.01,
        format!("α = {alpha:.7}, 2r_s/b = {first}, excess {:.2}%", 100.0 * excess),
    );
    let mm = 0.5 / b;
    let series = 4.0 * mm + 15.0 * PI / 4.0 * mm * mm + 128.0 / 3.0 * mm.powi(3);
    o.at_most("deflection matches third-order series", (alpha - series).abs() / series, 1e-3);

    // step halving on the b = 10 ray, truncation-dominated regime
    let ray = lensing_ray(&m, 10.0, 50.0, 1.0).unwrap();
    let drift = |h: f64| {
        let c = Controls {
            step: h,
            sample_every: 1,
            ..Controls::default()
        };
        let p = integrate_null_geodesic(&m, &ray, 100.0, &c).unwrap();
        p.samples().iter().map(|s| s.null_residual).fold(0.0, f64::max)
    };
    let ratio = drift(0.1) / drift(0.05);
    o.check(
        "RK4 step halving reduces null drift 12-20x",
        (12.0..=20.0).contains(&ratio),
        format!("ratio {ratio:.2}"),
    );

    // circular photon orbit at r = 3M, one revolution
    let r = 1.5;
    let ev = SpacetimeEvent::new(Chart::Schwarzschild, [0.0, r, PI / 2.0, 0.0]).unwrap();
    let ray = NullRay::from_direction(&m, ev, &Vector3::y(), 1.0).unwrap();
    let c = Controls {
        step: 1e-3,
        sample_every: 1,
        ..Controls::default()
    };
    let path = integrate_null_geodesic(&m, &ray, TAU * r, &c).unwrap();
    let end = path.last().unwrap();
    let mut radial = path.samples().iter().map(|s| (s.x[1] - r).abs() / r).fold(0.0, f64::max);
    let closed = (end.x[3] - TAU).abs() < 1e-3;

    // the same orbit in isotropic Cartesian coordinates, where round-off
    // seeds the instability instead of cancelling exactly
    let iso = IsotropicSchwarzschild::new(1.0).unwrap();
    let rho = (1.0 + 0.75f64.sqrt()) / 2.0;
    let ev = SpacetimeEvent::new(Chart::Isotropic, [0.0, rho, 0.0, 0.0]).unwrap();
    let ray = NullRay::from_direction(&iso, ev, &Vector3::y(), 1.0).unwrap();
    let path = integrate_null_geodesic(&iso, &ray, TAU * r, &c).unwrap();
    for s in path.samples() {
        let areal = iso.areal_radius(Vector3::new(s.x[1], s.x[2], s.x[3]).norm());
        radial = radial.max((areal - r).abs() / r);
    }
    o.check(
        "photon-sphere radius drift < 1e-6 per revolution",
        radial < 1e-6 && closed,
        format!("{radial:.3e} (Schwarzschild and isotropic charts)"),
    );
    o
}

const DEMOS: [&str; 5] = [
    "flat.toml",
    "schwarzschild_b10.toml",
    "schwarzschild_b100.toml",
    "weak_field.toml",
    "scaled_lab.toml",
];

fn criterion_5() -> Outcome {
    let mut o = Outcome::new();
    let mut worst_by = BTreeMap::new();
    for name in DEMOS {
        let report = run(&scenario(name), Subcommand::Propagate, &RunOptions::default()).unwrap();
        for what in ["norm", "transversality", "trace", "symmetry"] {
            let (v, ok) = worst(&report, &format!(".{what}"));
            let e = worst_by.entry(what).or_insert((0.0f64, true));
            *e = (e.0.max(v), e.1 && ok && v < 1e-9);
        }
    }
    for (what, (v, ok)) in worst_by {
        o.check(&format!("{what} residual < 1e-9 on all demo rays"), ok, format!("{v:.3e}"));
    }
    o
}

fn criterion_6() -> Outcome {
    let mut o = Outcome::new();
    let (mut dev, mut leak, mut kind) = (0.0f64, 0.0f64, 0.0f64);
    let mut rays = 0;
    let mut leak_rays = 0;
    for name in ["schwarzschild_b10.toml", "weak_field.toml"] {
        let report = run(&scenario(name), Subcommand::EquivalenceCheck, &RunOptions::default()).unwrap();
        for c in report.checks.iter().filter(|c| c.name.starts_with("random")) {
            match c.name.rsplit('.').next().unwrap() {
                "deviation" => {
                    dev = dev.max(c.value);
                    rays += 1;
                }
                "helicity_leakage" => {
                    leak = leak.max(c.value);
                    leak_rays += 1;
                }
                "kappa_independence" => kind = kind.max(c.value),
                _ => {}
            }
        }
    }
    o.check("20 randomized rays", rays == 20, format!("{rays} rays"));
    o.at_most("factored vs direct max relative deviation < 1e-7", dev, 1e-7);
    o.check(
        "helicity non-mixing |c∓|/|c±| < 1e-9",
        leak < 1e-9 && leak_rays > 0,
        format!("{leak:.3e} over {leak_rays} single-helicity rays"),
    );
    o.at_most("κ-independence", kind, 1e-12);
    o
}

fn criterion_7() -> Outcome {
    let mut o = Outcome::new();
    let (mut doubling, mut ratio) = (0.0f64, 0.0f64);
    let mut count = 0;
    for name in DEMOS {
        let sc = scenario(name);
        let mut sc_demo = sc.clone();
        if let Some(w) = sc_demo.wave.as_mut() {
            w.random_rays = 0;
        } else {
            continue;
        }
        let report = run(&sc_demo, Subcommand::EquivalenceCheck, &RunOptions::default()).unwrap();
        doubling = doubling.max(worst(&report, ".phase_doubling").0);
        ratio = ratio.max(worst(&report, ".phase_ratio").0);
        count += sc_demo.rays.len();
    }
    o.at_most(&format!("φ_gw = 2 φ_em pointwise on {count} demo rays"), doubling, 1e-9);
    o.at_most("phase ratio 2 at κ = 1/2", ratio, 1e-9);
    o
}

fn criterion_8() -> Outcome {
    let mut o = Outcome::new();
    let base: SharedMetric = std::sync::Arc::new(Schwarzschild::new(1.0).unwrap());
    let mut group = 0.0f64;
    for (a, b) in [(1e-3, 1e-6), (1e3, 1e-9), (0.37, 2.9)] {
        let ab = ConformalScale::new(a).unwrap().then(ConformalScale::new(b).unwrap()).value();
        let twice: SharedMetric = std::sync::Arc::new(conformal_scale_metric(base.clone(), a).unwrap());
        let twice = conformal_scale_metric(twice, b).unwrap();
        let once = conformal_scale_metric(base.clone(), ab).unwrap();
        for x in [[0.0, 7.0 * ab, 1.1, 0.3], [2.0, 40.0 * ab, 2.0, -1.0]] {
            let x = Vector4::from(x);
            let (g1, g2) = (twice.components(&x).unwrap(), once.components(&x).unwrap());
            group = group.max((g1 - g2).norm() / g2.norm());
        }
    }
    o.at_most("group property", group, 1e-12);

    let mut sc = scenario("schwarzschild_b10.toml");
    sc.wave.as_mut().unwrap().random_rays = 0;
    let mut inv = 0.0f64;
    let mut all = true;
    for s in [1e-9, 1e-6, 1e-3, 1.0, 10.0, 1e3] {
        sc.scale = s;
        let report = run(&sc, Subcommand::Scale, &RunOptions::default()).unwrap();
        for key in ["deflection", "validity_ratio", "phase_ratio"] {
            let (v, ok) = worst(&report, &format!(".{key}"));
            inv = inv.max(v);
            all &= ok;
        }
        all &= report.passed();
    }
    o.check(
        "deflection, validity ratio, phase ratio invariant for s in [1e-9, 1e3]",
        all && inv <= 1e-9,
        format!("{inv:.3e} <= 1e-9"),
    );
    let twice = scale_scenario(&scale_scenario(&sc, 1e-3).unwrap(), 1e-6).unwrap();
    let once = scale_scenario(&sc, 1e-9).unwrap();
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    let drift = rel(twice.metric.scale, once.metric.scale)
        .max(rel(twice.controls.step, once.controls.step))
        .max(rel(twice.rays[0].impact_parameter.unwrap(), once.rays[0].impact_parameter.unwrap()));
    o.at_most("scenario scaling composes", drift, 1e-15);
    o
}

fn criterion_9() -> Outcome {
    let mut o = Outcome::new();
    let mut vacuum = true;
    for x in [[0.0, 0.0, 0.0, 0.0], [1.0, -3.0, 2.5, 7.0]] {
        let ev = SpacetimeEvent::new(Chart::Cartesian, x).unwrap();
        let c = plebanski_medium(&Minkowski, &ev).unwrap();
        vacuum &= c.epsilon == Matrix3::identity() && c.mu == Matrix3::identity() && c.w == Vector3::zeros();
    }
    o.check("Minkowski gives vacuum exactly", vacuum, String::new());

    let iso = IsotropicSchwarzschild::new(1.0).unwrap();
    let mut err = 0.0f64;
    for rho in [5.0, 10.0, 100.0] {
        for dir in [Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.3, -0.4, 0.866).normalize()] {
            let p = dir * rho;
            let ev = SpacetimeEvent::new(Chart::Isotropic, [0.0, p.x, p.y, p.z]).unwrap();
            let n = plebanski_medium(&iso, &ev).unwrap().isotropic_index().unwrap();
            let q = 1.0 / (4.0 * rho);
            let oracle = (1.0 + q).powi(3) / (1.0 - q);
            err = err.max((n - oracle).abs() / oracle);
        }
    }
    o.at_most("isotropic index oracle at ρ ∈ {5, 10, 100}", err, 1e-10);

    let mut dev = 0.0f64;
    let controls = Controls {
        step: 1e-2,
        sample_every: 1000,
        ..Controls::default()
    };
    let m = Schwarzschild::new(1.0).unwrap();
    let metrics: [&dyn Metric; 2] = [&m, &iso];
    for metric in metrics {
        for b in [50.0, 100.0] {
            let d = 4.0 * b;
            let ray = lensing_ray(metric, b, d, 1.0).unwrap();
            let r = medium_ray_check(metric, &ray, 2.0 * d, &controls, 5.0).unwrap();
            dev = dev.max(r.relative_deviation.unwrap());
        }
    }
    o.at_most("medium deflection within 1% of geodesic for b >= 50 r_s", dev, 0.01);
    o
}

fn criterion_10() -> Outcome {
    let mut o = Outcome::new();
    let mut exact = true;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..10_000 {
        let spec = SpdcSourceSpec {
            pump_frequency: rng.random_range(1e-3..1e3),
            kappa: rng.random_range(0.01..0.99),
            crystal_length: 1.0,
            pump_wavenumber: 1.0,
            pump_waist: 1.0,
            amplitude_plus: Complex64::new(1.0, 0.0),
            amplitude_minus: Complex64::new(0.0, 0.0),
            degenerate_filter: false,
        };
        let (ws, wi) = spec.frequencies();
        exact &= ws + wi == spec.pump_frequency;
    }
    o.check("ω_s + ω_i = ω_p exactly", exact, "10000 random splits".into());
    let spec = SpdcSourceSpec {
        pump_frequency: 1.0,
        kappa: 0.5,
        crystal_length: 0.02,
        pump_wavenumber: TAU / 405e-9,
        pump_waist: 5e-6,
        amplitude_plus: Complex64::new(1.0, 0.0),
        amplitude_minus: Complex64::new(0.0, 0.0),
        degenerate_filter: true,
    };
    let q = momentum_correlation_quality(&spec, 0.2).unwrap();
    o.check(
        "405 nm / 2 cm / 5 µm quality ratio ≈ 0.139",
        (q.ratio - 0.139).abs() < 1e-3 && q.good,
        format!("ratio {:.5}", q.ratio),
    );
    o
}

fn gravem(sub: &str, config: &Path, out: &Path) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_gravem"))
        .args([sub, "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("gravem runs")
        .status
        .code()
        .unwrap_or(-1)
}

fn data_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_name() != "run.log")
        .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
        .collect()
}

fn criterion_11() -> Outcome {
    let mut o = Outcome::new();
    let tmp = tempfile::tempdir().unwrap();
    let mut runs = 0;
    let mut identical = true;
    let mut codes_ok = true;
    for name in DEMOS {
        let sc = scenario(name);
        let mut subs = vec!["propagate", "algebra", "scale"];
        if sc.wave.is_some() {
            subs.push("equivalence-check");
        }
        if sc.medium.is_some() {
            subs.push("medium");
        }
        if sc.source.is_some() {
            subs.push("source");
        }
        for sub in subs {
            let a = tmp.path().join(format!("{name}-{sub}-a"));
            let b = tmp.path().join(format!("{name}-{sub}-b"));
            codes_ok &= gravem(sub, &demo(name), &a) == 0 && gravem(sub, &demo(name), &b) == 0;
            let (fa, fb) = (data_files(&a), data_files(&b));
            identical &= !fa.is_empty() && fa == fb;
            runs += 1;
        }
    }
    o.check(
        "two runs of every demo give bit-identical data files",
        identical && codes_ok,
        format!("{runs} subcommand runs, all exit 0: {codes_ok}"),
    );
    o
}

fn main() {
    type Criterion = (u32, &'static str, fn() -> Outcome, Duration);
    let criteria: [Criterion; 11] = [
        (1, "factorization identities", criterion_1, Duration::from_secs(1)),
        (2, "sector table", criterion_2, Duration::from_secs(5)),
        (3, "κ-family invariance", criterion_3, Duration::from_secs(5)),
        (4, "geodesic integrator", criterion_4, Duration::from_secs(30)),
        (5, "transport conservation", criterion_5, Duration::from_secs(30)),
        (6, "core equivalence theorem", criterion_6, Duration::from_secs(120)),
        (7, "phase doubling", criterion_7, Duration::from_secs(30)),
        (8, "conformal scaling", criterion_8, Duration::from_secs(30)),
        (9, "medium compiler", criterion_9, Duration::from_secs(60)),
        (10, "SPDC model", criterion_10, Duration::from_secs(1)),
        (11, "CLI determinism", criterion_11, Duration::from_secs(180)),
    ];
    let mut hard_failures = 0;
    for (n, title, f, budget) in criteria {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let passed = in_time && outcome.checks.iter().all(|c| c.1);
        println!(
            "criterion {n:>2} {title}: {} ({:.2} s, budget {} s)",
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
        for (name, ok, detail) in &outcome.checks {
            let known = KNOWN_UNATTAINABLE.contains(&name.as_str());
            println!(
                "    {} {name}{}{}",
                if *ok { "ok  " } else { "FAIL" },
                if detail.is_empty() { String::new() } else { format!(": {detail}") },
                if !ok && known { " (unattainable as stated, see README)" } else { "" }
            );
            if !ok && !known {
                hard_failures += 1;
            }
        }
        if !in_time {
            hard_failures += 1;
        }
    }
    if hard_failures > 0 {
        eprintln!("{hard_failures} acceptance checks failed");
        std::process::exit(1);
    }
}
