use std::sync::Arc;

use nalgebra::{Matrix4, Vector3, Vector4};
use num_complex::Complex64;
use proptest::prelude::*;

use gravem_core::emulation::{
    conformal_scale_field, conformal_scale_metric, plebanski_medium, spdc_state, FieldSample,
    SpdcSourceSpec,
};
use gravem_core::scenario::{load_scenario, run, RunOptions, Subcommand};
use gravem_core::spacetime::{
    Chart, IsotropicSchwarzschild, Metric, Schwarzschild, SharedMetric, SpacetimeEvent, WeakField,
};

fn antisymmetric() -> impl Strategy<Value = Matrix4<f64>> {
    prop::array::uniform6(-1.0..1.0f64).prop_map(|a| {
        let mut f = Matrix4::zeros();
        let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        for (v, (i, j)) in a.iter().zip(pairs) {
            f[(i, j)] = *v;
            f[(j, i)] = -*v;
        }
        f
    })
}

fn log_scale() -> impl Strategy<Value = f64> {
    (-9.0..3.0f64).prop_map(|e| 10f64.powf(e))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn field_scaling_composes(f in antisymmetric(), s1 in log_scale(), s2 in log_scale(), x in prop::array::uniform4(-10.0..10.0f64)) {
        for chart in [Chart::Cartesian, Chart::Schwarzschild] {
            let x = if chart == Chart::Schwarzschild { [x[0], x[1].abs() + 2.0, 1.0, 0.5] } else { x };
            let sample = FieldSample::new(SpacetimeEvent::new(chart, x).unwrap(), f).unwrap();
            let twice = conformal_scale_field(&conformal_scale_field(&sample, s1).unwrap(), s2).unwrap();
            let once = conformal_scale_field(&sample, s1 * s2).unwrap();
            prop_assert!((twice.f - once.f).norm() <= 1e-12 * once.f.norm());
            prop_assert!((twice.event.vector() - once.event.vector()).norm() <= 1e-12 * once.event.vector().norm().max(1e-300));
            prop_assert_eq!(twice.f, -twice.f.transpose());
        }
    }

    #[test]
    fn metric_scaling_composes(s1 in log_scale(), s2 in log_scale(), r in 2.0..100.0f64, th in 0.1..3.0f64) {
        let base: SharedMetric = Arc::new(Schwarzschild::new(1.0).unwrap());
        let inner: SharedMetric = Arc::new(conformal_scale_metric(base.clone(), s1).unwrap());
        let twice = conformal_scale_metric(inner, s2).unwrap();
        let once = conformal_scale_metric(base, s1 * s2).unwrap();
        let x = Vector4::new(0.3, r * s1 * s2, th, 1.0);
        let (a, b) = (twice.components(&x).unwrap(), once.components(&x).unwrap());
        prop_assert!((a - b).norm() <= 1e-12 * b.norm());
    }

    #[test]
    fn media_are_impedance_matched(i in 0usize..3, p in prop::array::uniform3(-50.0..50.0f64)) {
        let (m, chart): (Box<dyn Metric>, Chart) = match i {
            0 => (Box::new(Schwarzschild::new(1.0).unwrap()), Chart::Schwarzschild),
            1 => (Box::new(IsotropicSchwarzschild::new(1.0).unwrap()), Chart::Isotropic),
            _ => (Box::new(WeakField::new(1.0).unwrap()), Chart::Cartesian),
        };
        let pos = Vector3::from(p);
        prop_assume!(pos.norm() > 2.0);
        let ev = SpacetimeEvent::from_vector(chart, &chart.from_cartesian_position(0.0, &pos)).unwrap();
        let c = plebanski_medium(m.as_ref(), &ev).unwrap();
        prop_assert_eq!(c.epsilon, c.mu);
        prop_assert_eq!(c.epsilon, c.epsilon.transpose());
        prop_assert!(c.epsilon.symmetric_eigenvalues().min() > 0.0);
        prop_assert_eq!(c.w, Vector3::zeros());
    }

    #[test]
    fn spdc_state_is_symmetric_under_kappa_mirror(
        kappa in 0.01..0.99f64,
        wp in 0.1..100.0f64,
        ap in (-1.0..1.0f64, -1.0..1.0f64),
        am in (-1.0..1.0f64, -1.0..1.0f64),
        d in prop::array::uniform3(-1.0..1.0f64),
    ) {
        let dir = Vector3::from(d);
        prop_assume!(dir.norm() > 1e-3 && (ap.0.abs() + ap.1.abs() + am.0.abs() + am.1.abs()) > 1e-3);
        let spec = SpdcSourceSpec {
            pump_frequency: wp,
            kappa,
            crystal_length: 1.0,
            pump_wavenumber: 1.0,
            pump_waist: 0.1,
            amplitude_plus: Complex64::new(ap.0, ap.1),
            amplitude_minus: Complex64::new(am.0, am.1),
            degenerate_filter: false,
        };
        let mirror = SpdcSourceSpec { kappa: 1.0 - kappa, ..spec };
        let (a, b) = (spdc_state(&spec, &dir).unwrap(), spdc_state(&mirror, &dir).unwrap());
        prop_assert!((a.polarization_tensor() - b.polarization_tensor()).norm() < 1e-12);
        let (ws, wi) = spec.frequencies();
        prop_assert_eq!(ws + wi, wp);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn dimensionless_observables_are_scale_invariant(s in log_scale()) {
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("demos/schwarzschild_b10.toml");
        let mut sc = load_scenario(&path).unwrap();
        sc.wave.as_mut().unwrap().random_rays = 0;
        sc.scale = s;
        let report = run(&sc, Subcommand::Scale, &RunOptions::default()).unwrap();
        for c in &report.checks {
            prop_assert!(c.passed, "{c}");
        }
    }
}
