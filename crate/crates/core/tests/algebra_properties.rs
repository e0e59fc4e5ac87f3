use nalgebra::{Matrix2, Vector2, Vector3};
use num_complex::Complex64;
use proptest::prelude::*;

use gravem_core::algebra::{
    equivalent_tensor_family, factorize_circular, polarization_vector, rotate_vector,
    symmetrized_product, AlgebraError, Helicity, PlaneWave, PolarizationTensor2D,
};

fn vec3() -> impl Strategy<Value = Vector3<f64>> {
    (-1.0..1.0, -1.0..1.0, -1.0..1.0)
        .prop_map(|(x, y, z)| Vector3::new(x, y, z))
        .prop_filter("non-zero", |v| v.norm() > 1e-3)
}

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0, -1.0..1.0).prop_map(|(re, im)| Complex64::new(re, im))
}

fn helicity() -> impl Strategy<Value = Helicity> {
    prop_oneof![Just(Helicity::Plus), Just(Helicity::Minus)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn parallel_pairs_are_massless(p in vec3(), a in 0.01..10.0f64, b in 0.01..10.0f64, h1 in helicity(), h2 in helicity()) {
        let st = symmetrized_product(PlaneWave::new(p * a, h1).unwrap(), PlaneWave::new(p * b, h2).unwrap());
        prop_assert!(st.mass_squared().abs() < 1e-12);
        let (k, alpha) = (st.kappa.unwrap(), st.alpha.unwrap());
        prop_assert!((alpha - k / (1.0 - k)).abs() < 1e-12 * alpha.max(1.0));
    }

    #[test]
    fn non_parallel_pairs_are_massive(p in vec3(), q in vec3(), h1 in helicity(), h2 in helicity()) {
        prop_assume!(p.cross(&q).norm() > 1e-6 * p.norm() * q.norm());
        let st = symmetrized_product(PlaneWave::new(p, h1).unwrap(), PlaneWave::new(q, h2).unwrap());
        prop_assert!(st.mass_squared() < 0.0);
        prop_assert!(st.kappa.is_none() && st.alpha.is_none());
    }

    #[test]
    fn factorization_inverts_outer_product(a in complex(), b in complex()) {
        prop_assume!(a.norm() + b.norm() > 1e-3);
        let v = Vector2::new(a, b);
        let f = factorize_circular(&PolarizationTensor2D::outer(&v)).unwrap();
        let err = (f - v).norm().min((f + v).norm());
        prop_assert!(err < 1e-12 * v.norm().max(1.0), "{err:e}");
    }

    #[test]
    fn rank_decides_factorizability(a in complex(), b in complex()) {
        // general traceless symmetric tensor
        let t = PolarizationTensor2D(Matrix2::new(a, b, b, -a));
        let det = (t.0[(0, 0)] * t.0[(1, 1)] - b * b).norm();
        let norm2 = t.0.norm_squared();
        prop_assume!(norm2 > 1e-6 && (det - 1e-10 * norm2).abs() > 1e-9 * norm2);
        match factorize_circular(&t) {
            Ok(f) => {
                prop_assert!(det <= 1e-10 * norm2);
                prop_assert!((PolarizationTensor2D::outer(&f).0 - t.0).norm() < 1e-9 * norm2.sqrt());
            }
            Err(AlgebraError::NotFactorizable { .. }) => prop_assert!(det > 1e-10 * norm2),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn helicity_rotation_property(p in vec3(), theta in -7.0..7.0f64, h in helicity()) {
        let e = polarization_vector(&p, h).unwrap();
        let axis = p.normalize();
        let rotated = rotate_vector(&axis, theta, &e).unwrap();
        let expected = e * Complex64::from_polar(1.0, -h.sign() * theta);
        prop_assert!((rotated - expected).norm() < 1e-12);
        prop_assert!(e.dot(&p.map(|v| Complex64::new(v, 0.0))).norm() < 1e-12 * p.norm());
    }

    #[test]
    fn family_is_massless_with_fixed_momentum(q in vec3(), k in 0.01..0.99f64, lambda in prop_oneof![Just(2), Just(-2)]) {
        let st = equivalent_tensor_family(&q, lambda, k).unwrap();
        prop_assert_eq!(st.total_helicity().unwrap().value, lambda);
        prop_assert!(st.mass_squared().abs() < 1e-12);
        let p = st.four_momentum().unwrap();
        prop_assert!((p[0] - q.norm()).abs() < 1e-12 && (p.fixed_rows::<3>(1) - q).norm() < 1e-12);
    }
}

#[test]
fn linear_polarizations_are_traceless() {
    for t in [PolarizationTensor2D::plus(), PolarizationTensor2D::cross()] {
        assert_eq!(t.trace(), Complex64::new(0.0, 0.0));
        assert!(t.is_symmetric());
    }
}
