use nalgebra::{Matrix3, Vector3, Vector4};
use num_complex::Complex64;

use super::{check_kappa, AlgebraError, Helicity, PlaneWave};

/// Relative tolerance on |p × p̄| for treating two momenta as parallel.
const PARALLEL_TOLERANCE: f64 = 1e-12;

/// The exchange-symmetric state |p λ⟩⊗|p̄ λ̄⟩ + |p̄ λ̄⟩⊗|p λ⟩ (unnormalized).
///
/// `kappa` and `alpha` are recorded only when the momenta are parallel:
/// κ = |p|/(|p|+|p̄|) and α = κ/(1−κ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhotonState {
    pub first: PlaneWave,
    pub second: PlaneWave,
    pub kappa: Option<f64>,
    pub alpha: Option<f64>,
}

/// Eigenvalue of ₂Λ = Λ⊗I + I⊗Λ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TotalHelicity {
    pub value: i32,
    /// False for the helicity-0 sectors, which have no gravitational counterpart.
    pub gravitational_equivalent: bool,
}

fn parallel(p: &Vector3<f64>, q: &Vector3<f64>) -> bool {
    p.dot(q) > 0.0 && p.cross(q).norm() <= PARALLEL_TOLERANCE * p.norm() * q.norm()
}

pub fn symmetrized_product(w1: PlaneWave, w2: PlaneWave) -> TwoPhotonState {
    let (kappa, alpha) = if parallel(&w1.momentum, &w2.momentum) {
        let (a, b) = (w1.frequency(), w2.frequency());
        let k = a / (a + b);
        (Some(k), Some(a / b))
    } else {
        (None, None)
    };
    TwoPhotonState {
        first: w1,
        second: w2,
        kappa,
        alpha,
    }
}

impl TwoPhotonState {
    pub fn is_parallel(&self) -> bool {
        self.kappa.is_some()
    }

    /// −2(ωω̄ − p·p̄), the eigenvalue of the two-particle mass-squared
    /// operator with its leading minus sign. Zero for parallel momenta,
    /// negative otherwise.
    pub fn mass_squared(&self) -> f64 {
        let (p, q) = (&self.first.momentum, &self.second.momentum);
        let (a, b) = (p.norm(), q.norm());
        let dot = p.dot(q);
        // ab − p·q loses everything to cancellation for near-parallel pairs
        let gap = if dot > 0.0 {
            p.cross(q).norm_squared() / (a * b + dot)
        } else {
            a * b - dot
        };
        -2.0 * gap
    }

    pub fn total_helicity(&self) -> Result<TotalHelicity, AlgebraError> {
        if !self.is_parallel() {
            return Err(AlgebraError::NotHelicityEigenstate);
        }
        let value = self.first.helicity.value() + self.second.helicity.value();
        Ok(TotalHelicity {
            value,
            gravitational_equivalent: value != 0,
        })
    }

    /// (ω + ω̄, p + p̄). Non-parallel momenta give a massive total, reported
    /// through the error so callers still see the sum.
    pub fn four_momentum(&self) -> Result<Vector4<f64>, AlgebraError> {
        let p = self.first.momentum + self.second.momentum;
        let w = self.first.frequency() + self.second.frequency();
        let sum = Vector4::new(w, p.x, p.y, p.z);
        if self.is_parallel() {
            Ok(sum)
        } else {
            Err(AlgebraError::NotMomentumEigenstateAlongRay {
                sum: [sum[0], sum[1], sum[2], sum[3]],
            })
        }
    }

    /// The state with its two factors swapped.
    pub fn exchanged(&self) -> Self {
        symmetrized_product(self.second, self.first)
    }

    /// Spatial polarization tensor ½(ê ⊗ ē + ē ⊗ ê).
    pub fn polarization_tensor(&self) -> Matrix3<Complex64> {
        let (a, b) = (self.first.polarization, self.second.polarization);
        (a * b.transpose() + b * a.transpose()) * Complex64::from(0.5)
    }

    /// ½(A₁⊗A₂ + A₂⊗A₁) with both plane-wave factors evaluated at the same
    /// event, the sample a coincidence measurement records.
    pub fn field_at(&self, t: f64, x: &Vector3<f64>) -> Matrix3<Complex64> {
        let a = self.first.field_at(t, x);
        let b = self.second.field_at(t, x);
        (a * b.transpose() + b * a.transpose()) * Complex64::from(0.5)
    }
}

/// |κq λ_g/2⟩⊗|(1−κ)q λ_g/2⟩ + exchange: a massless two-photon state of total
/// helicity λ_g and total momentum q.
pub fn equivalent_tensor_family(
    q: &Vector3<f64>,
    grav_helicity: i32,
    kappa: f64,
) -> Result<TwoPhotonState, AlgebraError> {
    let h = Helicity::from_gravitational(grav_helicity)?;
    check_kappa(kappa)?;
    let w1 = PlaneWave::new(q * kappa, h)?;
    let w2 = PlaneWave::new(q * (1.0 - kappa), h)?;
    Ok(symmetrized_product(w1, w2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wave(p: [f64; 3], h: i32) -> PlaneWave {
        PlaneWave::from_parts(Vector3::from(p), h).unwrap()
    }

    #[test]
    fn kappa_and_alpha_recorded_for_parallel_pair() {
        let q = Vector3::new(0.3, -0.4, 1.2);
        let s = symmetrized_product(
            PlaneWave::new(q * 0.25, Helicity::Plus).unwrap(),
            PlaneWave::new(q * 0.75, Helicity::Plus).unwrap(),
        );
        assert!((s.kappa.unwrap() - 0.25).abs() < 1e-15);
        assert!((s.alpha.unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn antiparallel_pair_has_no_family_parameters() {
        let s = symmetrized_product(wave([0.0, 0.0, 1.0], 1), wave([0.0, 0.0, -1.0], 1));
        assert_eq!(s.kappa, None);
        assert_eq!(s.alpha, None);
        assert_eq!(s.mass_squared(), -4.0);
        assert_eq!(s.total_helicity(), Err(AlgebraError::NotHelicityEigenstate));
        assert_eq!(
            s.four_momentum(),
            Err(AlgebraError::NotMomentumEigenstateAlongRay {
                sum: [2.0, 0.0, 0.0, 0.0]
            })
        );
    }

    #[test]
    fn orthogonal_pair_mass() {
        let s = symmetrized_product(wave([0.0, 0.0, 1.0], 1), wave([2.0, 0.0, 0.0], -1));
        assert_eq!(s.mass_squared(), -4.0);
    }

    #[test]
    fn identical_waves() {
        let w = wave([0.1, 0.2, 0.3], -1);
        let s = symmetrized_product(w, w);
        assert_eq!(s.exchanged(), s);
        assert_eq!(s.alpha, Some(1.0));
        let p = s.four_momentum().unwrap();
        assert!((p - Vector4::new(2.0 * w.frequency(), 0.2, 0.4, 0.6)).norm() < 1e-15);
        let e = w.polarization;
        assert!((s.polarization_tensor() - e * e.transpose()).norm() < 1e-15);
    }

    #[test]
    fn sectors() {
        let p = [0.0, 1.0, 1.0];
        let q = [0.0, 2.0, 2.0];
        let cases = [((1, 1), 2, true), ((-1, -1), -2, true), ((1, -1), 0, false), ((-1, 1), 0, false)];
        for ((a, b), value, grav) in cases {
            let s = symmetrized_product(wave(p, a), wave(q, b));
            assert_eq!(s.mass_squared(), 0.0);
            assert_eq!(
                s.total_helicity().unwrap(),
                TotalHelicity {
                    value,
                    gravitational_equivalent: grav
                }
            );
        }
    }

    #[test]
    fn family_invariants() {
        let q = Vector3::new(0.0, 0.0, 3.0);
        let s = equivalent_tensor_family(&q, 2, 0.5).unwrap();
        assert_eq!(s.first, s.second);
        assert_eq!(s.first.frequency(), 1.5);
        assert_eq!(s.first.helicity, Helicity::Plus);
        let s = equivalent_tensor_family(&q, -2, 0.25).unwrap();
        assert_eq!(s.four_momentum().unwrap(), Vector4::new(3.0, 0.0, 0.0, 3.0));
        assert_eq!(s.total_helicity().unwrap().value, -2);
        assert_eq!(
            equivalent_tensor_family(&q, 2, 0.0),
            Err(AlgebraError::KappaOutOfRange(0.0))
        );
        assert_eq!(
            equivalent_tensor_family(&q, 1, 0.5),
            Err(AlgebraError::InvalidGravHelicity(1))
        );
    }
}
