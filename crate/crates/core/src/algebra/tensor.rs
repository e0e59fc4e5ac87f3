use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix3, Vector2};
use num_complex::Complex64;

use super::AlgebraError;

/// Rank-1 test: |det T| ≤ RANK_TOLERANCE · ‖T‖²_F.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Symmetric complex 2×2 tensor on the plane transverse to propagation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationTensor2D(pub Matrix2<Complex64>);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

impl PolarizationTensor2D {
    /// s = x̂⊗x̂ − ŷ⊗ŷ
    pub fn plus() -> Self {
        Self(Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)))
    }

    /// m = x̂⊗ŷ + ŷ⊗x̂
    pub fn cross() -> Self {
        Self(Matrix2::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)))
    }

    /// s ± i m
    pub fn circular(sign: f64) -> Self {
        Self(Self::plus().0 + Self::cross().0 * c(0.0, sign))
    }

    pub fn outer(a: &Vector2<Complex64>) -> Self {
        Self(a * a.transpose())
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn is_symmetric(&self) -> bool {
        self.0[(0, 1)] == self.0[(1, 0)]
    }

    /// Embeds in the x–y block of a spatial 3×3 tensor.
    pub fn embed(&self) -> Matrix3<Complex64> {
        let mut m = Matrix3::zeros();
        m.fixed_view_mut::<2, 2>(0, 0).copy_from(&self.0);
        m
    }
}

/// Finds â with â ⊗ â = T.
///
/// The sign of â is fixed so that its first non-zero component has argument in
/// [0, π).
pub fn factorize_circular(t: &PolarizationTensor2D) -> Result<Vector2<Complex64>, AlgebraError> {
    let m = &t.0;
    let norm2 = m.norm_squared();
    if norm2 == 0.0 {
        return Err(AlgebraError::DegenerateInput);
    }
    let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).norm();
    if det > RANK_TOLERANCE * norm2 {
        return Err(AlgebraError::NotFactorizable { det });
    }
    // pivot on the larger diagonal entry; for a rank-1 symmetric tensor the
    // diagonal vanishes only if the whole tensor does
    let k = if m[(0, 0)].norm() >= m[(1, 1)].norm() { 0 } else { 1 };
    let ak = m[(k, k)].sqrt();
    if ak.norm() == 0.0 {
        return Err(AlgebraError::NotFactorizable { det });
    }
    let mut a = Vector2::zeros();
    a[k] = ak;
    a[1 - k] = m[(1 - k, k)] / ak;

    let lead = if a[0].norm() > 0.0 { a[0] } else { a[1] };
    let arg = lead.arg();
    if !(0.0..PI).contains(&arg) {
        a = -a;
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circular_tensors_factor() {
        let a = factorize_circular(&PolarizationTensor2D::circular(1.0)).unwrap();
        assert!((a - Vector2::new(c(1.0, 0.0), c(0.0, 1.0))).norm() < 1e-12);
        let b = factorize_circular(&PolarizationTensor2D::circular(-1.0)).unwrap();
        assert!((b - Vector2::new(c(1.0, 0.0), c(0.0, -1.0))).norm() < 1e-12);
    }

    #[test]
    fn linear_tensors_do_not_factor() {
        for t in [PolarizationTensor2D::plus(), PolarizationTensor2D::cross()] {
            assert!(matches!(
                factorize_circular(&t),
                Err(AlgebraError::NotFactorizable { .. })
            ));
            assert_eq!(t.trace(), c(0.0, 0.0));
            assert!(t.is_symmetric());
        }
    }

    #[test]
    fn zero_is_degenerate() {
        assert_eq!(
            factorize_circular(&PolarizationTensor2D(Matrix2::zeros())),
            Err(AlgebraError::DegenerateInput)
        );
    }

    #[test]
    fn sign_convention_on_negative_lead() {
        let a = Vector2::new(c(-2.0, 0.0), c(0.5, 0.5));
        let f = factorize_circular(&PolarizationTensor2D::outer(&a)).unwrap();
        assert!((f + a).norm() < 1e-14);
        let b = Vector2::new(c(0.0, 0.0), c(0.0, -1.0));
        let g = factorize_circular(&PolarizationTensor2D::outer(&b)).unwrap();
        assert!((g + b).norm() < 1e-14);
    }
}
