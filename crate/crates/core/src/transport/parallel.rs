use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;

use super::geodesic::replay;
use super::{RayPath, TransportError};
use crate::spacetime::Metric;

/// A complex vector v^μ at every sample of a path.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportedVector {
    pub values: Vec<Vector4<Complex64>>,
}

/// A complex symmetric tensor B^μν at every sample of a path.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportedTensor {
    pub values: Vec<Matrix4<Complex64>>,
}

/// Solves p^σ D_σ v = 0 along the path: dv^μ/dl = −Γ^μ_αβ p^α v^β.
pub fn parallel_transport_vector(
    metric: &dyn Metric,
    path: &RayPath,
    v0: &Vector4<Complex64>,
) -> Result<TransportedVector, TransportError> {
    if path.is_empty() {
        return Err(TransportError::EmptyPath);
    }
    let mut payload = [0.0; 8];
    for mu in 0..4 {
        payload[mu] = v0[mu].re;
        payload[4 + mu] = v0[mu].im;
    }
    let states = replay(metric, path, &payload, |a, v, dv| {
        for part in 0..2 {
            let o = 4 * part;
            for mu in 0..4 {
                let mut s = 0.0;
                for b in 0..4 {
                    s += a[(mu, b)] * v[o + b];
                }
                dv[o + mu] = -s;
            }
        }
    })?;
    let values = states
        .iter()
        .map(|y| Vector4::from_fn(|mu, _| Complex64::new(y[8 + mu], y[12 + mu])))
        .collect();
    Ok(TransportedVector { values })
}

/// Solves p^σ D_σ B = 0 with both slots transported:
/// dB/dl = −(A B + (A B)ᵀ), A^μ_β = Γ^μ_αβ p^α.
///
/// The update is symmetric by construction, so a symmetric input stays
/// exactly symmetric.
pub fn parallel_transport_tensor(
    metric: &dyn Metric,
    path: &RayPath,
    b0: &Matrix4<Complex64>,
) -> Result<TransportedTensor, TransportError> {
    if path.is_empty() {
        return Err(TransportError::EmptyPath);
    }
    if b0 != &b0.transpose() {
        return Err(TransportError::NonSymmetricInput);
    }
    let mut payload = [0.0; 32];
    for i in 0..4 {
        for j in 0..4 {
            payload[4 * i + j] = b0[(i, j)].re;
            payload[16 + 4 * i + j] = b0[(i, j)].im;
        }
    }
    let states = replay(metric, path, &payload, |a, v, dv| {
        for part in 0..2 {
            let o = 16 * part;
            let mut d = [[0.0; 4]; 4];
            for (i, row) in d.iter_mut().enumerate() {
                for (j, slot) in row.iter_mut().enumerate() {
                    let mut s = 0.0;
                    for k in 0..4 {
                        s += a[(i, k)] * v[o + 4 * k + j];
                    }
                    *slot = s;
                }
            }
            for i in 0..4 {
                for j in 0..4 {
                    dv[o + 4 * i + j] = -(d[i][j] + d[j][i]);
                }
            }
        }
    })?;
    let values = states
        .iter()
        .map(|y| Matrix4::from_fn(|i, j| Complex64::new(y[8 + 4 * i + j], y[24 + 4 * i + j])))
        .collect();
    Ok(TransportedTensor { values })
}
