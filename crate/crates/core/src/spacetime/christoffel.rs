use nalgebra::{Matrix4, Vector4};

use super::{inverse, Coords, GeometryError, Metric};

/// Γ^μ_αβ, stored as `[μ][α][β]`. Symmetric in the lower pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Christoffel(pub [[[f64; 4]; 4]; 4]);

impl Christoffel {
    pub fn zero() -> Self {
        Christoffel([[[0.0; 4]; 4]; 4])
    }

    #[inline]
    pub fn get(&self, mu: usize, a: usize, b: usize) -> f64 {
        self.0[mu][a][b]
    }

    /// Sets Γ^μ_ab and Γ^μ_ba together.
    #[inline]
    pub fn set_sym(&mut self, mu: usize, a: usize, b: usize, value: f64) {
        self.0[mu][a][b] = value;
        self.0[mu][b][a] = value;
    }

    /// A^μ_β = Γ^μ_αβ p^α, the connection along direction `p`.
    pub fn contract(&self, p: &Vector4<f64>) -> Matrix4<f64> {
        let mut a = Matrix4::zeros();
        for mu in 0..4 {
            for beta in 0..4 {
                let mut s = 0.0;
                for alpha in 0..4 {
                    s += self.0[mu][alpha][beta] * p[alpha];
                }
                a[(mu, beta)] = s;
            }
        }
        a
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_symmetric(&self) -> bool {
        (0..4).all(|mu| (0..4).all(|a| (0..4).all(|b| self.0[mu][a][b] == self.0[mu][b][a])))
    }
}

/// Fourth-order central-difference step along coordinate `i`.
pub(crate) fn fd_step(x: &Coords, i: usize, scale: f64) -> Result<f64, GeometryError> {
    let h = scale * x[i].abs().max(1.0);
    if (x[i] + h) - x[i] == 0.0 {
        return Err(GeometryError::NumericalDerivativeFailure(format!(
            "step {h:e} underflows at coordinate {i} = {}",
            x[i]
        )));
    }
    Ok(h)
}

/// ∂_i of a matrix-valued function by fourth-order central differences.
pub(crate) fn central_derivative<F>(f: F, x: &Coords, i: usize, scale: f64) -> Result<Matrix4<f64>, GeometryError>
where
    F: Fn(&Coords) -> Result<Matrix4<f64>, GeometryError>,
{
    let h = fd_step(x, i, scale)?;
    let shifted = |k: f64| {
        let mut y = *x;
        y[i] += k * h;
        f(&y)
    };
    let (m2, m1, p1, p2) = (shifted(-2.0)?, shifted(-1.0)?, shifted(1.0)?, shifted(2.0)?);
    Ok((m2 - p2 + (p1 - m1) * 8.0) / (12.0 * h))
}

/// Builds Γ from the metric and its first derivatives `dg[λ] = ∂_λ γ`.
pub(crate) fn from_metric_derivatives(
    g: &Matrix4<f64>,
    dg: &[Matrix4<f64>; 4],
    x: &Coords,
) -> Result<Christoffel, GeometryError> {
    let ginv = inverse(g, x)?;
    let mut gamma = Christoffel::zero();
    for mu in 0..4 {
        for a in 0..4 {
            for b in a..4 {
                let mut s = 0.0;
                for nu in 0..4 {
                    s += ginv[(mu, nu)] * (dg[a][(nu, b)] + dg[b][(nu, a)] - dg[nu][(a, b)]);
                }
                gamma.set_sym(mu, a, b, 0.5 * s);
            }
        }
    }
    Ok(gamma)
}

/// Γ from fourth-order central differences of γ_μν, step
/// `1e-5 · max(1, |x^λ|)` along each coordinate.
pub fn finite_difference_christoffel<M: Metric + ?Sized>(
    metric: &M,
    x: &Coords,
) -> Result<Christoffel, GeometryError> {
    let g = metric.components(x)?;
    let f = |y: &Coords| metric.components(y);
    let dg = [
        central_derivative(f, x, 0, 1e-5)?,
        central_derivative(f, x, 1, 1e-5)?,
        central_derivative(f, x, 2, 1e-5)?,
        central_derivative(f, x, 3, 1e-5)?,
    ];
    from_metric_derivatives(&g, &dg, x)
}
