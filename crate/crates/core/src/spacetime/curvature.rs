use super::christoffel::fd_step;
use super::{inverse, Christoffel, Coords, GeometryError, Metric};

type Riemann = [[[[f64; 4]; 4]; 4]; 4];

/// R^ρ_σμν from Γ and its derivatives `dgamma[λ] = ∂_λ Γ`.
fn riemann(gamma: &Christoffel, dgamma: &[Christoffel; 4]) -> Riemann {
    let mut r = [[[[0.0; 4]; 4]; 4]; 4];
    for rho in 0..4 {
        for sigma in 0..4 {
            for mu in 0..4 {
                for nu in (mu + 1)..4 {
                    let mut v = dgamma[mu].get(rho, nu, sigma) - dgamma[nu].get(rho, mu, sigma);
                    for lam in 0..4 {
                        v += gamma.get(rho, mu, lam) * gamma.get(lam, nu, sigma)
                            - gamma.get(rho, nu, lam) * gamma.get(lam, mu, sigma);
                    }
                    r[rho][sigma][mu][nu] = v;
                    r[rho][sigma][nu][mu] = -v;
                }
            }
        }
    }
    r
}

fn christoffel_derivatives<M: Metric + ?Sized>(
    metric: &M,
    x: &Coords,
) -> Result<[Christoffel; 4], GeometryError> {
    let mut out = [Christoffel::zero(); 4];
    for (lam, slot) in out.iter_mut().enumerate() {
        let h = fd_step(x, lam, 1e-3)?;
        let at = |k: f64| {
            let mut y = *x;
            y[lam] += k * h;
            metric.christoffel_at(&y)
        };
        let (m2, m1, p1, p2) = (at(-2.0)?, at(-1.0)?, at(1.0)?, at(2.0)?);
        for mu in 0..4 {
            for a in 0..4 {
                for b in 0..4 {
                    slot.0[mu][a][b] = (m2.0[mu][a][b] - p2.0[mu][a][b]
                        + 8.0 * (p1.0[mu][a][b] - m1.0[mu][a][b]))
                        / (12.0 * h);
                }
            }
        }
    }
    Ok(out)
}

/// Kretschmann scalar from finite differences of the metric's Christoffel
/// symbols (fourth-order central differences, step `1e-3 · max(1, |x^λ|)`).
pub fn numeric_kretschmann<M: Metric + ?Sized>(metric: &M, x: &Coords) -> Result<f64, GeometryError> {
    let g = metric.components(x)?;
    let gamma = metric.christoffel_at(x)?;
    let dgamma = christoffel_derivatives(metric, x)?;
    let r = riemann(&gamma, &dgamma);
    Ok(riemann_contravariant_norm(&g, &inverse(&g, x)?, &r))
}

/// R_ρσμν R^ρσμν given R^ρ_σμν.
pub(crate) fn riemann_contravariant_norm(
    g: &nalgebra::Matrix4<f64>,
    ginv: &nalgebra::Matrix4<f64>,
    r: &[[[[f64; 4]; 4]; 4]; 4],
) -> f64 {
    // lower the first index
    let mut low = [[[[0.0; 4]; 4]; 4]; 4];
    // raise the last three
    let mut up = [[[[0.0; 4]; 4]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let mut s = 0.0;
                    for k in 0..4 {
                        s += g[(a, k)] * r[k][b][c][d];
                    }
                    low[a][b][c][d] = s;
                }
            }
        }
    }
    // R^{a b c d} = g^{b i} g^{c j} g^{d k} R^a_{ijk}; built one index at a time.
    let mut t1 = [[[[0.0; 4]; 4]; 4]; 4];
    let mut t2 = [[[[0.0; 4]; 4]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    t1[a][b][c][d] = (0..4).map(|k| ginv[(d, k)] * r[a][b][c][k]).sum();
                }
            }
        }
    }
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    t2[a][b][c][d] = (0..4).map(|k| ginv[(c, k)] * t1[a][b][k][d]).sum();
                }
            }
        }
    }
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    up[a][b][c][d] = (0..4).map(|k| ginv[(b, k)] * t2[a][k][c][d]).sum();
                }
            }
        }
    }
    let mut k = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    k += low[a][b][c][d] * up[a][b][c][d];
                }
            }
        }
    }
    k
}
