//! Built-in backgrounds.

use nalgebra::{Matrix4, Vector4};

use super::{Chart, Christoffel, Coords, GeometryError, Metric};

fn check_radius(rs: f64) -> Result<f64, GeometryError> {
    if rs.is_finite() && rs >= 0.0 {
        Ok(rs)
    } else {
        Err(GeometryError::InvalidParameter {
            name: "rs".into(),
            value: rs,
            rule: "Schwarzschild radius must be finite and non-negative".into(),
        })
    }
}

fn outside(metric: &str, reason: String) -> GeometryError {
    GeometryError::OutsideChartDomain {
        metric: metric.to_string(),
        reason,
    }
}

fn check_finite(metric: &str, x: &Coords) -> Result<(), GeometryError> {
    if x.iter().all(|c| c.is_finite()) {
        Ok(())
    } else {
        Err(outside(metric, format!("non-finite coordinates {:?}", x.as_slice())))
    }
}

/// Flat spacetime in Cartesian coordinates.
#[derive(Debug, Clone, Copy, Default)]
pub struct Minkowski;

impl Metric for Minkowski {
    fn name(&self) -> &str {
        "minkowski"
    }

    fn chart(&self) -> Chart {
        Chart::Cartesian
    }

    fn parameters(&self) -> Vec<(String, f64)> {
        Vec::new()
    }

    fn components(&self, x: &Coords) -> Result<Matrix4<f64>, GeometryError> {
        check_finite("minkowski", x)?;
        Ok(super::eta())
    }

    fn christoffel_at(&self, x: &Coords) -> Result<Christoffel, GeometryError> {
        check_finite("minkowski", x)?;
        Ok(Christoffel::zero())
    }

    fn kretschmann_at(&self, x: &Coords) -> Result<f64, GeometryError> {
        check_finite("minkowski", x)?;
        Ok(0.0)
    }
}

/// Schwarzschild exterior in Schwarzschild coordinates `(t, r, θ, φ)`.
#[derive(Debug, Clone, Copy)]
pub struct Schwarzschild {
    rs: f64,
}

impl Schwarzschild {
    pub fn new(rs: f64) -> Result<Self, GeometryError> {
        Ok(Self { rs: check_radius(rs)? })
    }

    pub fn rs(&self) -> f64 {
        self.rs
    }

    fn check(&self, x: &Coords) -> Result<(), GeometryError> {
        check_finite("schwarzschild", x)?;
        let (r, th) = (x[1], x[2]);
        if !(r > self.rs) || r <= 0.0 {
            return Err(outside(
                "schwarzschild",
                format!("r = {r} is not outside the horizon r_s = {}", self.rs),
            ));
        }
        if th.sin().abs() < 1e-12 {
            return Err(outside(
                "schwarzschild",
                format!("θ = {th} sits on the polar coordinate singularity"),
            ));
        }
        Ok(())
    }
}

impl Metric for Schwarzschild {
    fn name(&self) -> &str {
        "schwarzschild"
    }

    fn chart(&self) -> Chart {
        Chart::Schwarzschild
    }

    fn parameters(&self) -> Vec<(String, f64)> {
        vec![("rs".into(), self.rs)]
    }

    fn components(&self, x: &Coords) -> Result<Matrix4<f64>, GeometryError> {
        self.check(x)?;
        let (r, th) = (x[1], x[2]);
        let f = 1.0 - self.rs / r;
        let s = th.sin();
        Ok(Matrix4::from_diagonal(&Vector4::new(
            f,
            -1.0 / f,
            -r * r,
            -r * r * s * s,
        )))
    }

    fn christoffel_at(&self, x: &Coords) -> Result<Christoffel, GeometryError> {
        self.check(x)?;
        let rs = self.rs;
        let (r, th) = (x[1], x[2]);
        let f = 1.0 - rs / r;
        let (s, c) = th.sin_cos();
        let mut g = Christoffel::zero();
        g.set_sym(0, 0, 1, rs / (2.0 * r * r * f));
        g.set_sym(1, 0, 0, rs * f / (2.0 * r * r));
        g.set_sym(1, 1, 1, -rs / (2.0 * r * r * f));
        g.set_sym(1, 2, 2, -r * f);
        g.set_sym(1, 3, 3, -r * f * s * s);
        g.set_sym(2, 1, 2, 1.0 / r);
        g.set_sym(2, 3, 3, -s * c);
        g.set_sym(3, 1, 3, 1.0 / r);
        g.set_sym(3, 2, 3, c / s);
        Ok(g)
    }

    fn kretschmann_at(&self, x: &Coords) -> Result<f64, GeometryError> {
        self.check(x)?;
        Ok(12.0 * self.rs * self.rs / x[1].powi(6))
    }
}

/// Static, spatially conformally flat metric diag(A(ρ), −B(ρ), −B(ρ), −B(ρ))
/// in Cartesian-type coordinates, ρ = |x|. Supplies the shared Christoffel
/// formulas for the isotropic Schwarzschild and weak-field metrics.
fn isotropic_christoffel(x: &Coords, a: f64, da: f64, b: f64, db: f64) -> Christoffel {
    let rho = (x[1] * x[1] + x[2] * x[2] + x[3] * x[3]).sqrt();
    let n = [x[1] / rho, x[2] / rho, x[3] / rho];
    let mut g = Christoffel::zero();
    for i in 0..3 {
        g.set_sym(0, 0, i + 1, da * n[i] / (2.0 * a));
        g.set_sym(i + 1, 0, 0, da * n[i] / (2.0 * b));
    }
    let k = db / (2.0 * b);
    for i in 0..3 {
        for j in 0..3 {
            for l in j..3 {
                let mut v = 0.0;
                if i == l {
                    v += n[j];
                }
                if i == j {
                    v += n[l];
                }
                if j == l {
                    v -= n[i];
                }
                if v != 0.0 {
                    g.set_sym(i + 1, j + 1, l + 1, k * v);
                }
            }
        }
    }
    g
}

fn radius3(x: &Coords) -> f64 {
    (x[1] * x[1] + x[2] * x[2] + x[3] * x[3]).sqrt()
}

/// Schwarzschild exterior in isotropic coordinates `(t, x, y, z)`.
///
/// ds² = ((1 − q)/(1 + q))² dt² − (1 + q)⁴ (dx² + dy² + dz²),  q = r_s/(4ρ).
#[derive(Debug, Clone, Copy)]
pub struct IsotropicSchwarzschild {
    rs: f64,
}

impl IsotropicSchwarzschild {
    pub fn new(rs: f64) -> Result<Self, GeometryError> {
        Ok(Self { rs: check_radius(rs)? })
    }

    pub fn rs(&self) -> f64 {
        self.rs
    }

    fn profile(&self, x: &Coords) -> Result<(f64, f64, f64, f64, f64), GeometryError> {
        check_finite("schwarzschild", x)?;
        let rho = radius3(x);
        if self.rs == 0.0 {
            return Ok((rho, 1.0, 0.0, 1.0, 0.0));
        }
        if !(rho > self.rs / 4.0) {
            return Err(outside(
                "schwarzschild",
                format!("isotropic radius {rho} is not outside the horizon ρ = r_s/4"),
            ));
        }
        let q = self.rs / (4.0 * rho);
        let ratio = (1.0 - q) / (1.0 + q);
        let a = ratio * ratio;
        let da = 4.0 * q * (1.0 - q) / (rho * (1.0 + q).powi(3));
        let b = (1.0 + q).powi(4);
        let db = -4.0 * q * (1.0 + q).powi(3) / rho;
        Ok((rho, a, da, b, db))
    }

    /// Areal (Schwarzschild) radius of an isotropic radius.
    pub fn areal_radius(&self, rho: f64) -> f64 {
        rho * (1.0 + self.rs / (4.0 * rho)).powi(2)
    }
}

impl Metric for IsotropicSchwarzschild {
    fn name(&self) -> &str {
        "schwarzschild"
    }

    fn chart(&self) -> Chart {
        Chart::Isotropic
    }

    fn parameters(&self) -> Vec<(String, f64)> {
        vec![("rs".into(), self.rs)]
    }

    fn components(&self, x: &Coords) -> Result<Matrix4<f64>, GeometryError> {
        let (_, a, _, b, _) = self.profile(x)?;
        Ok(Matrix4::from_diagonal(&Vector4::new(a, -b, -b, -b)))
    }

    fn christoffel_at(&self, x: &Coords) -> Result<Christoffel, GeometryError> {
        let (_, a, da, b, db) = self.profile(x)?;
        if self.rs == 0.0 {
            return Ok(Christoffel::zero());
        }
        Ok(isotropic_christoffel(x, a, da, b, db))
    }

    fn kretschmann_at(&self, x: &Coords) -> Result<f64, GeometryError> {
        let (rho, ..) = self.profile(x)?;
        if self.rs == 0.0 {
            return Ok(0.0);
        }
        Ok(12.0 * self.rs * self.rs / self.areal_radius(rho).powi(6))
    }
}

/// Weak-field lensing metric γ = η + diag(2Φ, 2Φ, 2Φ, 2Φ), Φ = −r_s/(2r).
#[derive(Debug, Clone, Copy)]
pub struct WeakField {
    rs: f64,
}

impl WeakField {
    pub fn new(rs: f64) -> Result<Self, GeometryError> {
        Ok(Self { rs: check_radius(rs)? })
    }

    pub fn rs(&self) -> f64 {
        self.rs
    }

    fn profile(&self, x: &Coords) -> Result<(f64, f64, f64, f64), GeometryError> {
        check_finite("weak-field", x)?;
        if self.rs == 0.0 {
            return Ok((1.0, 0.0, 1.0, 0.0));
        }
        let r = radius3(x);
        if !(r > self.rs) {
            return Err(outside(
                "weak-field",
                format!("r = {r} is inside r_s = {} where g_00 ≤ 0", self.rs),
            ));
        }
        let u = self.rs / r;
        Ok((1.0 - u, u / r, 1.0 + u, -u / r))
    }
}

impl Metric for WeakField {
    fn name(&self) -> &str {
        "weak-field"
    }

    fn chart(&self) -> Chart {
        Chart::Cartesian
    }

    fn parameters(&self) -> Vec<(String, f64)> {
        vec![("rs".into(), self.rs)]
    }

    fn components(&self, x: &Coords) -> Result<Matrix4<f64>, GeometryError> {
        let (a, _, b, _) = self.profile(x)?;
        Ok(Matrix4::from_diagonal(&Vector4::new(a, -b, -b, -b)))
    }

    fn christoffel_at(&self, x: &Coords) -> Result<Christoffel, GeometryError> {
        let (a, da, b, db) = self.profile(x)?;
        if self.rs == 0.0 {
            return Ok(Christoffel::zero());
        }
        Ok(isotropic_christoffel(x, a, da, b, db))
    }
}
