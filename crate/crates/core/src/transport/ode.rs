//! Explicit Runge–Kutta steppers over flat `f64` state slices.

use crate::spacetime::GeometryError;

pub(crate) trait Rhs {
    fn eval(&mut self, y: &[f64], dy: &mut [f64]) -> Result<(), GeometryError>;
}

impl<F> Rhs for F
where
    F: FnMut(&[f64], &mut [f64]) -> Result<(), GeometryError>,
{
    fn eval(&mut self, y: &[f64], dy: &mut [f64]) -> Result<(), GeometryError> {
        self(y, dy)
    }
}

fn axpy(out: &mut [f64], y: &[f64], terms: &[(f64, &[f64])], h: f64) {
    for i in 0..y.len() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] = y[i] + h * acc;
    }
}

/// Classical fourth-order step.
pub(crate) fn rk4_step<R: Rhs>(f: &mut R, y: &[f64], h: f64) -> Result<Vec<f64>, GeometryError> {
    let n = y.len();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    f.eval(y, &mut k1)?;
    axpy(&mut tmp, y, &[(0.5, &k1)], h);
    f.eval(&tmp, &mut k2)?;
    axpy(&mut tmp, y, &[(0.5, &k2)], h);
    f.eval(&tmp, &mut k3)?;
    axpy(&mut tmp, y, &[(1.0, &k3)], h);
    f.eval(&tmp, &mut k4)?;
    let mut out = vec![0.0; n];
    for i in 0..n {
        out[i] = y[i] + h * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
    }
    Ok(out)
}

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// One Dormand–Prince step: fifth-order solution and the difference to the
/// embedded fourth-order solution.
pub(crate) fn dp45_step<R: Rhs>(
    f: &mut R,
    y: &[f64],
    h: f64,
) -> Result<(Vec<f64>, Vec<f64>), GeometryError> {
    let n = y.len();
    let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; n]).collect();
    let mut tmp = vec![0.0; n];
    f.eval(y, &mut k[0])?;
    axpy(&mut tmp, y, &[(A21, &k[0])], h);
    f.eval(&tmp, &mut k[1])?;
    axpy(&mut tmp, y, &[(A31, &k[0]), (A32, &k[1])], h);
    f.eval(&tmp, &mut k[2])?;
    axpy(&mut tmp, y, &[(A41, &k[0]), (A42, &k[1]), (A43, &k[2])], h);
    f.eval(&tmp, &mut k[3])?;
    axpy(
        &mut tmp,
        y,
        &[(A51, &k[0]), (A52, &k[1]), (A53, &k[2]), (A54, &k[3])],
        h,
    );
    f.eval(&tmp, &mut k[4])?;
    axpy(
        &mut tmp,
        y,
        &[(A61, &k[0]), (A62, &k[1]), (A63, &k[2]), (A64, &k[3]), (A65, &k[4])],
        h,
    );
    f.eval(&tmp, &mut k[5])?;
    let mut out = vec![0.0; n];
    axpy(
        &mut out,
        y,
        &[(B1, &k[0]), (B3, &k[2]), (B4, &k[3]), (B5, &k[4]), (B6, &k[5])],
        h,
    );
    f.eval(&out, &mut k[6])?;
    let err = (0..n)
        .map(|i| {
            h * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i]
                + E7 * k[6][i])
        })
        .collect();
    Ok((out, err))
}
