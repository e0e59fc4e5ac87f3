use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Matrix4;

use super::{Chart, Coords, GeometryError, Metric};

/// Order of the ten independent components in a grid row.
const COMPONENTS: [(usize, usize); 10] = [
    (0, 0),
    (0, 1),
    (0, 2),
    (0, 3),
    (1, 1),
    (1, 2),
    (1, 3),
    (2, 2),
    (2, 3),
    (3, 3),
];

/// A metric sampled on a rectilinear 4-D grid.
///
/// Rows hold `x⁰ x¹ x² x³ g00 g01 g02 g03 g11 g12 g13 g22 g23 g33`. Values
/// between nodes come from tensor-product Lagrange interpolation (cubic where
/// an axis has at least four nodes). Christoffel symbols are obtained by
/// finite differences of the interpolant.
#[derive(Debug, Clone)]
pub struct GridMetric {
    name: String,
    chart: Chart,
    axes: [Vec<f64>; 4],
    values: Vec<[f64; 10]>,
}

fn grid_err(line: usize, message: impl Into<String>) -> GeometryError {
    GeometryError::GridFile {
        line,
        message: message.into(),
    }
}

impl GridMetric {
    pub fn from_file(path: &Path, chart: Chart) -> Result<Self, GeometryError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| grid_err(0, format!("cannot read {}: {e}", path.display())))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "grid".to_string());
        Self::parse(&name, chart, &text)
    }

    pub fn parse(name: &str, chart: Chart, text: &str) -> Result<Self, GeometryError> {
        let mut rows: Vec<(usize, [f64; 4], [f64; 10])> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let nums: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| grid_err(i + 1, format!("bad number: {e}")))?;
            if nums.len() != 14 {
                return Err(grid_err(i + 1, format!("expected 14 numbers, found {}", nums.len())));
            }
            if nums.iter().any(|v| !v.is_finite()) {
                return Err(grid_err(i + 1, "non-finite value"));
            }
            let mut x = [0.0; 4];
            x.copy_from_slice(&nums[..4]);
            let mut g = [0.0; 10];
            g.copy_from_slice(&nums[4..]);
            rows.push((i + 1, x, g));
        }
        if rows.is_empty() {
            return Err(grid_err(0, "no grid rows"));
        }

        let mut axes: [Vec<f64>; 4] = Default::default();
        for (k, axis) in axes.iter_mut().enumerate() {
            let mut v: Vec<f64> = rows.iter().map(|r| r.1[k]).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            *axis = v;
        }
        let total: usize = axes.iter().map(Vec::len).product();
        if total != rows.len() {
            return Err(grid_err(
                0,
                format!(
                    "{} rows do not form a full {}x{}x{}x{} grid",
                    rows.len(),
                    axes[0].len(),
                    axes[1].len(),
                    axes[2].len(),
                    axes[3].len()
                ),
            ));
        }

        let lookup: [HashMap<u64, usize>; 4] = std::array::from_fn(|k| {
            axes[k]
                .iter()
                .enumerate()
                .map(|(i, v)| (v.to_bits(), i))
                .collect()
        });
        let mut values = vec![[f64::NAN; 10]; total];
        let mut seen = vec![false; total];
        for (line, x, g) in &rows {
            let idx: [usize; 4] = std::array::from_fn(|k| lookup[k][&x[k].to_bits()]);
            let flat = flat_index(&axes, &idx);
            if seen[flat] {
                return Err(grid_err(*line, "duplicate grid node"));
            }
            seen[flat] = true;
            values[flat] = *g;
        }
        Ok(Self {
            name: name.to_string(),
            chart,
            axes,
            values,
        })
    }

    pub fn axes(&self) -> &[Vec<f64>; 4] {
        &self.axes
    }

    /// Stencil start and Lagrange weights along one axis.
    fn weights(&self, k: usize, v: f64) -> Result<(usize, Vec<f64>), GeometryError> {
        let nodes = &self.axes[k];
        let (lo, hi) = (nodes[0], nodes[nodes.len() - 1]);
        if v < lo || v > hi {
            return Err(GeometryError::OutsideChartDomain {
                metric: self.name.clone(),
                reason: format!("coordinate {k} = {v} outside grid range [{lo}, {hi}]"),
            });
        }
        let order = nodes.len().min(4);
        if order == 1 {
            return Ok((0, vec![1.0]));
        }
        // index of the cell containing v
        let cell = nodes.partition_point(|&n| n <= v).saturating_sub(1).min(nodes.len() - 2);
        let start = cell
            .saturating_sub((order - 1) / 2)
            .min(nodes.len() - order);
        let stencil = &nodes[start..start + order];
        let w = (0..order)
            .map(|i| {
                (0..order)
                    .filter(|&j| j != i)
                    .map(|j| (v - stencil[j]) / (stencil[i] - stencil[j]))
                    .product()
            })
            .collect();
        Ok((start, w))
    }
}

fn flat_index(axes: &[Vec<f64>; 4], idx: &[usize; 4]) -> usize {
    ((idx[0] * axes[1].len() + idx[1]) * axes[2].len() + idx[2]) * axes[3].len() + idx[3]
}

impl Metric for GridMetric {
    fn name(&self) -> &str {
        &self.name
    }

    fn chart(&self) -> Chart {
        self.chart
    }

    fn parameters(&self) -> Vec<(String, f64)> {
        vec![("nodes".to_string(), self.values.len() as f64)]
    }

    fn components(&self, x: &Coords) -> Result<Matrix4<f64>, GeometryError> {
        let w: Vec<(usize, Vec<f64>)> = (0..4)
            .map(|k| self.weights(k, x[k]))
            .collect::<Result<_, _>>()?;
        let mut acc = [0.0; 10];
        for (a, wa) in w[0].1.iter().enumerate() {
            for (b, wb) in w[1].1.iter().enumerate() {
                for (c, wc) in w[2].1.iter().enumerate() {
                    for (d, wd) in w[3].1.iter().enumerate() {
                        let idx = [w[0].0 + a, w[1].0 + b, w[2].0 + c, w[3].0 + d];
                        let weight = wa * wb * wc * wd;
                        let node = &self.values[flat_index(&self.axes, &idx)];
                        for (slot, v) in acc.iter_mut().zip(node) {
                            *slot += weight * v;
                        }
                    }
                }
            }
        }
        let mut g = Matrix4::zeros();
        for (v, &(i, j)) in acc.iter().zip(COMPONENTS.iter()) {
            g[(i, j)] = *v;
            g[(j, i)] = *v;
        }
        Ok(g)
    }
}

/// Samples `metric` on the tensor grid spanned by `axes` and writes a grid file.
pub fn write_grid_file(
    metric: &dyn Metric,
    axes: &[Vec<f64>; 4],
    path: &Path,
) -> Result<(), GeometryError> {
    let mut out = String::new();
    let _ = writeln!(out, "# {} chart={}", metric.name(), metric.chart());
    for &t in &axes[0] {
        for &a in &axes[1] {
            for &b in &axes[2] {
                for &c in &axes[3] {
                    let x = Coords::new(t, a, b, c);
                    let g = metric.components(&x)?;
                    let _ = write!(out, "{:.16e} {:.16e} {:.16e} {:.16e}", t, a, b, c);
                    for &(i, j) in &COMPONENTS {
                        let _ = write!(out, " {:.16e}", g[(i, j)]);
                    }
                    out.push('\n');
                }
            }
        }
    }
    std::fs::write(path, out).map_err(|e| grid_err(0, format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spacetime::{eta, WeakField};

    fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn flat_grid_reproduces_eta() {
        let mut text = String::new();
        for t in [0.0, 1.0] {
            for x in [-1.0, 0.0, 1.0] {
                text.push_str(&format!("{t} {x} 0 0 1 0 0 0 -1 0 0 -1 0 -1\n"));
            }
        }
        let g = GridMetric::parse("flat", Chart::Cartesian, &text).unwrap();
        let v = g.components(&Coords::new(0.5, 0.3, 0.0, 0.0)).unwrap();
        assert_eq!(v, eta());
        let gamma = g.christoffel_at(&Coords::new(0.5, 0.3, 0.0, 0.0));
        // y, z axes have a single node: the step leaves the grid
        assert!(gamma.is_err());
    }

    #[test]
    fn incomplete_grid_is_rejected() {
        let text = "0 0 0 0 1 0 0 0 -1 0 0 -1 0 -1\n0 1 1 0 1 0 0 0 -1 0 0 -1 0 -1\n";
        assert!(matches!(
            GridMetric::parse("bad", Chart::Cartesian, text),
            Err(GeometryError::GridFile { .. })
        ));
    }

    #[test]
    fn short_row_reports_line() {
        let text = "# header\n0 0 0 0 1\n";
        match GridMetric::parse("bad", Chart::Cartesian, text) {
            Err(GeometryError::GridFile { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sampled_weak_field_interpolates() {
        let m = WeakField::new(1.0).unwrap();
        let axes = [
            linspace(-1.0, 1.0, 4),
            linspace(8.0, 12.0, 41),
            linspace(-2.0, 2.0, 41),
            linspace(-2.0, 2.0, 41),
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("weak.grid");
        write_grid_file(&m, &axes, &path).unwrap();
        let grid = GridMetric::from_file(&path, Chart::Cartesian).unwrap();
        let x = Coords::new(0.1, 10.03, 0.37, -0.52);
        let exact = m.components(&x).unwrap();
        let interp = grid.components(&x).unwrap();
        assert!((exact - interp).abs().max() < 1e-8);
        let ge = m.christoffel_at(&x).unwrap();
        let gi = grid.christoffel_at(&x).unwrap();
        for mu in 0..4 {
            for a in 0..4 {
                for b in 0..4 {
                    assert!((ge.get(mu, a, b) - gi.get(mu, a, b)).abs() < 1e-5);
                }
            }
        }
        assert!(matches!(
            grid.components(&Coords::new(0.0, 20.0, 0.0, 0.0)),
            Err(GeometryError::OutsideChartDomain { .. })
        ));
    }
}
