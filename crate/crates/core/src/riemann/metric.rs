//! Metric tensor fields in a single coordinate chart.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::expr::{self, Expr};
use crate::linalg;
use crate::sigma::{Point, SigmaSpace};

/// A smooth field of symmetric, non-degenerate matrices `g_ik(x)`.
pub trait MetricField: Send + Sync {
    fn dim(&self) -> usize;

    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>>;

    /// `∂_l g_ik` as one matrix per coordinate `l`. Central differences unless
    /// the field knows better.
    fn metric_partials(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let mut out = Vec::with_capacity(x.len());
        let mut y = x.to_vec();
        for l in 0..x.len() {
            let h = 1e-5 * x[l].abs().max(1.0);
            y[l] = x[l] + h;
            let plus = self.metric(&y)?;
            y[l] = x[l] - h;
            let minus = self.metric(&y)?;
            y[l] = x[l];
            out.push((plus - minus) / (2.0 * h));
        }
        Ok(out)
    }

    /// Rejects points outside the chart.
    fn validate(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::DomainMismatch(format!("expected {} finite coordinates", self.dim())));
        }
        Ok(())
    }

    /// Coordinate periods (e.g. azimuth on the sphere), `None` when not periodic.
    fn periods(&self) -> Vec<Option<f64>> {
        vec![None; self.dim()]
    }

    /// Radius of an open disk about the origin that paths must avoid.
    fn excluded_disk(&self) -> Option<f64> {
        None
    }

    /// Starting polyline with `m + 1` nodes; the straight chord by default.
    fn initial_path(&self, x: &[f64], x2: &[f64], m: usize) -> Vec<Vec<f64>> {
        chord(x, x2, m)
    }
}

pub(crate) fn chord(x: &[f64], x2: &[f64], m: usize) -> Vec<Vec<f64>> {
    (0..=m)
        .map(|j| {
            let t = j as f64 / m as f64;
            x.iter().zip(x2).map(|(a, b)| a + t * (b - a)).collect()
        })
        .collect()
}

fn check_len(x: &[f64], dim: usize) -> Result<()> {
    if x.len() != dim || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::DomainMismatch(format!("expected {dim} finite coordinates, got {x:?}")));
    }
    Ok(())
}

/// Flat metric with constant components.
#[derive(Debug, Clone)]
pub struct ConstantMetric {
    g: DMatrix<f64>,
}

impl ConstantMetric {
    pub fn new(g: DMatrix<f64>) -> Self {
        Self { g }
    }

    pub fn euclidean(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim))
    }
}

impl MetricField for ConstantMetric {
    fn dim(&self) -> usize {
        self.g.nrows()
    }

    fn metric(&self, _x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.g.clone())
    }

    fn metric_partials(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let n = self.dim();
        Ok(vec![DMatrix::zeros(n, n); x.len()])
    }
}

/// Round sphere of radius R in (θ, φ): `R²·diag(1, sin²θ)`, chart θ ∈ (0, π).
#[derive(Debug, Clone, Copy)]
pub struct SphereMetric {
    pub radius: f64,
}

impl SphereMetric {
    pub fn new(radius: f64) -> Self {
        Self { radius }
    }
}

impl MetricField for SphereMetric {
    fn dim(&self) -> usize {
        2
    }

    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let r2 = self.radius * self.radius;
        let s = x[0].sin();
        if s.abs() < 1e-12 {
            return Err(Error::SingularMetric { at: x.to_vec() });
        }
        Ok(DMatrix::from_row_slice(2, 2, &[r2, 0.0, 0.0, r2 * s * s]))
    }

    fn metric_partials(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let r2 = self.radius * self.radius;
        let (s, c) = x[0].sin_cos();
        Ok(vec![
            DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 2.0 * r2 * s * c]),
            DMatrix::zeros(2, 2),
        ])
    }

    fn validate(&self, x: &[f64]) -> Result<()> {
        check_len(x, 2)?;
        if !(x[0] > 0.0 && x[0] < PI) {
            return Err(Error::ChartBoundary { at: x.to_vec() });
        }
        Ok(())
    }

    fn periods(&self) -> Vec<Option<f64>> {
        vec![None, Some(2.0 * PI)]
    }
}

/// Conformally flat metric `(1 + k|x|²)·I`.
#[derive(Debug, Clone, Copy)]
pub struct ConformalMetric {
    pub dim: usize,
    pub k: f64,
}

impl ConformalMetric {
    pub fn new(dim: usize, k: f64) -> Self {
        Self { dim, k }
    }

    pub fn factor(&self, x: &[f64]) -> f64 {
        1.0 + self.k * linalg::dot(x, x)
    }
}

impl MetricField for ConformalMetric {
    fn dim(&self) -> usize {
        self.dim
    }

    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let f = self.factor(x);
        if f <= 0.0 {
            return Err(Error::SingularMetric { at: x.to_vec() });
        }
        Ok(DMatrix::identity(self.dim, self.dim) * f)
    }

    fn metric_partials(&self, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        Ok(x.iter().map(|&v| DMatrix::identity(self.dim, self.dim) * (2.0 * self.k * v)).collect())
    }
}

/// Metric whose components are parsed expressions in `x1..xn`.
#[derive(Debug, Clone)]
pub struct ExprMetric {
    dim: usize,
    components: Vec<Vec<Expr>>,
}

impl ExprMetric {
    /// Accepts either full `n×n` rows or the upper triangle (row `i` holding
    /// entries `i..n`). Full rows must be symmetric: mirrored entries have to
    /// agree in canonical form.
    pub fn from_strings(dim: usize, rows: &[Vec<String>]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpec("dimension must be positive".into()));
        }
        if rows.len() != dim {
            return Err(Error::InvalidSpec(format!("expected {dim} metric rows, got {}", rows.len())));
        }
        let full = rows.iter().all(|r| r.len() == dim);
        let upper = rows.iter().enumerate().all(|(i, r)| r.len() == dim - i);
        if !full && !upper {
            return Err(Error::InvalidSpec("metric rows must be full or upper-triangular".into()));
        }
        let mut components = vec![vec![Expr::Num(0.0); dim]; dim];
        for (i, row) in rows.iter().enumerate() {
            let offset = if full { 0 } else { i };
            for (j, src) in row.iter().enumerate() {
                components[i][j + offset] = expr::parse(src, dim)?;
            }
        }
        for i in 0..dim {
            for k in 0..i {
                if full {
                    if components[i][k].to_string() != components[k][i].to_string() {
                        return Err(Error::InvalidSpec(format!(
                            "metric is not symmetric: g{}{} = {} but g{}{} = {}",
                            i + 1,
                            k + 1,
                            components[i][k],
                            k + 1,
                            i + 1,
                            components[k][i]
                        )));
                    }
                } else {
                    components[i][k] = components[k][i].clone();
                }
            }
        }
        Ok(Self { dim, components })
    }

    pub fn components(&self) -> &[Vec<Expr>] {
        &self.components
    }
}

impl MetricField for ExprMetric {
    fn dim(&self) -> usize {
        self.dim
    }

    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let mut g = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for k in i..self.dim {
                let v = expr::eval(&self.components[i][k], x)?;
                g[(i, k)] = v;
                g[(k, i)] = v;
            }
        }
        if linalg::determinant(&g).abs() <= 1e-300 {
            return Err(Error::SingularMetric { at: x.to_vec() });
        }
        Ok(g)
    }
}

/// Flat plane with the open disk of radius `a` removed.
#[derive(Debug, Clone, Copy)]
pub struct PuncturedPlaneMetric {
    pub hole_radius: f64,
}

impl PuncturedPlaneMetric {
    pub fn new(hole_radius: f64) -> Self {
        Self { hole_radius }
    }
}

impl MetricField for PuncturedPlaneMetric {
    fn dim(&self) -> usize {
        2
    }

    fn metric(&self, _x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(DMatrix::identity(2, 2))
    }

    fn metric_partials(&self, _x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        Ok(vec![DMatrix::zeros(2, 2); 2])
    }

    fn validate(&self, x: &[f64]) -> Result<()> {
        check_len(x, 2)?;
        if linalg::norm(x) < self.hole_radius {
            return Err(Error::PointInsideHole { point: x.to_vec(), radius: self.hole_radius });
        }
        Ok(())
    }

    fn excluded_disk(&self) -> Option<f64> {
        Some(self.hole_radius)
    }

    /// The chord, with nodes inside the hole lifted onto the boundary on the
    /// side of the chord away from the centre.
    fn initial_path(&self, x: &[f64], x2: &[f64], m: usize) -> Vec<Vec<f64>> {
        let a = self.hole_radius;
        let mut nodes = chord(x, x2, m);
        let d = linalg::sub(x2, x);
        let len = linalg::norm(&d);
        if len == 0.0 {
            return nodes;
        }
        let t = [d[0] / len, d[1] / len];
        let along = linalg::dot(x, &t);
        let foot = [x[0] - along * t[0], x[1] - along * t[1]];
        let off = linalg::norm(&foot);
        let side = if off > 1e-12 * a { [foot[0] / off, foot[1] / off] } else { [-t[1], t[0]] };
        for p in nodes.iter_mut() {
            if linalg::norm(p) < a {
                let s = linalg::dot(p, &t);
                let h = (a * a - s * s).max(0.0).sqrt();
                p[0] = s * t[0] + h * side[0];
                p[1] = s * t[1] + h * side[1];
            }
        }
        nodes
    }
}

/// Metric read off a world function at coincidence, `g_ik(x) = ∂_i∂_k σ(x, x′)|_{x′=x}`,
/// by central differences. Lets tangent-space checks run from σ alone.
pub struct CoincidenceMetric<S> {
    space: S,
    dim: usize,
    step: f64,
}

impl<S: SigmaSpace> CoincidenceMetric<S> {
    pub fn new(space: S, dim: usize) -> Self {
        Self { space, dim, step: 1e-4 }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }
}

impl<S: SigmaSpace> MetricField for CoincidenceMetric<S> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let base = Point::Coords(x.to_vec());
        let h: Vec<f64> = x.iter().map(|v| self.step * v.abs().max(1.0)).collect();
        let s = |y: Vec<f64>| self.space.world_function(&Point::Coords(y), &base);
        let n = self.dim;
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for k in i..n {
                let v = if i == k {
                    let mut p = x.to_vec();
                    p[i] += h[i];
                    let mut q = x.to_vec();
                    q[i] -= h[i];
                    (s(p)? + s(q)?) / (h[i] * h[i])
                } else {
                    let mut acc = 0.0;
                    for (si, sk) in [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)] {
                        let mut p = x.to_vec();
                        p[i] += si * h[i];
                        p[k] += sk * h[k];
                        acc += si * sk * s(p)?;
                    }
                    acc / (4.0 * h[i] * h[k])
                };
                g[(i, k)] = v;
                g[(k, i)] = v;
            }
        }
        Ok(g)
    }
}

/// `γ^i_kl` at `x`; `out[i][(k, l)]`.
pub fn christoffel(metric: &dyn MetricField, x: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    let g = metric.metric(x)?;
    let inv = g.try_inverse().ok_or_else(|| Error::SingularMetric { at: x.to_vec() })?;
    let dg = metric.metric_partials(x)?;
    let n = metric.dim();
    let mut out = vec![DMatrix::zeros(n, n); n];
    for (i, gi) in out.iter_mut().enumerate() {
        for k in 0..n {
            for l in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += inv[(i, j)] * (dg[l][(k, j)] + dg[k][(l, j)] - dg[j][(k, l)]);
                }
                gi[(k, l)] = 0.5 * acc;
            }
        }
    }
    Ok(out)
}
