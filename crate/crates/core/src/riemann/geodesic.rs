//! Geodesics as minimisers of the discrete energy with fixed endpoints.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg;
use crate::sigma::{Domain, Point, SigmaSpace};

use super::metric::{ExprMetric, MetricField};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Number of polyline segments `m` (the path has `m + 1` nodes).
    pub nodes: usize,
    /// Stop when the sup-norm of the energy gradient is below `gtol·max(1, E)`.
    pub gtol: f64,
    pub max_iter: usize,
    /// Combine solves at `m/2` and `m` segments to cancel the O(1/m²) error.
    pub extrapolate: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { nodes: 64, gtol: 1e-9, max_iter: 20_000, extrapolate: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicPath {
    pub nodes: Vec<Vec<f64>>,
    /// Uniform τ grid on [0, 1].
    pub params: Vec<f64>,
    /// Discrete length functional `Σ √(g(mid)(Δx, Δx))`, signed for
    /// indefinite metrics.
    pub length: f64,
    pub energy: f64,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
}

struct Problem<'a> {
    metric: &'a dyn MetricField,
    start: Vec<f64>,
    end: Vec<f64>,
    m: usize,
    n: usize,
    /// Interior nodes are stored as `(s, θ)` with `x = (a + s²)(cos θ, sin θ)`,
    /// which keeps them outside the disk `|x| < a` without constraints.
    disk: Option<f64>,
}

impl Problem<'_> {
    fn encode(&self, nodes: &[Vec<f64>]) -> Vec<f64> {
        let interior = &nodes[1..self.m];
        match self.disk {
            None => interior.iter().flatten().copied().collect(),
            Some(a) => {
                let mut out = Vec::with_capacity(2 * interior.len());
                let mut prev = self.start[1].atan2(self.start[0]);
                for x in interior {
                    let r = linalg::norm(x);
                    let mut t = x[1].atan2(x[0]);
                    t -= 2.0 * PI * ((t - prev) / (2.0 * PI)).round();
                    prev = t;
                    // s = 0 is stationary in s, so never start exactly on the boundary
                    out.push((r - a).max(1e-2 * a).sqrt());
                    out.push(t);
                }
                out
            }
        }
    }

    fn decode(&self, z: &[f64]) -> Vec<f64> {
        match self.disk {
            None => z.to_vec(),
            Some(a) => z
                .chunks(2)
                .flat_map(|c| {
                    let r = a + c[0] * c[0];
                    [r * c[1].cos(), r * c[1].sin()]
                })
                .collect(),
        }
    }

    fn full(&self, z: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity((self.m + 1) * self.n);
        out.extend_from_slice(&self.start);
        out.extend_from_slice(&self.decode(z));
        out.extend_from_slice(&self.end);
        out
    }

    fn feasible(&self, z: &[f64]) -> Result<()> {
        if self.disk.is_some() {
            // outside the disk by construction
            return Ok(());
        }
        for node in self.decode(z).chunks(self.n) {
            self.metric.validate(node)?;
        }
        Ok(())
    }

    /// Energy `m·Σ g(mid)(d, d)` and its gradient with respect to the variables.
    fn energy(&self, z: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (m, n) = (self.m, self.n);
        let full = self.full(z);
        let mut grad = vec![0.0; full.len()];
        let mut e = 0.0;
        let scale = m as f64;
        let mut d = vec![0.0; n];
        let mut mid = vec![0.0; n];
        for j in 0..m {
            let a = &full[j * n..(j + 1) * n];
            let b = &full[(j + 1) * n..(j + 2) * n];
            for i in 0..n {
                d[i] = b[i] - a[i];
                mid[i] = 0.5 * (a[i] + b[i]);
            }
            let g = self.metric.metric(&mid)?;
            let dg = self.metric.metric_partials(&mid)?;
            let mut q = 0.0;
            for i in 0..n {
                let gd: f64 = (0..n).map(|k| g[(i, k)] * d[k]).sum();
                q += d[i] * gd;
                grad[j * n + i] -= scale * 2.0 * gd;
                grad[(j + 1) * n + i] += scale * 2.0 * gd;
            }
            for (l, dgl) in dg.iter().enumerate() {
                let mut dq = 0.0;
                for i in 0..n {
                    for k in 0..n {
                        dq += d[i] * dgl[(i, k)] * d[k];
                    }
                }
                grad[j * n + l] += scale * 0.5 * dq;
                grad[(j + 1) * n + l] += scale * 0.5 * dq;
            }
            e += scale * q;
        }
        let gx = &grad[n..m * n];
        let gz = match self.disk {
            None => gx.to_vec(),
            Some(a) => z
                .chunks(2)
                .zip(gx.chunks(2))
                .flat_map(|(c, g)| {
                    let (sin, cos) = c[1].sin_cos();
                    let r = a + c[0] * c[0];
                    [2.0 * c[0] * (g[0] * cos + g[1] * sin), r * (g[1] * cos - g[0] * sin)]
                })
                .collect(),
        };
        Ok((e, gz))
    }

    fn length(&self, z: &[f64]) -> Result<f64> {
        let (m, n) = (self.m, self.n);
        let full = self.full(z);
        let mut total = 0.0;
        for j in 0..m {
            let a = &full[j * n..(j + 1) * n];
            let b = &full[(j + 1) * n..(j + 2) * n];
            let d = linalg::sub(b, a);
            let mid: Vec<f64> = a.iter().zip(b).map(|(p, q)| 0.5 * (p + q)).collect();
            let q = linalg::to_dvector(&d).dot(&(self.metric.metric(&mid)? * linalg::to_dvector(&d)));
            total += q.signum() * q.abs().sqrt();
        }
        Ok(total)
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

struct Outcome {
    z: Vec<f64>,
    energy: f64,
    iterations: usize,
    gradient_norm: f64,
}

/// Limited-memory BFGS with a backtracking line search that also backs off
/// from points outside the chart.
fn lbfgs(p: &Problem, mut z: Vec<f64>, opts: &SolverOptions) -> Result<Outcome> {
    const MEMORY: usize = 8;
    let (mut f, mut g) = p.energy(&z)?;
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(MEMORY);
    let mut boundary_hit: Option<Vec<f64>> = None;
    for it in 0..opts.max_iter {
        let gn = sup_norm(&g);
        if gn <= opts.gtol * f.abs().max(1.0) {
            return Ok(Outcome { z, energy: f, iterations: it, gradient_norm: gn });
        }
        // two-loop recursion
        let mut dir: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut alphas = Vec::with_capacity(mem.len());
        for (s, y, rho) in mem.iter().rev() {
            let a = rho * linalg::dot(s, &dir);
            for (di, yi) in dir.iter_mut().zip(y) {
                *di -= a * yi;
            }
            alphas.push(a);
        }
        let gamma = match mem.back() {
            Some((s, y, _)) => linalg::dot(s, y) / linalg::dot(y, y),
            None => 1.0 / gn.max(1.0),
        };
        for d in dir.iter_mut() {
            *d *= gamma;
        }
        for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
            let b = rho * linalg::dot(y, &dir);
            for (di, si) in dir.iter_mut().zip(s) {
                *di += (a - b) * si;
            }
        }
        let mut slope = linalg::dot(&g, &dir);
        if slope >= 0.0 {
            mem.clear();
            dir = g.iter().map(|v| -v / gn.max(1.0)).collect();
            slope = linalg::dot(&g, &dir);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = z.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            match p.feasible(&trial).and_then(|_| p.energy(&trial)) {
                Ok((ft, gt)) => {
                    // Armijo, or the approximate Wolfe test once the decrease
                    // drowns in rounding of the energy
                    let new_slope = linalg::dot(&gt, &dir);
                    let armijo = ft <= f + 1e-4 * step * slope;
                    let approx = ft <= f + 1e-12 * f.abs() && new_slope >= 0.9 * slope && new_slope <= -0.8 * slope;
                    if armijo || approx {
                        accepted = Some((trial, ft, gt));
                        break;
                    }
                }
                Err(Error::ChartBoundary { at }) | Err(Error::SingularMetric { at }) => boundary_hit = Some(at),
                Err(e) => return Err(e),
            }
            step *= 0.5;
        }
        let Some((zn, fnew, gnew)) = accepted else {
            if !mem.is_empty() {
                mem.clear();
                continue;
            }
            if let Some(at) = boundary_hit {
                return Err(Error::ChartBoundary { at });
            }
            return Err(Error::NonConvergence { iterations: it, gradient_norm: gn });
        };
        let s: Vec<f64> = zn.iter().zip(&z).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = linalg::dot(&s, &y);
        if sy > 1e-12 * linalg::norm(&s) * linalg::norm(&y) {
            if mem.len() == MEMORY {
                mem.pop_front();
            }
            mem.push_back((s, y, 1.0 / sy));
        }
        z = zn;
        f = fnew;
        g = gnew;
    }
    Err(Error::NonConvergence { iterations: opts.max_iter, gradient_norm: sup_norm(&g) })
}

/// Shifts periodic coordinates of `x2` to the image nearest to `x`.
fn nearest_image(metric: &dyn MetricField, x: &[f64], x2: &[f64]) -> Vec<f64> {
    let mut out = x2.to_vec();
    for (i, period) in metric.periods().into_iter().enumerate() {
        if let Some(p) = period {
            out[i] -= p * ((out[i] - x[i]) / p).round();
        }
    }
    out
}

fn solve(metric: &dyn MetricField, x: &[f64], x2: &[f64], m: usize, init: Vec<Vec<f64>>, opts: &SolverOptions) -> Result<GeodesicPath> {
    let n = metric.dim();
    let disk = metric.excluded_disk().filter(|_| n == 2);
    let p = Problem { metric, start: x.to_vec(), end: x2.to_vec(), m, n, disk };
    let z0 = p.encode(&init);
    p.feasible(&z0)?;
    let out = lbfgs(&p, z0, opts)?;
    let length = p.length(&out.z)?;
    let full = p.full(&out.z);
    Ok(GeodesicPath {
        nodes: full.chunks(n).map(<[f64]>::to_vec).collect(),
        params: (0..=m).map(|j| j as f64 / m as f64).collect(),
        length,
        energy: out.energy,
        converged: true,
        iterations: out.iterations,
        gradient_norm: out.gradient_norm,
    })
}

fn check_endpoints(metric: &dyn MetricField, x: &[f64], x2: &[f64]) -> Result<()> {
    metric.validate(x)?;
    metric.validate(x2)?;
    if x == x2 {
        return Err(Error::DomainMismatch("geodesic endpoints coincide".into()));
    }
    Ok(())
}

/// Discrete geodesic from `x` to `x2` with `opts.nodes` segments, started from
/// the field's initial path (the chord unless the field has obstacles).
pub fn geodesic_between(metric: &dyn MetricField, x: &[f64], x2: &[f64], opts: &SolverOptions) -> Result<GeodesicPath> {
    check_endpoints(metric, x, x2)?;
    if opts.nodes < 2 {
        return Err(Error::InvalidSpec("solver needs at least 2 segments".into()));
    }
    let x2 = nearest_image(metric, x, x2);
    let init = metric.initial_path(x, &x2, opts.nodes);
    solve(metric, x, &x2, opts.nodes, init, opts)
}

/// Refines a path to twice as many segments by inserting midpoints.
fn refine(nodes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * nodes.len() - 1);
    for w in nodes.windows(2) {
        out.push(w[0].clone());
        out.push(w[0].iter().zip(&w[1]).map(|(a, b)| 0.5 * (a + b)).collect());
    }
    out.push(nodes[nodes.len() - 1].clone());
    out
}

/// Solved path with `opts.nodes` segments and the best length estimate. With
/// `opts.extrapolate` and an even segment count the estimate is the Richardson
/// combination of the `m/2` and `m` solves; otherwise it is the path's own
/// discrete length.
pub fn geodesic_with_length(
    metric: &dyn MetricField,
    x: &[f64],
    x2: &[f64],
    opts: &SolverOptions,
) -> Result<(GeodesicPath, f64)> {
    let m = opts.nodes;
    if opts.extrapolate && m >= 4 && m % 2 == 0 {
        let coarse = geodesic_between(metric, x, x2, &SolverOptions { nodes: m / 2, ..opts.clone() })?;
        let x2 = nearest_image(metric, x, x2);
        let init = refine(&coarse.nodes);
        let fine = solve(metric, x, &x2, m, init, opts)?;
        let length = (4.0 * fine.length - coarse.length) / 3.0;
        Ok((fine, length))
    } else {
        let path = geodesic_between(metric, x, x2, opts)?;
        let length = path.length;
        Ok((path, length))
    }
}

/// `½ L|L|` with `L` from [`geodesic_with_length`]; zero on the diagonal.
pub fn sigma_riemannian(metric: &dyn MetricField, x: &[f64], x2: &[f64], opts: &SolverOptions) -> Result<f64> {
    if x == x2 {
        metric.validate(x)?;
        return Ok(0.0);
    }
    let (_, length) = geodesic_with_length(metric, x, x2, opts)?;
    Ok(0.5 * length * length.abs())
}

/// World function of a metric field, evaluated by solving for geodesics.
#[derive(Clone)]
pub struct RiemannianSpace {
    metric: Arc<dyn MetricField>,
    options: SolverOptions,
}

impl RiemannianSpace {
    pub fn new(metric: Arc<dyn MetricField>, options: SolverOptions) -> Self {
        Self { metric, options }
    }

    pub fn from_expressions(dim: usize, components: &[Vec<String>], options: SolverOptions) -> Result<Self> {
        Ok(Self::new(Arc::new(ExprMetric::from_strings(dim, components)?), options))
    }

    pub fn metric(&self) -> &dyn MetricField {
        self.metric.as_ref()
    }

    pub fn metric_arc(&self) -> Arc<dyn MetricField> {
        Arc::clone(&self.metric)
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }
}

impl SigmaSpace for RiemannianSpace {
    fn domain(&self) -> Domain {
        Domain::Coords { dim: self.metric.dim() }
    }

    fn world_function(&self, p: &Point, q: &Point) -> Result<f64> {
        match (p.as_coords(), q.as_coords()) {
            (Some(x), Some(y)) => sigma_riemannian(self.metric.as_ref(), x, y, &self.options),
            _ => Err(Error::DomainMismatch("coordinate space expects coordinates".into())),
        }
    }
}
