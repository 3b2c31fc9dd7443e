//! Closed-form world functions.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::riemann::{RiemannianSpace, SolverOptions};
use crate::sigma::{scaled_tol, sigma, Domain, FiniteSigmaSpace, Point, SigmaSpace};

/// Proper Euclidean space with σ = ½‖x − x′‖².
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EuclideanSpace {
    dim: usize,
}

impl EuclideanSpace {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl SigmaSpace for EuclideanSpace {
    fn domain(&self) -> Domain {
        Domain::Coords { dim: self.dim }
    }

    fn world_function(&self, p: &Point, q: &Point) -> Result<f64> {
        let (x, y) = coords_pair(p, q)?;
        Ok(0.5 * x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
    }
}

/// Flat space with a constant metric tensor: σ = ½ g_ik Δx^i Δx^k.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantMetricSpace {
    g: DMatrix<f64>,
}

impl ConstantMetricSpace {
    /// Requires a square, finite, symmetric, non-singular matrix.
    pub fn new(g: DMatrix<f64>) -> Result<Self> {
        if !g.is_square() || g.nrows() == 0 {
            return Err(Error::InvalidSpec("metric matrix must be square and non-empty".into()));
        }
        let n = g.nrows();
        for i in 0..n {
            for k in 0..n {
                if !g[(i, k)].is_finite() {
                    return Err(Error::InvalidSpec(format!("metric entry ({i},{k}) is not finite")));
                }
                if g[(i, k)] != g[(k, i)] {
                    return Err(Error::InvalidSpec(format!("metric is not symmetric at ({i},{k})")));
                }
            }
        }
        let det = linalg::determinant(&g);
        if det.abs() <= 1e-12 * linalg::max_abs(&g).powi(n as i32) {
            return Err(Error::InvalidSpec("metric matrix is singular".into()));
        }
        Ok(Self { g })
    }

    /// Index-1 signature diag(1, −1, …, −1).
    pub fn pseudo_euclidean(dim: usize) -> Self {
        let diag = DVector::from_fn(dim, |i, _| if i == 0 { 1.0 } else { -1.0 });
        Self { g: DMatrix::from_diagonal(&diag) }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    /// True when the metric has eigenvalues of both signs.
    pub fn is_indefinite(&self) -> bool {
        let (pos, neg) = linalg::signature(&self.g, 1e-12);
        pos > 0 && neg > 0
    }

    pub fn quadratic(&self, d: &[f64]) -> f64 {
        let n = d.len();
        let mut s = 0.0;
        for i in 0..n {
            for k in 0..n {
                s += self.g[(i, k)] * d[i] * d[k];
            }
        }
        s
    }
}

impl SigmaSpace for ConstantMetricSpace {
    fn domain(&self) -> Domain {
        Domain::Coords { dim: self.g.nrows() }
    }

    fn world_function(&self, p: &Point, q: &Point) -> Result<f64> {
        let (x, y) = coords_pair(p, q)?;
        Ok(0.5 * self.quadratic(&linalg::sub(x, y)))
    }
}

/// Round 2-sphere of radius R in polar coordinates (θ, φ); metric R²·diag(1, sin²θ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereSpace {
    radius: f64,
}

impl SphereSpace {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidSpec(format!("sphere radius must be positive, got {radius}")));
        }
        Ok(Self { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Central angle between two (θ, φ) points, evaluated with `atan2` so that it
    /// stays accurate for nearly coincident and nearly antipodal pairs.
    pub fn central_angle(x: &[f64], y: &[f64]) -> f64 {
        let a = unit_vector(x[0], x[1]);
        let b = unit_vector(y[0], y[1]);
        let cross = [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ];
        linalg::norm(&cross).atan2(linalg::dot(&a, &b))
    }

    /// σ together with a flag that is set for antipodal pairs, where
    /// infinitely many geodesics connect the points (σ is still ½(πR)²).
    pub fn sigma_with_flag(&self, x: &[f64], y: &[f64]) -> (f64, bool) {
        let d = Self::central_angle(x, y);
        let antipodal = PI - d <= 1e-9;
        (0.5 * (self.radius * d).powi(2), antipodal)
    }
}

fn unit_vector(theta: f64, phi: f64) -> [f64; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [st * cp, st * sp, ct]
}

impl SigmaSpace for SphereSpace {
    fn domain(&self) -> Domain {
        Domain::Coords { dim: 2 }
    }

    fn world_function(&self, p: &Point, q: &Point) -> Result<f64> {
        let (x, y) = coords_pair(p, q)?;
        Ok(self.sigma_with_flag(x, y).0)
    }
}

/// Euclidean plane with the open disk |x| < a removed; σ is half the squared
/// length of the shortest path that stays outside the hole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PuncturedPlane {
    hole_radius: f64,
}

impl PuncturedPlane {
    pub fn new(hole_radius: f64) -> Result<Self> {
        if !(hole_radius > 0.0 && hole_radius.is_finite()) {
            return Err(Error::InvalidSpec(format!("hole radius must be positive, got {hole_radius}")));
        }
        Ok(Self { hole_radius })
    }

    pub fn hole_radius(&self) -> f64 {
        self.hole_radius
    }

    /// Whether the straight segment between the points crosses the open hole.
    pub fn is_shadowed(&self, x: &[f64], y: &[f64]) -> bool {
        segment_hits_disk(self.hole_radius, x, y)
    }
}

impl SigmaSpace for PuncturedPlane {
    fn domain(&self) -> Domain {
        Domain::Coords { dim: 2 }
    }

    fn world_function(&self, p: &Point, q: &Point) -> Result<f64> {
        let (x, y) = coords_pair(p, q)?;
        punctured_plane_sigma(self.hole_radius, x, y)
    }
}

fn segment_hits_disk(a: f64, x: &[f64], y: &[f64]) -> bool {
    let d = linalg::sub(y, x);
    let dd = linalg::dot(&d, &d);
    let t = if dd == 0.0 { 0.0 } else { (-linalg::dot(x, &d) / dd).clamp(0.0, 1.0) };
    let c = [x[0] + t * d[0], x[1] + t * d[1]];
    linalg::norm(&c) < a
}

/// World function of the plane with a circular hole of radius `a` at the origin.
///
/// Unobstructed pairs get the Euclidean value. Otherwise the shortest path is
/// tangent segment, arc of the hole boundary, tangent segment, with length
/// `√(|x|²−a²) + √(|x′|²−a²) + a·(θ − arccos(a/|x|) − arccos(a/|x′|))`
/// where θ is the central angle between `x` and `x′`.
pub fn punctured_plane_sigma(a: f64, x: &[f64], x2: &[f64]) -> Result<f64> {
    for p in [x, x2] {
        if p.len() != 2 {
            return Err(Error::DomainMismatch(format!("punctured plane expects 2 coordinates, got {}", p.len())));
        }
        if linalg::norm(p) < a {
            return Err(Error::PointInsideHole { point: p.to_vec(), radius: a });
        }
    }
    let d = linalg::sub(x, x2);
    let euclid = 0.5 * linalg::dot(&d, &d);
    if !segment_hits_disk(a, x, x2) {
        return Ok(euclid);
    }
    let (r1, r2) = (linalg::norm(x), linalg::norm(x2));
    let cross = x[0] * x2[1] - x[1] * x2[0];
    let central = cross.abs().atan2(linalg::dot(x, x2));
    let wrap = (central - (a / r1).acos() - (a / r2).acos()).max(0.0);
    let length = (r1 * r1 - a * a).sqrt() + (r2 * r2 - a * a).sqrt() + a * wrap;
    Ok(0.5 * length * length)
}

fn coords_pair<'a>(p: &'a Point, q: &'a Point) -> Result<(&'a [f64], &'a [f64])> {
    match (p, q) {
        (Point::Coords(x), Point::Coords(y)) => Ok((x, y)),
        _ => Err(Error::DomainMismatch("coordinate space expects coordinates".into())),
    }
}

/// Declarative description of a space, mirrored by the JSON configuration.
#[derive(Debug, Clone)]
pub enum SpaceSpec {
    Euclidean { dim: usize },
    ConstantMetric { metric: Vec<Vec<f64>> },
    PseudoEuclidean { dim: usize },
    Sphere { radius: f64 },
    PuncturedPlane { hole_radius: f64 },
    Finite(FiniteSigmaSpace),
    /// Metric components `g_ik(x)` as expressions in `x1..xn`, upper triangle
    /// completed by symmetry.
    RiemannianExpr { dim: usize, components: Vec<Vec<String>>, solver: SolverOptions },
}

impl SpaceSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            SpaceSpec::Euclidean { .. } => "euclidean",
            SpaceSpec::ConstantMetric { .. } => "constant_metric",
            SpaceSpec::PseudoEuclidean { .. } => "pseudo_euclidean",
            SpaceSpec::Sphere { .. } => "sphere",
            SpaceSpec::PuncturedPlane { .. } => "punctured_plane",
            SpaceSpec::Finite(_) => "finite",
            SpaceSpec::RiemannianExpr { .. } => "riemannian_expr",
        }
    }

    pub fn domain(&self) -> Domain {
        match self {
            SpaceSpec::Euclidean { dim } | SpaceSpec::PseudoEuclidean { dim } => Domain::Coords { dim: *dim },
            SpaceSpec::ConstantMetric { metric } => Domain::Coords { dim: metric.len() },
            SpaceSpec::Sphere { .. } | SpaceSpec::PuncturedPlane { .. } => Domain::Coords { dim: 2 },
            SpaceSpec::Finite(f) => f.domain(),
            SpaceSpec::RiemannianExpr { dim, .. } => Domain::Coords { dim: *dim },
        }
    }

    /// Whether the timelike/spacelike/null classification is meaningful, i.e.
    /// the space is flat with an indefinite metric.
    pub fn is_indefinite(&self) -> bool {
        match self {
            SpaceSpec::PseudoEuclidean { dim } => *dim > 1,
            SpaceSpec::ConstantMetric { metric } => {
                let n = metric.len();
                let g = DMatrix::from_fn(n, n, |i, k| metric[i].get(k).copied().unwrap_or(f64::NAN));
                ConstantMetricSpace::new(g).map(|s| s.is_indefinite()).unwrap_or(false)
            }
            _ => false,
        }
    }
}

/// Builds the world-function evaluator described by `spec`.
pub fn make_space(spec: &SpaceSpec) -> Result<Arc<dyn SigmaSpace>> {
    Ok(match spec {
        SpaceSpec::Euclidean { dim } => {
            if *dim == 0 {
                return Err(Error::InvalidSpec("dimension must be positive".into()));
            }
            Arc::new(EuclideanSpace::new(*dim))
        }
        SpaceSpec::PseudoEuclidean { dim } => {
            if *dim == 0 {
                return Err(Error::InvalidSpec("dimension must be positive".into()));
            }
            Arc::new(ConstantMetricSpace::pseudo_euclidean(*dim))
        }
        SpaceSpec::ConstantMetric { metric } => {
            let n = metric.len();
            if metric.iter().any(|row| row.len() != n) {
                return Err(Error::InvalidSpec("metric rows must all have length dim".into()));
            }
            Arc::new(ConstantMetricSpace::new(DMatrix::from_fn(n, n, |i, k| metric[i][k]))?)
        }
        SpaceSpec::Sphere { radius } => Arc::new(SphereSpace::new(*radius)?),
        SpaceSpec::PuncturedPlane { hole_radius } => Arc::new(PuncturedPlane::new(*hole_radius)?),
        SpaceSpec::Finite(f) => Arc::new(f.clone()),
        SpaceSpec::RiemannianExpr { dim, components, solver } => {
            Arc::new(RiemannianSpace::from_expressions(*dim, components, solver.clone())?)
        }
    })
}

/// Sign class of σ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IntervalKind {
    Timelike,
    Spacelike,
    Null,
}

impl IntervalKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            IntervalKind::Timelike => "timelike",
            IntervalKind::Spacelike => "spacelike",
            IntervalKind::Null => "null",
        }
    }
}

impl fmt::Display for IntervalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Timelike for σ > tol·scale, spacelike for σ < −tol·scale, null otherwise.
/// The scale is `max(1, ½‖x − y‖²)` for coordinate points and 1 for labels.
pub fn classify_interval<S: SigmaSpace + ?Sized>(
    space: &S,
    p: &Point,
    q: &Point,
    tol: f64,
) -> Result<IntervalKind> {
    let s = sigma(space, p, q)?;
    let scale = match (p, q) {
        (Point::Coords(x), Point::Coords(y)) => {
            let d = linalg::sub(x, y);
            0.5 * linalg::dot(&d, &d)
        }
        _ => 1.0,
    };
    let t = scaled_tol(tol, scale);
    Ok(if s > t {
        IntervalKind::Timelike
    } else if s < -t {
        IntervalKind::Spacelike
    } else {
        IntervalKind::Null
    })
}
