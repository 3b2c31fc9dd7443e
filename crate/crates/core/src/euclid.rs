//! Dimension detection, rectilinear charts built from σ, and the three
//! conditions under which a σ-space is Euclidean.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::sigma::{gamma, gram, scaled_tol, sigma, Domain, Point, SigmaSpace, MAX_ORDER};
use crate::spaces::SpaceSpec;
use crate::tubes::{GridSpec, TubeBasis, Window};

/// Source of sample points for the Euclidean tests.
#[derive(Debug, Clone, PartialEq)]
pub enum PointSampler {
    /// Uniform in a box, optionally rejecting the open disk `|x| < hole_radius`.
    Uniform { lo: Vec<f64>, hi: Vec<f64>, hole_radius: Option<f64> },
    /// Every label of a finite space, in order.
    Labels { count: usize },
}

impl PointSampler {
    pub fn cube(dim: usize, half_width: f64) -> Self {
        PointSampler::Uniform { lo: vec![-half_width; dim], hi: vec![half_width; dim], hole_radius: None }
    }

    /// Default sampling region for each kind of space.
    pub fn for_spec(spec: &SpaceSpec) -> Self {
        match spec {
            SpaceSpec::Sphere { .. } => {
                PointSampler::Uniform { lo: vec![0.3, -1.5], hi: vec![PI - 0.3, 1.5], hole_radius: None }
            }
            SpaceSpec::PuncturedPlane { hole_radius } => PointSampler::Uniform {
                lo: vec![-3.0 * hole_radius; 2],
                hi: vec![3.0 * hole_radius; 2],
                hole_radius: Some(*hole_radius),
            },
            other => match other.domain() {
                Domain::Finite { count } => PointSampler::Labels { count },
                Domain::Coords { dim } => PointSampler::cube(dim, 1.0),
            },
        }
    }

    /// `count` points drawn with a ChaCha8 stream seeded by `seed`. Label
    /// samplers ignore both and return every label.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<Point> {
        match self {
            PointSampler::Labels { count } => (0..*count).map(Point::Label).collect(),
            PointSampler::Uniform { lo, hi, hole_radius } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut out = Vec::with_capacity(count);
                while out.len() < count {
                    let x: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| a + (b - a) * rng.random::<f64>()).collect();
                    if hole_radius.is_some_and(|r| linalg::norm(&x) < r) {
                        continue;
                    }
                    out.push(Point::Coords(x));
                }
                out
            }
        }
    }

    /// Random pairs for condition II; label samplers give all pairs `i < j`.
    pub fn pairs(&self, count: usize, seed: u64) -> Vec<(Point, Point)> {
        match self {
            PointSampler::Labels { count } => (0..*count)
                .flat_map(|i| (i + 1..*count).map(move |j| (Point::Label(i), Point::Label(j))))
                .collect(),
            PointSampler::Uniform { .. } => {
                let pts = self.sample(2 * count, seed);
                pts.chunks(2).map(|c| (c[0].clone(), c[1].clone())).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionOptions {
    pub samples: usize,
    pub max_dim: usize,
    pub tol: f64,
    pub seed: u64,
    /// Escaping candidates considered when extending the basis.
    pub batch: usize,
}

impl Default for DimensionOptions {
    fn default() -> Self {
        Self { samples: 200, max_dim: MAX_ORDER - 1, tol: 1e-9, seed: 0, batch: 32 }
    }
}

/// Outcome of the dimension scan.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionScan {
    /// `None` when points still escape the tube at `max_dim`.
    pub dimension: Option<usize>,
    /// Witness basis `P0..Pn` with `F_n ≠ 0`.
    pub basis: Vec<Point>,
    /// Largest normalised residual left at the final stage.
    pub max_residual: f64,
}

fn stage_residuals<S: SigmaSpace + ?Sized>(space: &S, basis: &[Point], points: &[Point], tol: f64) -> Result<Vec<f64>> {
    if basis.len() == 1 {
        return points
            .par_iter()
            .map(|p| {
                let s = 2.0 * sigma(space, &basis[0], p)?;
                Ok(s / s.abs().max(1.0))
            })
            .collect();
    }
    let tube = TubeBasis::new(space, basis, tol)?;
    points.par_iter().map(|p| tube.residual(space, p)).collect()
}

/// Grows a basis one point at a time until every sample lies in its tube.
pub fn scan_dimension<S: SigmaSpace + ?Sized>(
    space: &S,
    sampler: &PointSampler,
    opts: &DimensionOptions,
) -> Result<DimensionScan> {
    let max_dim = opts.max_dim.min(MAX_ORDER - 1);
    let points = sampler.sample(opts.samples, opts.seed);
    let Some(first) = points.first() else {
        return Err(Error::InvalidSpec("sampler produced no points".into()));
    };
    let mut basis = vec![first.clone()];
    loop {
        let res = stage_residuals(space, &basis, &points, opts.tol)?;
        let escaping: Vec<(usize, f64)> =
            res.iter().enumerate().filter(|(_, r)| r.abs() > opts.tol).map(|(i, r)| (i, r.abs())).collect();
        let max_residual = escaping.iter().fold(0.0_f64, |m, (_, r)| m.max(*r));
        let k = basis.len() - 1;
        if escaping.is_empty() {
            return Ok(DimensionScan { dimension: Some(k), basis, max_residual });
        }
        if k == max_dim {
            return Ok(DimensionScan { dimension: None, basis, max_residual });
        }
        let mut best = escaping[0];
        for &c in escaping.iter().take(opts.batch.max(1)) {
            if c.1 > best.1 {
                best = c;
            }
        }
        basis.push(points[best.0].clone());
    }
}

/// Smallest `n` such that no sampled point leaves `T(P^n)`, with its basis.
pub fn detect_dimension<S: SigmaSpace + ?Sized>(
    space: &S,
    sampler: &PointSampler,
    opts: &DimensionOptions,
) -> Result<(usize, Vec<Point>)> {
    let scan = scan_dimension(space, sampler, opts)?;
    match scan.dimension {
        Some(n) => Ok((n, scan.basis)),
        None => Err(Error::DimensionExceedsCap { max_dim: scan.basis.len() - 1 }),
    }
}

/// Rectilinear chart: `g_ik = Γ(P0, Pi, Pk)` and its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub basis: Vec<Point>,
    pub g_cov: DMatrix<f64>,
    pub g_contra: DMatrix<f64>,
    /// (positive, negative) eigenvalue counts of `g_cov`.
    pub signature: (usize, usize),
}

impl Chart {
    pub fn dim(&self) -> usize {
        self.g_cov.nrows()
    }
}

pub fn build_chart<S: SigmaSpace + ?Sized>(space: &S, basis: &[Point]) -> Result<Chart> {
    let g = gram(space, basis)?;
    let n = g.order() as i32;
    if g.determinant.abs() <= 1e-12 * g.scale().max(f64::MIN_POSITIVE).powi(n) {
        return Err(Error::DegenerateBasis { determinant: g.determinant });
    }
    let g_contra = g
        .gamma_matrix
        .clone()
        .try_inverse()
        .ok_or(Error::DegenerateBasis { determinant: g.determinant })?;
    let signature = linalg::signature(&g.gamma_matrix, 1e-12);
    Ok(Chart { basis: basis.to_vec(), g_cov: g.gamma_matrix, g_contra, signature })
}

/// `x_i(P) = Γ(P0, Pi, P)`.
pub fn covariant_coordinates<S: SigmaSpace + ?Sized>(space: &S, chart: &Chart, p: &Point) -> Result<Vec<f64>> {
    let p0 = &chart.basis[0];
    chart.basis[1..].iter().map(|pi| gamma(space, p0, pi, p)).collect()
}

/// `½ g^{ik}(x_i − y_i)(x_k − y_k)`.
pub fn reconstruct_sigma(chart: &Chart, x: &[f64], y: &[f64]) -> f64 {
    let d = DVector::from_iterator(x.len(), x.iter().zip(y).map(|(a, b)| a - b));
    0.5 * (d.transpose() * &chart.g_contra * &d)[(0, 0)]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport {
    pub pass: bool,
    pub max_residual: f64,
    pub checked: usize,
    pub failures: usize,
}

impl ConditionReport {
    fn from_residuals(residuals: &[Option<f64>], tol: f64) -> Self {
        let failures = residuals.iter().filter(|r| !matches!(r, Some(v) if *v <= tol)).count();
        let max_residual = residuals.iter().fold(0.0_f64, |m, r| match r {
            Some(v) => m.max(*v),
            None => f64::INFINITY,
        });
        Self { pass: failures == 0, max_residual, checked: residuals.len(), failures }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surjectivity {
    Verified,
    Failed,
    /// Finite spaces: no finite point set can cover a coordinate grid.
    NotAssessable,
}

impl Surjectivity {
    pub fn as_str(self) -> &'static str {
        match self {
            Surjectivity::Verified => "pass",
            Surjectivity::Failed => "fail",
            Surjectivity::NotAssessable => "not-assessable",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EuclidReport {
    pub dimension_found: Option<usize>,
    pub signature: (usize, usize),
    /// Every sampled point lies in the tube of the chart basis.
    pub cond1: ConditionReport,
    /// σ agrees with its reconstruction from coordinates.
    pub cond2: ConditionReport,
    /// Grid coordinates are attained and coordinates are injective.
    pub cond3: ConditionReport,
    pub injective: bool,
    pub surjectivity: Surjectivity,
    pub witness: Vec<Point>,
    pub tol: f64,
}

impl EuclidReport {
    pub fn all_pass(&self) -> bool {
        self.cond1.pass && self.cond2.pass && self.cond3.pass
    }
}

/// Box grid spanning the coordinates of `coords`, `per_axis` values per axis.
pub fn coordinate_grid(coords: &[Vec<f64>], per_axis: usize) -> Vec<Vec<f64>> {
    let Some(first) = coords.first() else {
        return Vec::new();
    };
    let n = first.len();
    let mut lo = first.clone();
    let mut hi = first.clone();
    for c in coords {
        for i in 0..n {
            lo[i] = lo[i].min(c[i]);
            hi[i] = hi[i].max(c[i]);
        }
    }
    let per_axis = per_axis.max(2);
    let grid = GridSpec { window: Window { lo, hi }, resolution: vec![per_axis; n] };
    (0..grid.len()).map(|i| grid.point(i)).collect()
}

/// Finds a point whose coordinates are `target`, by damped Gauss–Newton from P0.
fn invert_coordinates<S: SigmaSpace + ?Sized>(space: &S, chart: &Chart, target: &[f64], tol: f64) -> Option<f64> {
    let start = chart.basis[0].as_coords()?.to_vec();
    let coords = |x: &[f64]| covariant_coordinates(space, chart, &Point::Coords(x.to_vec())).ok();
    let scale = target.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let resid = |x: &[f64]| -> Option<(DVector<f64>, f64)> {
        let c = coords(x)?;
        let r = DVector::from_iterator(c.len(), target.iter().zip(&c).map(|(t, v)| t - v));
        let size = r.amax() / scale;
        Some((r, size))
    };
    let mut x = start;
    let (mut r, mut size) = resid(&x)?;
    for _ in 0..50 {
        if size <= tol {
            return Some(size);
        }
        let d = x.len();
        let mut jac = DMatrix::zeros(r.len(), d);
        for j in 0..d {
            let h = 1e-6 * x[j].abs().max(1.0);
            let mut p = x.clone();
            p[j] += h;
            let plus = coords(&p)?;
            p[j] -= 2.0 * h;
            let minus = coords(&p)?;
            for i in 0..r.len() {
                jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
            }
        }
        let step = jac.svd(true, true).solve(&r, 1e-12).ok()?;
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a + t * s).collect();
            if let Some((rt, st)) = resid(&trial) {
                if st < size {
                    x = trial;
                    r = rt;
                    size = st;
                    improved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (size <= tol).then_some(size)
}

/// Evaluates conditions I–III on the given samples.
///
/// Scales: I uses the tube residual of [`TubeBasis::residual`]; II compares
/// `|σ − σ_rec|` with `tol·max(1, |σ|)`; III inverts every grid coordinate
/// vector to `tol·max(1, |y|)` and requires distinct sample points to get
/// distinct coordinates.
pub fn check_conditions<S: SigmaSpace + ?Sized>(
    space: &S,
    chart: &Chart,
    sample_pairs: &[(Point, Point)],
    coord_grid: &[Vec<f64>],
    tol: f64,
) -> EuclidReport {
    let mut points: Vec<Point> = Vec::new();
    for (p, q) in sample_pairs {
        for x in [p, q] {
            if !points.contains(x) {
                points.push(x.clone());
            }
        }
    }

    let cond1 = match TubeBasis::new(space, &chart.basis, tol) {
        Ok(tube) => {
            let res: Vec<Option<f64>> = points.par_iter().map(|p| tube.residual(space, p).ok().map(f64::abs)).collect();
            ConditionReport::from_residuals(&res, tol)
        }
        Err(_) => ConditionReport::from_residuals(&vec![None; points.len().max(1)], tol),
    };

    let coords: Vec<Option<Vec<f64>>> = points.par_iter().map(|p| covariant_coordinates(space, chart, p).ok()).collect();
    let index = |p: &Point| points.iter().position(|q| q == p).unwrap();

    let res2: Vec<Option<f64>> = sample_pairs
        .par_iter()
        .map(|(p, q)| {
            let s = sigma(space, p, q).ok()?;
            let (x, y) = (coords[index(p)].as_ref()?, coords[index(q)].as_ref()?);
            Some((s - reconstruct_sigma(chart, x, y)).abs() / s.abs().max(1.0))
        })
        .collect();
    let cond2 = ConditionReport::from_residuals(&res2, tol);

    let injective = sample_pairs.par_iter().all(|(p, q)| {
        if p.approx_eq(q, 1e-12) {
            return true;
        }
        match (&coords[index(p)], &coords[index(q)]) {
            (Some(x), Some(y)) => {
                let scale = x.iter().chain(y).fold(0.0_f64, |m, v| m.max(v.abs()));
                x.iter().zip(y).any(|(a, b)| (a - b).abs() > scaled_tol(tol, scale))
            }
            _ => false,
        }
    });

    let is_finite = matches!(space.domain(), Domain::Finite { .. });
    let (surjectivity, res3) = if is_finite {
        (Surjectivity::NotAssessable, Vec::new())
    } else {
        let res: Vec<Option<f64>> = coord_grid.par_iter().map(|y| invert_coordinates(space, chart, y, tol)).collect();
        let ok = res.iter().all(Option::is_some);
        (if ok { Surjectivity::Verified } else { Surjectivity::Failed }, res)
    };
    let mut cond3 = ConditionReport::from_residuals(&res3, tol);
    cond3.pass = cond3.pass && injective && surjectivity != Surjectivity::Failed;
    if !injective {
        cond3.failures += 1;
    }

    EuclidReport {
        dimension_found: Some(chart.dim()),
        signature: chart.signature,
        cond1,
        cond2,
        cond3,
        injective,
        surjectivity,
        witness: chart.basis.clone(),
        tol,
    }
}

/// Sampling budget for [`euclid_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct EuclidOptions {
    pub dimension: DimensionOptions,
    /// Pairs for condition II; label samplers always use every pair.
    pub pairs: usize,
    /// Grid values per coordinate axis for condition III, lowered as needed to
    /// keep the grid at most `max_grid` points.
    pub grid_per_axis: usize,
    pub max_grid: usize,
}

impl Default for EuclidOptions {
    fn default() -> Self {
        Self { dimension: DimensionOptions::default(), pairs: 500, grid_per_axis: 5, max_grid: 4096 }
    }
}

/// Dimension scan followed by conditions I–III on the resulting basis.
///
/// When points still escape at the cap the conditions are evaluated on the
/// witness basis anyway and `dimension_found` is `None`.
pub fn euclid_report<S: SigmaSpace + ?Sized>(
    space: &S,
    sampler: &PointSampler,
    opts: &EuclidOptions,
) -> Result<EuclidReport> {
    let scan = scan_dimension(space, sampler, &opts.dimension)?;
    let chart = build_chart(space, &scan.basis)?;
    let seed = opts.dimension.seed.wrapping_add(1);
    let pairs = sampler.pairs(opts.pairs, seed);
    let grid = if matches!(space.domain(), Domain::Finite { .. }) {
        Vec::new()
    } else {
        let coords: Vec<Vec<f64>> =
            pairs.par_iter().filter_map(|(a, _)| covariant_coordinates(space, &chart, a).ok()).collect();
        let mut per_axis = opts.grid_per_axis.max(2);
        while per_axis > 2 && (per_axis as f64).powi(chart.dim() as i32) > opts.max_grid as f64 {
            per_axis -= 1;
        }
        coordinate_grid(&coords, per_axis)
    };
    let mut report = check_conditions(space, &chart, &pairs, &grid, opts.dimension.tol);
    report.dimension_found = scan.dimension;
    Ok(report)
}
