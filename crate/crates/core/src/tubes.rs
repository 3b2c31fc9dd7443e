//! Membership predicates for spheres, cylinders, ellipsoids, segments and
//! nth-order tubes, plus grid samplers for the tubes.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::sigma::{gram, metric, scalar_product, scaled_tol, sigma, GramResult, Point, SigmaSpace};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipResult {
    pub member: bool,
    pub residual: f64,
    pub tol_used: f64,
}

impl MembershipResult {
    fn new(residual: f64, tol_used: f64) -> Self {
        Self { member: residual.abs() <= tol_used, residual, tol_used }
    }
}

/// Sphere S(O; P): points R with σ(O,R) = σ(O,P).
pub fn sphere_contains<S: SigmaSpace + ?Sized>(
    space: &S,
    center: &Point,
    through: &Point,
    r: &Point,
    tol: f64,
) -> Result<MembershipResult> {
    let radius = sigma(space, center, through)?;
    let residual = sigma(space, center, r)? - radius;
    Ok(MembershipResult::new(residual, scaled_tol(tol, radius)))
}

fn half_area<S: SigmaSpace + ?Sized>(space: &S, p1: &Point, p2: &Point, q: &Point, tol: f64) -> Result<f64> {
    let g = gram(space, &[p1.clone(), p2.clone(), q.clone()])?;
    let f2 = g.determinant;
    if f2 < -scaled_tol(tol, g.scale() * g.scale()) {
        return Err(Error::ImaginaryArea { f2 });
    }
    Ok(0.5 * f2.max(0.0).sqrt())
}

/// Circular cylinder C(P1,P2; P): points R whose triangle with the axis has
/// the same area S₂ = ½√F₂ as the one through P.
pub fn cylinder_contains<S: SigmaSpace + ?Sized>(
    space: &S,
    p1: &Point,
    p2: &Point,
    through: &Point,
    r: &Point,
    tol: f64,
) -> Result<MembershipResult> {
    let f1 = 2.0 * sigma(space, p1, p2)?;
    if f1.abs() <= scaled_tol(tol, 0.0) {
        return Err(Error::DegenerateBasis { determinant: f1 });
    }
    let target = half_area(space, p1, p2, through, tol)?;
    let residual = half_area(space, p1, p2, r, tol)? - target;
    Ok(MembershipResult::new(residual, scaled_tol(tol, target)))
}

/// Ellipsoid with foci F1, F2 through P: ρ(F1,R) + ρ(F2,R) = ρ(F1,P) + ρ(F2,P).
pub fn ellipsoid_contains<S: SigmaSpace + ?Sized>(
    space: &S,
    f1: &Point,
    f2: &Point,
    through: &Point,
    r: &Point,
    tol: f64,
) -> Result<MembershipResult> {
    let target = metric(space, f1, through)? + metric(space, f2, through)?;
    let sum = metric(space, f1, r)? + metric(space, f2, r)?;
    Ok(MembershipResult::new(sum - target, scaled_tol(tol, target)))
}

/// Segment between P1 and P2: ρ(P1,R) + ρ(P2,R) = ρ(P1,P2).
pub fn segment_contains<S: SigmaSpace + ?Sized>(
    space: &S,
    p1: &Point,
    p2: &Point,
    r: &Point,
    tol: f64,
) -> Result<MembershipResult> {
    let target = metric(space, p1, p2)?;
    let sum = metric(space, p1, r)? + metric(space, p2, r)?;
    Ok(MembershipResult::new(sum - target, scaled_tol(tol, target)))
}

/// A basis prepared for repeated tube tests.
#[derive(Debug, Clone)]
pub struct TubeBasis {
    gram: GramResult,
    normaliser: f64,
    null: bool,
}

impl TubeBasis {
    /// Fails with [`Error::DegenerateBasis`] when `|F_n| ≤ tol·max(1, scale)ⁿ`.
    pub fn new<S: SigmaSpace + ?Sized>(space: &S, basis: &[Point], tol: f64) -> Result<Self> {
        let gram = gram(space, basis)?;
        let n = gram.order() as i32;
        let f = gram.determinant;
        if f.abs() <= scaled_tol(tol, gram.scale().max(1.0).powi(n)) {
            return Err(Error::DegenerateBasis { determinant: f });
        }
        Ok(Self { normaliser: f, gram, null: false })
    }

    /// Like [`TubeBasis::new`] but also accepts bases of vanishing length
    /// (null directions), as long as the basis points are distinct. The
    /// residual is then normalised by `max(1, max|Γ|)ⁿ` instead of `F_n`.
    pub fn allowing_null<S: SigmaSpace + ?Sized>(space: &S, basis: &[Point], tol: f64) -> Result<Self> {
        match Self::new(space, basis, tol) {
            Err(Error::DegenerateBasis { determinant }) => {
                for (i, p) in basis.iter().enumerate() {
                    if basis[..i].iter().any(|q| q.approx_eq(p, tol)) {
                        return Err(Error::DegenerateBasis { determinant });
                    }
                }
                let gram = gram(space, basis)?;
                let n = gram.order() as i32;
                let normaliser = linalg::max_abs(&gram.gamma_matrix).max(1.0).powi(n);
                Ok(Self { gram, normaliser, null: true })
            }
            other => other,
        }
    }

    pub fn gram(&self) -> &GramResult {
        &self.gram
    }

    pub fn is_null(&self) -> bool {
        self.null
    }

    /// F_{n+1}(basis ∪ {r}).
    pub fn extended_determinant<S: SigmaSpace + ?Sized>(&self, space: &S, r: &Point) -> Result<f64> {
        Ok(self.extended(space, r)?.0)
    }

    fn extended<S: SigmaSpace + ?Sized>(&self, space: &S, r: &Point) -> Result<(f64, f64)> {
        let g = &self.gram.gamma_matrix;
        let n = g.nrows();
        let basis = &self.gram.basis;
        let s0r = sigma(space, &basis[0], r)?;
        let mut ext = DMatrix::zeros(n + 1, n + 1);
        ext.view_mut((0, 0), (n, n)).copy_from(g);
        for i in 0..n {
            let v = 0.5 * g[(i, i)] + s0r - sigma(space, &basis[i + 1], r)?;
            ext[(i, n)] = v;
            ext[(n, i)] = v;
        }
        ext[(n, n)] = 2.0 * s0r;
        Ok((linalg::determinant(&ext), s0r))
    }

    /// Dimensionless residual `F_{n+1} / (F_n · s)` with
    /// `s = max(1, max 2|σ(P0,Pi)|, 2|σ(P0,R)|)`.
    pub fn residual<S: SigmaSpace + ?Sized>(&self, space: &S, r: &Point) -> Result<f64> {
        let (f, s0r) = self.extended(space, r)?;
        let s = self.gram.scale().max(2.0 * s0r.abs()).max(1.0);
        Ok(f / (self.normaliser * s))
    }

    pub fn contains<S: SigmaSpace + ?Sized>(&self, space: &S, r: &Point, tol: f64) -> Result<MembershipResult> {
        Ok(MembershipResult::new(self.residual(space, r)?, tol.max(crate::sigma::TOL_FLOOR)))
    }
}

/// nth-order tube T(P0..Pn): points R with F_{n+1}(P0..Pn, R) = 0.
pub fn tube_contains<S: SigmaSpace + ?Sized>(space: &S, basis: &[Point], r: &Point, tol: f64) -> Result<MembershipResult> {
    TubeBasis::new(space, basis, tol)?.contains(space, r, tol)
}

/// Tube through Q0 collinear with P0P1: points R with
/// `(P0P1·Q0R)² = |P0P1|²|Q0R|²`. Null Q0R is allowed; R = Q0 is not.
pub fn tube_through_point_contains<S: SigmaSpace + ?Sized>(
    space: &S,
    p0: &Point,
    p1: &Point,
    q0: &Point,
    r: &Point,
    tol: f64,
) -> Result<MembershipResult> {
    let pp = scalar_product(space, p0, p1, p0, p1)?;
    if pp.abs() <= scaled_tol(tol, 0.0) {
        return Err(Error::ZeroVector { squared_length: pp });
    }
    if r.approx_eq(q0, tol) {
        return Err(Error::ZeroVector { squared_length: scalar_product(space, q0, r, q0, r)? });
    }
    let qq = scalar_product(space, q0, r, q0, r)?;
    let pq = scalar_product(space, p0, p1, q0, r)?;
    let residual = crate::sigma::collinearity_residual(pq, pp, qq);
    Ok(MembershipResult::new(residual, scaled_tol(tol, pp * qq)))
}

/// Axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Window {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidSpec("window bounds must have equal, positive length".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::InvalidSpec("window bounds must be finite with lo <= hi".into()));
        }
        Ok(Self { lo, hi })
    }

    pub fn cube(dim: usize, half_width: f64) -> Self {
        Self { lo: vec![-half_width; dim], hi: vec![half_width; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }
}

/// A window with per-axis point counts; axes with one point sit at `lo`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub window: Window,
    pub resolution: Vec<usize>,
}

impl GridSpec {
    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid point number `index`, first axis varying slowest.
    pub fn point(&self, mut index: usize) -> Vec<f64> {
        let d = self.resolution.len();
        let mut out = vec![0.0; d];
        for axis in (0..d).rev() {
            let n = self.resolution[axis];
            let k = index % n;
            index /= n;
            let (lo, hi) = (self.window.lo[axis], self.window.hi[axis]);
            out[axis] = if n == 1 { lo } else if k == n - 1 { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 };
        }
        out
    }
}

/// Grid points accepted by a predicate, with their residuals, in grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct TubeSample {
    pub points: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub grids: Vec<GridSpec>,
}

fn scan<F>(grid: &GridSpec, test: F) -> Result<Vec<(Vec<f64>, f64)>>
where
    F: Fn(&Point) -> Result<Option<f64>> + Sync,
{
    let hits: Vec<Result<Option<(Vec<f64>, f64)>>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            let p = Point::Coords(x);
            Ok(test(&p)?.map(|r| (p.as_coords().unwrap().to_vec(), r)))
        })
        .collect();
    let mut out = Vec::new();
    for h in hits {
        if let Some(v) = h? {
            out.push(v);
        }
    }
    Ok(out)
}

/// All grid points of `window` inside the tube of `basis`. With `allow_null`
/// a basis of vanishing length is accepted (see [`TubeBasis::allowing_null`]).
pub fn sample_tube<S: SigmaSpace + ?Sized>(
    space: &S,
    basis: &[Point],
    window: &Window,
    resolution: &[usize],
    tol: f64,
    allow_null: bool,
) -> Result<TubeSample> {
    if resolution.len() != window.dim() || resolution.iter().any(|&n| n < 2) {
        return Err(Error::InvalidSpec("resolution needs at least 2 points on every window axis".into()));
    }
    let tube = if allow_null { TubeBasis::allowing_null(space, basis, tol)? } else { TubeBasis::new(space, basis, tol)? };
    let grid = GridSpec { window: window.clone(), resolution: resolution.to_vec() };
    let hits = scan(&grid, |p| {
        let m = tube.contains(space, p, tol)?;
        Ok(m.member.then_some(m.residual))
    })?;
    let (points, residuals) = hits.into_iter().unzip();
    Ok(TubeSample { points, residuals, grids: vec![grid] })
}

/// Broken line through `vertices`: for each link, the grid over its bounding
/// box (`per_segment_resolution` points on every non-flat axis) filtered by
/// [`segment_contains`]. Points shared by consecutive links appear once.
pub fn broken_tube<S: SigmaSpace + ?Sized>(
    space: &S,
    vertices: &[Point],
    per_segment_resolution: usize,
    tol: f64,
) -> Result<TubeSample> {
    if vertices.len() < 2 {
        return Err(Error::InvalidSpec("a broken line needs at least two vertices".into()));
    }
    if per_segment_resolution < 2 {
        return Err(Error::InvalidSpec("per-segment resolution must be at least 2".into()));
    }
    let mut sample = TubeSample { points: Vec::new(), residuals: Vec::new(), grids: Vec::new() };
    let mut seen: BTreeSet<Vec<u64>> = BTreeSet::new();
    for link in vertices.windows(2) {
        let (a, b) = (&link[0], &link[1]);
        let s = sigma(space, a, b)?;
        if s < 0.0 {
            return Err(Error::NegativeSigma { sigma: s });
        }
        let (Some(x), Some(y)) = (a.as_coords(), b.as_coords()) else {
            return Err(Error::DomainMismatch("broken lines need coordinate points".into()));
        };
        let lo: Vec<f64> = x.iter().zip(y).map(|(p, q)| p.min(*q)).collect();
        let hi: Vec<f64> = x.iter().zip(y).map(|(p, q)| p.max(*q)).collect();
        let resolution = lo.iter().zip(&hi).map(|(l, h)| if l == h { 1 } else { per_segment_resolution }).collect();
        let grid = GridSpec { window: Window { lo, hi }, resolution };
        let hits = scan(&grid, |p| match segment_contains(space, a, b, p, tol) {
            Ok(m) => Ok(m.member.then_some(m.residual)),
            Err(Error::NegativeSigma { .. }) => Ok(None),
            Err(e) => Err(e),
        })?;
        for (p, r) in hits {
            let key: Vec<u64> = p.iter().map(|v| (v + 0.0).to_bits()).collect();
            if seen.insert(key) {
                sample.points.push(p);
                sample.residuals.push(r);
            }
        }
        sample.grids.push(grid);
    }
    Ok(sample)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{ConstantMetricSpace, EuclideanSpace};

    fn p(x: &[f64]) -> Point {
        Point::coords(x.to_vec())
    }

    #[test]
    fn sphere_examples() {
        let e2 = EuclideanSpace::new(2);
        assert!(sphere_contains(&e2, &p(&[0.0, 0.0]), &p(&[1.0, 0.0]), &p(&[0.0, 1.0]), 1e-9).unwrap().member);
        assert!(!sphere_contains(&e2, &p(&[0.0, 0.0]), &p(&[1.0, 0.0]), &p(&[2.0, 0.0]), 1e-9).unwrap().member);
        let m2 = ConstantMetricSpace::pseudo_euclidean(2);
        assert!(sphere_contains(&m2, &p(&[0.0, 0.0]), &p(&[1.0, 0.0]), &p(&[1.25, 0.75]), 1e-9).unwrap().member);
    }

    #[test]
    fn sphere_contains_its_defining_point_but_not_its_centre() {
        let e2 = EuclideanSpace::new(2);
        let (o, q) = (p(&[0.5, 0.5]), p(&[1.0, -2.0]));
        assert!(sphere_contains(&e2, &o, &q, &q, 1e-9).unwrap().member);
        assert!(!sphere_contains(&e2, &o, &q, &o, 1e-9).unwrap().member);
        let m2 = ConstantMetricSpace::pseudo_euclidean(2);
        let null = p(&[1.0, 1.0]);
        assert!(sphere_contains(&m2, &p(&[0.0, 0.0]), &null, &p(&[0.0, 0.0]), 1e-9).unwrap().member);
    }

    #[test]
    fn cylinder_examples() {
        let e3 = EuclideanSpace::new(3);
        let (a, b, through) = (p(&[0.0, 0.0, 0.0]), p(&[0.0, 0.0, 1.0]), p(&[1.0, 0.0, 0.0]));
        assert!(cylinder_contains(&e3, &a, &b, &through, &p(&[0.0, 1.0, 0.7]), 1e-9).unwrap().member);
        assert!(!cylinder_contains(&e3, &a, &b, &through, &p(&[2.0, 0.0, 0.0]), 1e-9).unwrap().member);
        assert!(cylinder_contains(&e3, &a, &b, &through, &through, 1e-9).unwrap().member);
    }

    #[test]
    fn cylinder_reports_imaginary_area() {
        let m3 = ConstantMetricSpace::pseudo_euclidean(3);
        let err = cylinder_contains(&m3, &p(&[0.0, 0.0, 0.0]), &p(&[1.0, 0.0, 0.0]), &p(&[0.0, 1.0, 0.0]), &p(&[0.0, 0.0, 1.0]), 1e-9)
            .unwrap_err();
        assert!(matches!(err, Error::ImaginaryArea { .. }));
    }

    #[test]
    fn ellipsoid_and_segment_examples() {
        let e2 = EuclideanSpace::new(2);
        let (f1, f2) = (p(&[-1.0, 0.0]), p(&[1.0, 0.0]));
        assert!(ellipsoid_contains(&e2, &f1, &f2, &p(&[0.0, 1.0]), &p(&[0.0, -1.0]), 1e-9).unwrap().member);
        assert!(!ellipsoid_contains(&e2, &f1, &f2, &p(&[0.0, 1.0]), &p(&[3.0, 0.0]), 1e-9).unwrap().member);
        let (a, b) = (p(&[0.0, 0.0]), p(&[2.0, 0.0]));
        assert!(segment_contains(&e2, &a, &b, &p(&[1.0, 0.0]), 1e-9).unwrap().member);
        assert!(!segment_contains(&e2, &a, &b, &p(&[1.0, 0.1]), 1e-9).unwrap().member);
        assert!(segment_contains(&e2, &a, &b, &a, 1e-9).unwrap().member);
    }

    #[test]
    fn segment_needs_real_distances() {
        let m2 = ConstantMetricSpace::pseudo_euclidean(2);
        let err = segment_contains(&m2, &p(&[0.0, 0.0]), &p(&[0.0, 1.0]), &p(&[0.0, 0.5]), 1e-9).unwrap_err();
        assert!(matches!(err, Error::NegativeSigma { .. }));
    }

    #[test]
    fn tube_examples() {
        let e2 = EuclideanSpace::new(2);
        assert!(tube_contains(&e2, &[p(&[0.0, 0.0]), p(&[1.0, 0.0])], &p(&[-3.0, 0.0]), 1e-9).unwrap().member);
        let e3 = EuclideanSpace::new(3);
        let plane = [p(&[0.0, 0.0, 0.0]), p(&[1.0, 0.0, 0.0]), p(&[0.0, 1.0, 0.0])];
        assert!(tube_contains(&e3, &plane, &p(&[2.0, 5.0, 0.0]), 1e-9).unwrap().member);
        assert!(!tube_contains(&e3, &plane, &p(&[2.0, 5.0, 0.1]), 1e-9).unwrap().member);
        let m3 = ConstantMetricSpace::pseudo_euclidean(3);
        let timelike = [p(&[0.0, 0.0, 0.0]), p(&[1.0, 0.0, 0.0])];
        let res = tube_contains(&m3, &timelike, &p(&[0.0, 1.0, 0.0]), 1e-9).unwrap();
        assert!(!res.member);
        assert_eq!(TubeBasis::new(&m3, &timelike, 1e-9).unwrap().extended_determinant(&m3, &p(&[0.0, 1.0, 0.0])).unwrap(), -1.0);
    }

    #[test]
    fn null_basis_is_degenerate_unless_allowed() {
        let m3 = ConstantMetricSpace::pseudo_euclidean(3);
        let null = [p(&[0.0, 0.0, 0.0]), p(&[1.0, 1.0, 0.0])];
        assert!(matches!(tube_contains(&m3, &null, &p(&[0.5, 0.5, 0.0]), 1e-9), Err(Error::DegenerateBasis { .. })));
        let t = TubeBasis::allowing_null(&m3, &null, 1e-9).unwrap();
        assert!(t.is_null());
        assert!(t.contains(&m3, &p(&[0.7, 0.7, -1.3]), 1e-9).unwrap().member);
        assert!(!t.contains(&m3, &p(&[0.7, 0.6, -1.3]), 1e-9).unwrap().member);
        let same = [p(&[0.0, 0.0, 0.0]), p(&[0.0, 0.0, 0.0])];
        assert!(TubeBasis::allowing_null(&m3, &same, 1e-9).is_err());
    }

    #[test]
    fn tube_through_point_examples() {
        let e2 = EuclideanSpace::new(2);
        let (p0, p1, q0) = (p(&[0.0, 0.0]), p(&[1.0, 0.0]), p(&[0.0, 1.0]));
        assert!(tube_through_point_contains(&e2, &p0, &p1, &q0, &p(&[4.0, 1.0]), 1e-9).unwrap().member);
        assert!(!tube_through_point_contains(&e2, &p0, &p1, &q0, &p(&[1.0, 2.0]), 1e-9).unwrap().member);
        assert!(matches!(tube_through_point_contains(&e2, &p0, &p1, &q0, &q0, 1e-9), Err(Error::ZeroVector { .. })));
        let m3 = ConstantMetricSpace::pseudo_euclidean(3);
        let o = p(&[0.0, 0.0, 0.0]);
        assert!(tube_through_point_contains(&m3, &o, &p(&[0.0, 0.0, 1.0]), &o, &p(&[1.0, 1.0, 0.0]), 1e-9).unwrap().member);
    }

    #[test]
    fn grid_points_are_row_major() {
        let g = GridSpec { window: Window::cube(2, 1.0), resolution: vec![3, 2] };
        assert_eq!(g.point(0), vec![-1.0, -1.0]);
        assert_eq!(g.point(1), vec![-1.0, 1.0]);
        assert_eq!(g.point(2), vec![0.0, -1.0]);
        assert_eq!(g.point(5), vec![1.0, 1.0]);
    }

    #[test]
    fn sample_tube_on_a_line() {
        let e2 = EuclideanSpace::new(2);
        let s = sample_tube(&e2, &[p(&[0.0, 0.0]), p(&[1.0, 1.0])], &Window::cube(2, 1.0), &[5, 5], 1e-9, false).unwrap();
        assert_eq!(s.points.len(), 5);
        assert!(s.points.iter().all(|q| q[0] == q[1]));
    }

    #[test]
    fn broken_line_is_l_shaped() {
        let e2 = EuclideanSpace::new(2);
        let v = [p(&[0.0, 0.0]), p(&[1.0, 0.0]), p(&[1.0, 1.0])];
        let s = broken_tube(&e2, &v, 11, 1e-9).unwrap();
        assert_eq!(s.points.len(), 21);
        assert!(s.points.iter().all(|q| q[1] == 0.0 || q[0] == 1.0));
        let repeated = [p(&[0.0, 0.0]), p(&[0.0, 0.0]), p(&[1.0, 0.0])];
        let s = broken_tube(&e2, &repeated, 11, 1e-9).unwrap();
        assert_eq!(s.points.len(), 11);
        assert_eq!(s.points[0], vec![0.0, 0.0]);
        assert_eq!(s.grids[0].len(), 1);
    }

    #[test]
    fn broken_line_rejects_links_with_negative_sigma() {
        let m2 = ConstantMetricSpace::pseudo_euclidean(2);
        let v = [p(&[0.0, 0.0]), p(&[0.0, 1.0])];
        assert!(matches!(broken_tube(&m2, &v, 5, 1e-9), Err(Error::NegativeSigma { .. })));
    }
}
