//! The world function and the scalar-product kernel built from it.
//!
//! Every geometric statement in this crate is phrased through a single
//! evaluator `σ(P, Q)` (half the squared distance). Scalar products, Gram
//! determinants and collinearity all reduce to sums of σ values, so they
//! apply unchanged to proper Euclidean, pseudo-Euclidean, curved and purely
//! tabulated spaces.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;

/// Largest basis order accepted by [`gram`].
pub const MAX_ORDER: usize = 16;

/// Absolute floor applied to every scaled tolerance.
pub const TOL_FLOOR: f64 = 1e-12;

/// `tol · max(scale, 1)`, floored at [`TOL_FLOOR`].
pub fn scaled_tol(tol: f64, scale: f64) -> f64 {
    (tol * scale.abs().max(1.0)).max(TOL_FLOOR)
}

/// A point of a σ-space: ambient coordinates or an index into a table.
#[derive(Debug, Clone, PartialEq)]
pub enum Point {
    Coords(Vec<f64>),
    Label(usize),
}

impl Point {
    pub fn coords(x: impl Into<Vec<f64>>) -> Self {
        Point::Coords(x.into())
    }

    pub fn as_coords(&self) -> Option<&[f64]> {
        match self {
            Point::Coords(x) => Some(x),
            Point::Label(_) => None,
        }
    }

    /// Same label, or coordinates within `tol · max(1, |x|)` in max-norm.
    pub fn approx_eq(&self, other: &Point, tol: f64) -> bool {
        match (self, other) {
            (Point::Label(a), Point::Label(b)) => a == b,
            (Point::Coords(a), Point::Coords(b)) => {
                a.len() == b.len() && {
                    let scale = a.iter().chain(b).fold(1.0_f64, |m, v| m.max(v.abs()));
                    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= scaled_tol(tol, scale))
                }
            }
            _ => false,
        }
    }
}

impl From<Vec<f64>> for Point {
    fn from(x: Vec<f64>) -> Self {
        Point::Coords(x)
    }
}

impl From<&[f64]> for Point {
    fn from(x: &[f64]) -> Self {
        Point::Coords(x.to_vec())
    }
}

impl<const N: usize> From<[f64; N]> for Point {
    fn from(x: [f64; N]) -> Self {
        Point::Coords(x.to_vec())
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Label(i) => write!(f, "#{i}"),
            Point::Coords(x) => {
                write!(f, "(")?;
                for (i, v) in x.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// What kind of points a space accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// Points are coordinate vectors of this arity.
    Coords { dim: usize },
    /// Points are labels `0..count`.
    Finite { count: usize },
}

impl Domain {
    pub fn check(&self, p: &Point) -> Result<()> {
        match (self, p) {
            (Domain::Coords { dim }, Point::Coords(x)) => {
                if x.len() != *dim {
                    return Err(Error::DomainMismatch(format!(
                        "expected {dim} coordinates, got {}",
                        x.len()
                    )));
                }
                if x.iter().any(|v| !v.is_finite()) {
                    return Err(Error::DomainMismatch(format!("non-finite coordinate in {p}")));
                }
                Ok(())
            }
            (Domain::Finite { count }, Point::Label(i)) => {
                if i >= count {
                    Err(Error::DomainMismatch(format!("label {i} out of range 0..{count}")))
                } else {
                    Ok(())
                }
            }
            (Domain::Coords { .. }, Point::Label(_)) => Err(Error::DomainMismatch(
                "label given to a coordinate space".into(),
            )),
            (Domain::Finite { .. }, Point::Coords(_)) => Err(Error::DomainMismatch(
                "coordinates given to a finite space".into(),
            )),
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            Domain::Coords { dim } => Some(*dim),
            Domain::Finite { .. } => None,
        }
    }
}

/// A set of points equipped with a world function.
///
/// Implementations must return `σ(P, P) = 0` and `σ(P, Q) = σ(Q, P)`;
/// nothing else (positivity, triangle inequality) is assumed anywhere.
/// `world_function` may assume both points already passed
/// [`Domain::check`]; use [`sigma`] for checked evaluation.
pub trait SigmaSpace: Send + Sync {
    fn domain(&self) -> Domain;

    fn world_function(&self, p: &Point, q: &Point) -> Result<f64>;
}

impl<S: SigmaSpace + ?Sized> SigmaSpace for &S {
    fn domain(&self) -> Domain {
        (**self).domain()
    }
    fn world_function(&self, p: &Point, q: &Point) -> Result<f64> {
        (**self).world_function(p, q)
    }
}

impl<S: SigmaSpace + ?Sized> SigmaSpace for std::sync::Arc<S> {
    fn domain(&self) -> Domain {
        (**self).domain()
    }
    fn world_function(&self, p: &Point, q: &Point) -> Result<f64> {
        (**self).world_function(p, q)
    }
}

impl<S: SigmaSpace + ?Sized> SigmaSpace for Box<S> {
    fn domain(&self) -> Domain {
        (**self).domain()
    }
    fn world_function(&self, p: &Point, q: &Point) -> Result<f64> {
        (**self).world_function(p, q)
    }
}

/// `n+1` labeled points with a symmetric table of σ values.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSigmaSpace {
    table: DMatrix<f64>,
}

impl FiniteSigmaSpace {
    /// Validates the table: square, finite, zero diagonal and exactly symmetric.
    pub fn new(table: DMatrix<f64>) -> Result<Self> {
        if !table.is_square() {
            return Err(Error::InvalidTable(format!(
                "table is {}x{}, not square",
                table.nrows(),
                table.ncols()
            )));
        }
        if table.nrows() == 0 {
            return Err(Error::InvalidTable("table is empty".into()));
        }
        let n = table.nrows();
        for i in 0..n {
            for j in 0..n {
                let v = table[(i, j)];
                if !v.is_finite() {
                    return Err(Error::InvalidTable(format!("entry ({i},{j}) is not finite")));
                }
                if i == j && v != 0.0 {
                    return Err(Error::InvalidTable(format!("diagonal entry {i} is {v}, not 0")));
                }
                if v != table[(j, i)] {
                    return Err(Error::InvalidTable(format!(
                        "entries ({i},{j}) = {v} and ({j},{i}) = {} differ",
                        table[(j, i)]
                    )));
                }
            }
        }
        Ok(Self { table })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidTable("rows have inconsistent lengths".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Tabulates `space` on the given points; the result is symmetrized
    /// by evaluating only the upper triangle.
    pub fn sample<S: SigmaSpace + ?Sized>(space: &S, points: &[Point]) -> Result<Self> {
        let n = points.len();
        let mut table = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let v = sigma(space, &points[i], &points[j])?;
                table[(i, j)] = v;
                table[(j, i)] = v;
            }
        }
        Self::new(table)
    }

    pub fn len(&self) -> usize {
        self.table.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.table.nrows() == 0
    }

    pub fn table(&self) -> &DMatrix<f64> {
        &self.table
    }

    pub fn labels(&self) -> impl Iterator<Item = Point> {
        (0..self.len()).map(Point::Label)
    }
}

impl SigmaSpace for FiniteSigmaSpace {
    fn domain(&self) -> Domain {
        Domain::Finite { count: self.len() }
    }

    fn world_function(&self, p: &Point, q: &Point) -> Result<f64> {
        match (p, q) {
            (Point::Label(i), Point::Label(j)) => Ok(self.table[(*i, *j)]),
            _ => Err(Error::DomainMismatch("finite space expects labels".into())),
        }
    }
}

/// Checked world function σ(p, q).
pub fn sigma<S: SigmaSpace + ?Sized>(space: &S, p: &Point, q: &Point) -> Result<f64> {
    let domain = space.domain();
    domain.check(p)?;
    domain.check(q)?;
    space.world_function(p, q)
}

/// ρ = √(2σ). Errors with [`Error::NegativeSigma`] for σ < 0.
pub fn metric<S: SigmaSpace + ?Sized>(space: &S, p: &Point, q: &Point) -> Result<f64> {
    rho_from_sigma(sigma(space, p, q)?)
}

pub fn rho_from_sigma(s: f64) -> Result<f64> {
    if s < 0.0 {
        Err(Error::NegativeSigma { sigma: s })
    } else {
        Ok((2.0 * s).sqrt())
    }
}

/// Γ(P0, P1, P2) = σ(P0,P1) + σ(P0,P2) − σ(P1,P2), the scalar product
/// of the vectors P0P1 and P0P2.
pub fn gamma<S: SigmaSpace + ?Sized>(space: &S, p0: &Point, p1: &Point, p2: &Point) -> Result<f64> {
    Ok(sigma(space, p0, p1)? + sigma(space, p0, p2)? - sigma(space, p1, p2)?)
}

/// Scalar product (P0P1 · Q0Q1) = σ(P0,Q1) + σ(Q0,P1) − σ(P0,Q0) − σ(P1,Q1).
pub fn scalar_product<S: SigmaSpace + ?Sized>(
    space: &S,
    p0: &Point,
    p1: &Point,
    q0: &Point,
    q1: &Point,
) -> Result<f64> {
    Ok(sigma(space, p0, q1)? + sigma(space, q0, p1)? - sigma(space, p0, q0)? - sigma(space, p1, q1)?)
}

/// Gram matrix `g_ik = Γ(P0, Pi, Pk)` of an ordered basis and its determinant `F_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramResult {
    pub gamma_matrix: DMatrix<f64>,
    pub determinant: f64,
    pub basis: Vec<Point>,
}

impl GramResult {
    /// Order `n` of the basis (`n + 1` points).
    pub fn order(&self) -> usize {
        self.gamma_matrix.nrows()
    }

    /// Squared length |M(P^n)|² = F_n; `(n! · volume)²` in Euclidean space.
    pub fn squared_length(&self) -> f64 {
        self.determinant
    }

    /// Largest |Γ| among the diagonal entries, i.e. max over i of 2|σ(P0,Pi)|.
    pub fn scale(&self) -> f64 {
        (0..self.order()).fold(0.0_f64, |m, i| m.max(self.gamma_matrix[(i, i)].abs()))
    }
}

/// Gram matrix and determinant for `basis = [P0, …, Pn]`, `1 ≤ n ≤ 16`.
pub fn gram<S: SigmaSpace + ?Sized>(space: &S, basis: &[Point]) -> Result<GramResult> {
    if basis.len() < 2 {
        return Err(Error::BasisTooSmall(basis.len()));
    }
    let n = basis.len() - 1;
    if n > MAX_ORDER {
        return Err(Error::OrderCap { order: n, cap: MAX_ORDER });
    }
    let p0 = &basis[0];
    let s0: Vec<f64> = basis[1..]
        .iter()
        .map(|p| sigma(space, p0, p))
        .collect::<Result<_>>()?;
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        g[(i, i)] = 2.0 * s0[i];
        for k in i + 1..n {
            let v = s0[i] + s0[k] - sigma(space, &basis[i + 1], &basis[k + 1])?;
            g[(i, k)] = v;
            g[(k, i)] = v;
        }
    }
    let determinant = linalg::determinant(&g);
    Ok(GramResult { gamma_matrix: g, determinant, basis: basis.to_vec() })
}

/// Hero's formula √(p(p−a)(p−b)(p−c)).
///
/// Slightly negative products (from rounding on degenerate triangles) are
/// clamped to zero when within `1e-12` of the scale `p⁴`.
pub fn hero_area(a: f64, b: f64, c: f64) -> Result<f64> {
    if a < 0.0 || b < 0.0 || c < 0.0 || !(a + b + c).is_finite() {
        return Err(Error::TriangleInequalityViolated { a, b, c });
    }
    let p = 0.5 * (a + b + c);
    let slack = TOL_FLOOR * p.max(1.0);
    let (pa, pb, pc) = (p - a, p - b, p - c);
    if pa < -slack || pb < -slack || pc < -slack {
        return Err(Error::TriangleInequalityViolated { a, b, c });
    }
    Ok((p * pa.max(0.0) * pb.max(0.0) * pc.max(0.0)).sqrt())
}

/// Collinearity of P0P1 and Q0Q1: `(P0P1·Q0Q1)² = |P0P1|² |Q0Q1|²`, tested
/// relative to `max(1, ||P0P1|² |Q0Q1|²|)`.
pub fn is_collinear<S: SigmaSpace + ?Sized>(
    space: &S,
    p0: &Point,
    p1: &Point,
    q0: &Point,
    q1: &Point,
    tol: f64,
) -> Result<bool> {
    let pp = scalar_product(space, p0, p1, p0, p1)?;
    let qq = scalar_product(space, q0, q1, q0, q1)?;
    for sq in [pp, qq] {
        if sq.abs() <= scaled_tol(tol, 1.0) {
            return Err(Error::ZeroVector { squared_length: sq });
        }
    }
    let pq = scalar_product(space, p0, p1, q0, q1)?;
    Ok(collinearity_residual(pq, pp, qq).abs() <= scaled_tol(tol, pp * qq))
}

/// `(a·b)² − |a|²|b|²`, which vanishes exactly for collinear vectors.
pub fn collinearity_residual(ab: f64, aa: f64, bb: f64) -> f64 {
    ab * ab - aa * bb
}
