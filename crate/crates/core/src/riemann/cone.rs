//! Directions at `x` that are collinear with a fixed direction at `x′`.
//!
//! With `a = σ_{il′}u^{l′}` and `c = g_{l′s′}u^{l′}u^{s′}` the condition on `dx`
//! is the quadratic form `Q = a aᵀ − c·g(x)`; the cone is its zero set on the
//! unit sphere of coordinate directions.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::sigma::SigmaSpace;

use super::metric::MetricField;
use super::tangent::{sigma_derivatives, FdSteps};

#[derive(Debug, Clone, PartialEq)]
pub struct ConeOptions {
    /// Number of net directions (points on the circle in 2-D).
    pub resolution: usize,
    /// Acceptance threshold for the normalised residual.
    pub tol: f64,
    /// Angular radius around ±u inside which every solution must fall for the
    /// cone to count as degenerate.
    pub cluster_radius: f64,
    /// Seed for the random net used above three dimensions.
    pub seed: u64,
    pub steps: FdSteps,
}

impl Default for ConeOptions {
    fn default() -> Self {
        Self { resolution: 10_000, tol: 1e-6, cluster_radius: 1e-2, seed: 0, steps: FdSteps::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeSolution {
    pub direction: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeResult {
    pub x: Vec<f64>,
    pub x2: Vec<f64>,
    /// The query direction at `x′`.
    pub u: Vec<f64>,
    /// `u` carried to `x`, `−g^{ik}σ_{kl′}u^{l′}`, normalised.
    pub u_at_x: Vec<f64>,
    pub form: DMatrix<f64>,
    pub solutions: Vec<ConeSolution>,
    pub degenerate: bool,
}

/// Unit directions covering the sphere in `dim` dimensions, and the typical
/// spacing between neighbours.
fn direction_net(dim: usize, count: usize, seed: u64) -> (Vec<Vec<f64>>, f64) {
    let count = count.max(4);
    match dim {
        1 => (vec![vec![1.0], vec![-1.0]], 2.0),
        2 => {
            let dirs = (0..count)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / count as f64;
                    vec![t.cos(), t.sin()]
                })
                .collect();
            (dirs, 2.0 * PI / count as f64)
        }
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            let dirs = (0..count)
                .map(|k| {
                    let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let t = golden * k as f64;
                    vec![r * t.cos(), r * t.sin(), z]
                })
                .collect();
            (dirs, (4.0 * PI / count as f64).sqrt())
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dirs = (0..count)
                .map(|_| {
                    let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                    let n = linalg::norm(&v);
                    v.into_iter().map(|c| c / n).collect()
                })
                .collect();
            let area = sphere_area(dim);
            // random nets leave larger holes than lattices
            (dirs, 2.0 * (area / count as f64).powf(1.0 / (dim - 1) as f64))
        }
    }
}

/// Surface area of the unit sphere in `dim` dimensions, `2π^{d/2}/Γ(d/2)`.
fn sphere_area(dim: usize) -> f64 {
    let mut gamma_half = if dim % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut k = if dim % 2 == 0 { 2 } else { 1 };
    while k < dim {
        gamma_half *= k as f64 / 2.0;
        k += 2;
    }
    2.0 * PI.powf(dim as f64 / 2.0) / gamma_half
}

fn angle_to_axis(d: &[f64], axis: &[f64]) -> f64 {
    linalg::dot(d, axis).abs().min(1.0).acos()
}

/// Newton iteration on the unit sphere for `r(d) = dᵀQd / norm = 0`.
fn refine(q: &DMatrix<f64>, norm: f64, start: &[f64], max_step: f64) -> (Vec<f64>, f64) {
    let mut d = DVector::from_column_slice(start);
    let mut r = (d.transpose() * q * &d)[(0, 0)] / norm;
    for _ in 0..100 {
        if r == 0.0 {
            break;
        }
        let grad = q * &d * (2.0 / norm);
        let tangential = &grad - &d * grad.dot(&d);
        let tt = tangential.norm_squared();
        if tt < 1e-300 {
            break;
        }
        let mut step = &tangential * (-r / tt);
        let len = step.norm();
        if len > max_step {
            step *= max_step / len;
        }
        let next = (&d + step).normalize();
        let rn = (next.transpose() * q * &next)[(0, 0)] / norm;
        if rn.abs() >= r.abs() {
            break;
        }
        d = next;
        r = rn;
    }
    (d.iter().copied().collect(), r)
}

/// Scans the unit directions at `x` for zeros of the collinearity form with
/// `dx′ ∝ u` at `x2`.
pub fn collinearity_cone<S: SigmaSpace + ?Sized>(
    space: &S,
    metric: &dyn MetricField,
    x: &[f64],
    x2: &[f64],
    u: &[f64],
    opts: &ConeOptions,
) -> Result<ConeResult> {
    let n = x.len();
    if u.len() != n {
        return Err(Error::DomainMismatch(format!("direction has {} components, expected {n}", u.len())));
    }
    let un = linalg::norm(u);
    if !(un > 0.0) {
        return Err(Error::ZeroVector { squared_length: 0.0 });
    }
    let td = sigma_derivatives(space, x, x2, opts.steps)?;
    let gx = metric.metric(x)?;
    let gx2 = metric.metric(x2)?;
    let uv = DVector::from_column_slice(u) / un;
    let a = &td.mixed * &uv;
    let c = (uv.transpose() * &gx2 * &uv)[(0, 0)];
    let form = &a * a.transpose() - &gx * c;

    let gx_inv = gx.clone().try_inverse().ok_or_else(|| Error::SingularMetric { at: x.to_vec() })?;
    let carried = -(gx_inv * &a);
    let u_at_x: Vec<f64> = carried.normalize().iter().copied().collect();

    let norm = (a.norm_squared() + c.abs() * linalg::max_abs(&gx) * n as f64).max(f64::MIN_POSITIVE);
    let form_norm = SymmetricEigen::new(form.clone()).eigenvalues.amax();
    let (mut net, spacing) = direction_net(n, opts.resolution, opts.seed);
    net.push(u_at_x.clone());
    let threshold = (3.0 * spacing * form_norm / norm).max(opts.tol);

    let found: Vec<Option<ConeSolution>> = net
        .par_iter()
        .map(|d| {
            let dv = DVector::from_column_slice(d);
            let r = (dv.transpose() * &form * &dv)[(0, 0)] / norm;
            if r.abs() > threshold {
                return None;
            }
            let (dir, res) = refine(&form, norm, d, 2.0 * spacing.min(0.25));
            (res.abs() <= opts.tol).then_some(ConeSolution { direction: dir, residual: res })
        })
        .collect();

    let mut solutions: Vec<ConeSolution> = Vec::new();
    for s in found.into_iter().flatten() {
        if solutions.iter().all(|t| linalg::norm(&linalg::sub(&t.direction, &s.direction)) > 1e-6) {
            solutions.push(s);
        }
    }
    let degenerate = !solutions.is_empty()
        && solutions.iter().all(|s| angle_to_axis(&s.direction, &u_at_x) <= opts.cluster_radius);
    Ok(ConeResult {
        x: x.to_vec(),
        x2: x2.to_vec(),
        u: u.to_vec(),
        u_at_x,
        form,
        solutions,
        degenerate,
    })
}
