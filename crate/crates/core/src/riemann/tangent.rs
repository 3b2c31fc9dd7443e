//! Finite-difference derivatives of σ and the tangent Euclidean metric.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::sigma::{Point, SigmaSpace};

use super::metric::MetricField;

/// Central-difference steps, before scaling by `max(1, |coordinate|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdSteps {
    pub first: f64,
    pub mixed: f64,
    pub third: f64,
}

impl Default for FdSteps {
    fn default() -> Self {
        Self { first: 1e-5, mixed: 1e-4, third: 1e-3 }
    }
}

impl FdSteps {
    pub fn uniform(h: f64) -> Self {
        Self { first: h, mixed: h, third: h }
    }

    fn scaled(&self, x: &[f64], x2: &[f64]) -> Self {
        let s = x.iter().chain(x2).fold(1.0_f64, |m, v| m.max(v.abs()));
        Self { first: self.first * s, mixed: self.mixed * s, third: self.third * s }
    }
}

/// Derivatives of σ at a pair `(x, x′)`. Indices without a prime refer to `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentData {
    pub x: Vec<f64>,
    pub x2: Vec<f64>,
    pub sigma: f64,
    /// σ_i
    pub grad_x: Vec<f64>,
    /// σ_{i′}
    pub grad_x2: Vec<f64>,
    /// σ_{ik′}: row `i` at `x`, column `k′` at `x′`.
    pub mixed: DMatrix<f64>,
    /// σ^{ik′}, defined by σ_{ik′}σ^{lk′} = δ_i^l.
    pub mixed_inverse: DMatrix<f64>,
    pub mixed_det: f64,
    pub metric_x: Option<DMatrix<f64>>,
    pub metric_x2: Option<DMatrix<f64>>,
    /// G_ik, metric at `x` of the Euclidean space tangent at `x′`.
    pub tangent_metric: Option<DMatrix<f64>>,
    /// Δ_ik = G_ik − g_ik(x).
    pub delta: Option<DMatrix<f64>>,
    /// −σ_{il′}g^{l′s′}, carrying covectors at `x′` to `x`.
    pub transport: Option<DMatrix<f64>>,
    /// Steps actually used, after scaling.
    pub steps: FdSteps,
}

struct Sigma<'a, S: ?Sized> {
    space: &'a S,
}

impl<S: SigmaSpace + ?Sized> Sigma<'_, S> {
    fn at(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.space.world_function(&Point::Coords(x.to_vec()), &Point::Coords(y.to_vec()))
    }

    /// ∂²σ/∂x^i∂x^k with `y` held fixed.
    fn hessian_x(&self, x: &[f64], y: &[f64], h: f64) -> Result<DMatrix<f64>> {
        let n = x.len();
        let centre = self.at(x, y)?;
        let mut out = DMatrix::zeros(n, n);
        let mut p = x.to_vec();
        for i in 0..n {
            p[i] = x[i] + h;
            let plus = self.at(&p, y)?;
            p[i] = x[i] - h;
            let minus = self.at(&p, y)?;
            p[i] = x[i];
            out[(i, i)] = (plus - 2.0 * centre + minus) / (h * h);
            for k in 0..i {
                let mut acc = 0.0;
                for (si, sk) in [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)] {
                    p[i] = x[i] + si * h;
                    p[k] = x[k] + sk * h;
                    acc += si * sk * self.at(&p, y)?;
                }
                p[i] = x[i];
                p[k] = x[k];
                out[(i, k)] = acc / (4.0 * h * h);
                out[(k, i)] = out[(i, k)];
            }
        }
        Ok(out)
    }
}

fn check_pair<S: SigmaSpace + ?Sized>(space: &S, x: &[f64], x2: &[f64]) -> Result<()> {
    space.domain().check(&Point::Coords(x.to_vec()))?;
    space.domain().check(&Point::Coords(x2.to_vec()))?;
    Ok(())
}

/// First derivatives and the mixed matrix σ_{ik′}.
pub fn sigma_derivatives<S: SigmaSpace + ?Sized>(space: &S, x: &[f64], x2: &[f64], steps: FdSteps) -> Result<TangentData> {
    check_pair(space, x, x2)?;
    let steps = steps.scaled(x, x2);
    let s = Sigma { space };
    let n = x.len();
    let h1 = steps.first;
    let mut grad_x = vec![0.0; n];
    let mut grad_x2 = vec![0.0; n];
    let (mut p, mut q) = (x.to_vec(), x2.to_vec());
    for i in 0..n {
        p[i] = x[i] + h1;
        let a = s.at(&p, x2)?;
        p[i] = x[i] - h1;
        let b = s.at(&p, x2)?;
        p[i] = x[i];
        grad_x[i] = (a - b) / (2.0 * h1);
        q[i] = x2[i] + h1;
        let a = s.at(x, &q)?;
        q[i] = x2[i] - h1;
        let b = s.at(x, &q)?;
        q[i] = x2[i];
        grad_x2[i] = (a - b) / (2.0 * h1);
    }
    let h2 = steps.mixed;
    let mut mixed = DMatrix::zeros(n, n);
    for i in 0..n {
        for k in 0..n {
            let mut acc = 0.0;
            for (si, sk) in [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)] {
                p[i] = x[i] + si * h2;
                q[k] = x2[k] + sk * h2;
                acc += si * sk * s.at(&p, &q)?;
            }
            p[i] = x[i];
            q[k] = x2[k];
            mixed[(i, k)] = acc / (4.0 * h2 * h2);
        }
    }
    let mixed_det = linalg::determinant(&mixed);
    let scale = linalg::max_abs(&mixed).powi(n as i32);
    if !(mixed_det.abs() > 1e-10 * scale) {
        return Err(Error::SingularMixed { det: mixed_det });
    }
    let mixed_inverse = mixed
        .transpose()
        .try_inverse()
        .ok_or(Error::SingularMixed { det: mixed_det })?;
    Ok(TangentData {
        x: x.to_vec(),
        x2: x2.to_vec(),
        sigma: s.at(x, x2)?,
        grad_x,
        grad_x2,
        mixed,
        mixed_inverse,
        mixed_det,
        metric_x: None,
        metric_x2: None,
        tangent_metric: None,
        delta: None,
        transport: None,
        steps,
    })
}

/// Full tangent data: adds `G_ik = σ_ik − σ^{ls′}σ_{iks′}σ_l`, Δ and the
/// transport operator, with `g` taken from `metric`.
pub fn tangent_metric<S: SigmaSpace + ?Sized>(
    space: &S,
    metric: &dyn MetricField,
    x: &[f64],
    x2: &[f64],
    steps: FdSteps,
) -> Result<TangentData> {
    let mut td = sigma_derivatives(space, x, x2, steps)?;
    let s = Sigma { space };
    let n = x.len();
    let hess = s.hessian_x(x, x2, td.steps.mixed)?;
    // w_s = σ^{ls′}σ_l
    let w = td.mixed_inverse.transpose() * DVector::from_column_slice(&td.grad_x);
    let h3 = td.steps.third;
    let mut correction = DMatrix::zeros(n, n);
    let mut q = x2.to_vec();
    for (sdx, ws) in w.iter().enumerate() {
        q[sdx] = x2[sdx] + h3;
        let plus = s.hessian_x(x, &q, h3)?;
        q[sdx] = x2[sdx] - h3;
        let minus = s.hessian_x(x, &q, h3)?;
        q[sdx] = x2[sdx];
        correction += (plus - minus) * (ws / (2.0 * h3));
    }
    let big_g = hess - correction;
    let gx = metric.metric(x)?;
    let gx2 = metric.metric(x2)?;
    let gx2_inv = gx2.clone().try_inverse().ok_or_else(|| Error::SingularMetric { at: x2.to_vec() })?;
    td.transport = Some(-&td.mixed * gx2_inv);
    td.delta = Some(&big_g - &gx);
    td.tangent_metric = Some(big_g);
    td.metric_x = Some(gx);
    td.metric_x2 = Some(gx2);
    Ok(td)
}

/// Residuals of three identities every Riemannian world function satisfies.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityDiagnostics {
    pub sigma: f64,
    /// |σ_l σ^{lj′} σ_{j′} − 2σ|
    pub gradient_norm_residual: f64,
    /// max_i |(G_ik − g_ik)σ^k|
    pub geodesic_direction_residual: f64,
    /// max |g_{l′s′} − σ_{il′}G^{ik}σ_{ks′}|
    pub metric_transfer_residual: f64,
    pub mixed_det: f64,
    pub steps: FdSteps,
}

pub fn check_worldfunction_identities<S: SigmaSpace + ?Sized>(
    space: &S,
    metric: &dyn MetricField,
    x: &[f64],
    x2: &[f64],
    steps: FdSteps,
) -> Result<IdentityDiagnostics> {
    let td = tangent_metric(space, metric, x, x2, steps)?;
    let gx = td.metric_x.as_ref().unwrap();
    let gx2 = td.metric_x2.as_ref().unwrap();
    let big_g = td.tangent_metric.as_ref().unwrap();
    let sx = DVector::from_column_slice(&td.grad_x);
    let sx2 = DVector::from_column_slice(&td.grad_x2);
    let first = (sx.transpose() * &td.mixed_inverse * &sx2)[(0, 0)] - 2.0 * td.sigma;

    let gx_inv = gx.clone().try_inverse().ok_or_else(|| Error::SingularMetric { at: x.to_vec() })?;
    let raised = gx_inv * &sx;
    let second = (big_g - gx) * raised;

    let big_g_inv = big_g
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularMetric { at: x.to_vec() })?;
    let third = gx2 - td.mixed.transpose() * big_g_inv * &td.mixed;

    Ok(IdentityDiagnostics {
        sigma: td.sigma,
        gradient_norm_residual: first.abs(),
        geodesic_direction_residual: second.amax(),
        metric_transfer_residual: linalg::max_abs(&third),
        mixed_det: td.mixed_det,
        steps: td.steps,
    })
}
