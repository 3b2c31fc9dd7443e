//! Small dense helpers shared by the geometric kernels.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(m: &DMatrix<f64>) -> f64 {
    assert!(m.is_square(), "determinant of a non-square matrix");
    let n = m.nrows();
    if n == 0 {
        return 1.0;
    }
    let mut a = m.clone();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs()))
            .unwrap();
        if a[(pivot, col)] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            a.swap_rows(pivot, col);
            det = -det;
        }
        let p = a[(col, col)];
        det *= p;
        for row in col + 1..n {
            let factor = a[(row, col)] / p;
            if factor != 0.0 {
                for k in col + 1..n {
                    a[(row, k)] -= factor * a[(col, k)];
                }
            }
        }
    }
    det
}

/// Counts of (positive, negative) eigenvalues of a symmetric matrix; eigenvalues
/// with magnitude below `tol * max|λ|` count as zero and are skipped.
pub fn signature(m: &DMatrix<f64>, tol: f64) -> (usize, usize) {
    let eig = SymmetricEigen::new(m.clone());
    let scale = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
    let pos = eig.eigenvalues.iter().filter(|&&l| l > tol * scale).count();
    let neg = eig.eigenvalues.iter().filter(|&&l| l < -tol * scale).count();
    (pos, neg)
}

/// Dimension of the affine hull of `points` (rows), with singular values below
/// `tol` times the largest one treated as zero.
pub fn affine_rank(points: &[Vec<f64>], tol: f64) -> usize {
    if points.len() < 2 {
        return 0;
    }
    let dim = points[0].len();
    let n = points.len() as f64;
    let mut mean = vec![0.0; dim];
    for p in points {
        for (m, v) in mean.iter_mut().zip(p) {
            *m += v / n;
        }
    }
    let centered = DMatrix::from_fn(points.len(), dim, |i, j| points[i][j] - mean[j]);
    let sv = centered.singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * smax).count()
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn to_dvector(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
