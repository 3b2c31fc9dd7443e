//! Fixtures shared by the kernel benchmarks.

use sigma_geometry::Point;

/// Simplex `P0 = 0, Pi = e_i + shear`.
pub fn simplex(n: usize) -> Vec<Point> {
    let mut out = vec![Point::Coords(vec![0.0; n])];
    for i in 0..n {
        let mut x: Vec<f64> = (0..n).map(|j| 0.1 * (i + j) as f64 / n as f64).collect();
        x[i] += 1.0;
        out.push(Point::Coords(x));
    }
    out
}
