//! Small dense 2×2 spectral helpers used throughout the cocycle code.

use nalgebra::Matrix2;
use num_complex::Complex64;

/// Spectral norm (largest singular value) of a 2×2 matrix.
pub fn spectral_norm2(m: &Matrix2<f64>) -> f64 {
    let g = m.transpose() * m;
    let tr = g[(0, 0)] + g[(1, 1)];
    let det = (g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)]).max(0.0);
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    (0.5 * (tr + disc)).max(0.0).sqrt()
}

/// Eigenvalues of a 2×2 matrix from trace and determinant, computed with the
/// cancellation-free quadratic formula. Returns the pair ordered by modulus,
/// smaller first.
pub fn eig_from_trace_det(tr: f64, det: f64) -> (Complex64, Complex64) {
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        // avoid cancellation: compute the root of larger magnitude first
        let big = if tr >= 0.0 { 0.5 * (tr + sq) } else { 0.5 * (tr - sq) };
        let (a, b) = if big == 0.0 {
            (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
        } else {
            (Complex64::new(det / big, 0.0), Complex64::new(big, 0.0))
        };
        if a.norm() <= b.norm() {
            (a, b)
        } else {
            (b, a)
        }
    } else {
        let re = 0.5 * tr;
        let im = 0.5 * (-disc).sqrt();
        (Complex64::new(re, -im), Complex64::new(re, im))
    }
}

/// Eigenvalues of a 2×2 matrix, ordered by modulus (smaller first).
pub fn eig2(m: &Matrix2<f64>) -> (Complex64, Complex64) {
    eig_from_trace_det(m.trace(), m.determinant())
}

/// Real eigenvector for a real eigenvalue of a 2×2 matrix, unit length.
/// Picks the better-conditioned of the two row equations.
pub fn eigenvector2(m: &Matrix2<f64>, lambda: f64) -> nalgebra::Vector2<f64> {
    let a = m[(0, 0)] - lambda;
    let b = m[(0, 1)];
    let c = m[(1, 0)];
    let d = m[(1, 1)] - lambda;
    // rows of (M - λI); the eigenvector is orthogonal to the larger row
    let r1 = a.hypot(b);
    let r2 = c.hypot(d);
    let v = if r1 >= r2 {
        nalgebra::Vector2::new(-b, a)
    } else {
        nalgebra::Vector2::new(-d, c)
    };
    let n = v.norm();
    if n == 0.0 {
        // λ has geometric multiplicity 2: any direction works
        nalgebra::Vector2::new(1.0, 0.0)
    } else {
        v / n
    }
}
