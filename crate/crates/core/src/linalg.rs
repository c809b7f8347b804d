//! Small dense complex linear-algebra helpers shared by the operator builders.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Kronecker product with `a` as the slow (more significant) factor.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Largest entry magnitude.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && max_abs_diff(m, &m.adjoint()) <= tol
}

/// Deviation of `U^dagger U` from the identity.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    max_abs_diff(&(u.adjoint() * u), &identity(u.nrows()))
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues with the
/// matching orthonormal eigenvectors as columns.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// `exp(i * t * H)` for Hermitian `H`, through its spectral decomposition.
pub fn expm_i_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(h);
    let phases = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        values.len(),
        values.iter().map(|&e| C64::from_polar(1.0, t * e)),
    ));
    &vectors * phases * vectors.adjoint()
}

/// General matrix exponential by scaling and squaring of a truncated Taylor
/// series. Used as an independent oracle against closed forms.
pub fn expm_taylor(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let norm: f64 = a
        .row_iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let scaled = a * C64::from(scale);
    let mut result = identity(n);
    let mut term = identity(n);
    for k in 1..=24 {
        term = &term * &scaled * C64::from(1.0 / k as f64);
        result += &term;
        if max_abs(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Dense complex matrix as row-major `(re, im)` pairs.
pub fn to_row_major(m: &CMatrix) -> Vec<C64> {
    let mut out = Vec::with_capacity(m.len());
    for r in 0..m.nrows() {
        for col in 0..m.ncols() {
            out.push(m[(r, col)]);
        }
    }
    out
}
