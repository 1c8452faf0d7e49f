//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `max |H - H†|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// `max |U†U - I|`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - CMatrix::identity(n, n)))
}

pub fn real_diagonal(m: &CMatrix) -> Vec<f64> {
    (0..m.nrows()).map(|i| m[(i, i)].re).collect()
}

pub fn trace(m: &CMatrix) -> C64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

/// Eigen-decomposition of a Hermitian matrix: real eigenvalues and the
/// unitary whose columns are the matching eigenvectors.
pub fn hermitian_eigen(m: &CMatrix) -> Option<(Vec<f64>, CMatrix)> {
    if m.nrows() == 0 {
        return Some((Vec::new(), m.clone()));
    }
    let eig = nalgebra::linalg::SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0)?;
    let values = eig.eigenvalues.iter().copied().collect::<Vec<_>>();
    if values.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some((values, eig.eigenvectors))
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Option<Vec<f64>> {
    hermitian_eigen(m).map(|(v, _)| v)
}

/// Eigenphases in `[-pi, pi)` and eigenvectors (columns) of a unitary
/// matrix, read off its complex Schur form. For a normal matrix the
/// triangular factor is diagonal up to roundoff.
pub fn unitary_eigen(u: &CMatrix) -> Option<(Vec<f64>, CMatrix)> {
    let n = u.nrows();
    if n == 0 {
        return Some((Vec::new(), u.clone()));
    }
    let schur = nalgebra::linalg::Schur::try_new(u.clone(), f64::EPSILON, 0)?;
    let (q, t) = schur.unpack();
    let phases = (0..n).map(|i| wrap_phase(t[(i, i)].arg())).collect::<Vec<_>>();
    if phases.iter().any(|p| !p.is_finite()) {
        return None;
    }
    Some((phases, q))
}

/// Map an angle onto `[-pi, pi)`.
pub fn wrap_phase(theta: f64) -> f64 {
    use std::f64::consts::PI;
    let mut t = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if t >= PI {
        t -= 2.0 * PI;
    }
    t
}

/// `diag(U rho U†)` without forming the full product.
pub fn conjugated_diagonal(u: &CMatrix, rho: &CMatrix) -> Vec<f64> {
    let m = u * rho;
    (0..u.nrows()).map(|k| (0..u.ncols()).map(|j| m[(k, j)] * u[(k, j)].conj()).sum::<C64>().re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn wrap_phase_range() {
        for &t in &[-3.0 * PI, -PI, 0.0, PI, 2.5 * PI, 7.0] {
            let w = wrap_phase(t);
            assert!((-PI..PI).contains(&w), "{t} -> {w}");
            assert!(((w - t) / (2.0 * PI)).fract().abs() < 1e-12 || ((w - t) / (2.0 * PI)).fract().abs() > 1.0 - 1e-12);
        }
    }

    #[test]
    fn unitary_eigen_of_diagonal_phases() {
        let u = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)]));
        let (mut phases, _) = unitary_eigen(&u).unwrap();
        phases.sort_by(f64::total_cmp);
        let expected = [-PI, -PI / 2.0, 0.0, PI / 2.0];
        for (p, e) in phases.iter().zip(expected) {
            assert!((p - e).abs() < 1e-12);
        }
    }

    #[test]
    fn conjugated_diagonal_matches_full_product() {
        let u = CMatrix::from_fn(3, 3, |i, j| c((i * 3 + j) as f64 * 0.1, (i as f64) - (j as f64)));
        let rho =
            CMatrix::from_fn(
                3,
                3,
                |i, j| if i == j { c(1.0 + i as f64, 0.0) } else { c(0.2, 0.1 * (i as f64 - j as f64)) },
            );
        let full = &u * &rho * u.adjoint();
        let diag = conjugated_diagonal(&u, &rho);
        for k in 0..3 {
            assert!((full[(k, k)].re - diag[k]).abs() < 1e-12);
        }
    }
}
