//! Small linear-algebra helpers used across modules.

use nalgebra::DMatrix;

/// Block-diagonal matrix with `n/2` copies of `[[0, 1], [-1, 0]]`.
///
/// This is the Gram matrix of the symplectic form in a frame
/// `(v1, w1, v2, w2, ...)` with `omega(v_i, w_i) = 1`.
pub fn omega_blocks(n: usize) -> DMatrix<f64> {
    assert!(n.is_multiple_of(2), "symplectic dimension must be even");
    let mut m = DMatrix::zeros(n, n);
    for b in 0..n / 2 {
        m[(2 * b, 2 * b + 1)] = 1.0;
        m[(2 * b + 1, 2 * b)] = -1.0;
    }
    m
}

/// `sum_i dp_i ^ dq_i (u, v)` for coordinate vectors ordered `(q..., p...)`.
pub fn omega_canonical(u: &[f64], v: &[f64]) -> f64 {
    assert_eq!(u.len(), v.len());
    let n = u.len() / 2;
    (0..n).map(|i| u[n + i] * v[i] - v[n + i] * u[i]).sum()
}

/// Gram matrix of [`omega_canonical`] on the columns of `frame`.
pub fn omega_gram(frame: &DMatrix<f64>) -> DMatrix<f64> {
    let k = frame.ncols();
    DMatrix::from_fn(k, k, |i, j| {
        omega_canonical(frame.column(i).as_slice(), frame.column(j).as_slice())
    })
}

/// Max-abs defect of `Psi^T Omega Psi - Omega`.
pub fn symplectic_defect(psi: &DMatrix<f64>) -> f64 {
    let om = omega_blocks(psi.nrows());
    (psi.transpose() * &om * psi - om).amax()
}

/// Signature of a symmetric matrix. Eigenvalues with magnitude at most
/// `rel_tol * max|lambda|` (or below `1e-300`) count as zero. Returns
/// `(positive, negative, zero)`.
pub fn inertia(sym: &DMatrix<f64>, rel_tol: f64) -> (usize, usize, usize) {
    if sym.nrows() == 0 {
        return (0, 0, 0);
    }
    let s = (sym + sym.transpose()) * 0.5;
    let eig = s.symmetric_eigen();
    let scale = eig.eigenvalues.amax();
    let tol = (rel_tol * scale).max(1e-300);
    let mut out = (0, 0, 0);
    for &l in eig.eigenvalues.iter() {
        if l > tol {
            out.0 += 1;
        } else if l < -tol {
            out.1 += 1;
        } else {
            out.2 += 1;
        }
    }
    out
}

/// Numerical rank: singular values above `rel * sigma_max`.
pub fn numerical_rank(m: &DMatrix<f64>, rel: f64) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.amax();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel * smax).count()
}

/// Levi-Civita symbol on `{0, 1, 2}`.
pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Distance from `x` to the nearest integer, and that integer.
pub fn nearest_integer(x: f64) -> (f64, i64) {
    let n = x.round();
    ((x - n).abs(), n as i64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dvec(xs: &[f64]) -> nalgebra::DVector<f64> {
        nalgebra::DVector::from_column_slice(xs)
    }

    #[test]
    fn omega_blocks_is_antisymmetric_and_squares_to_minus_identity() {
        let om = omega_blocks(4);
        assert_eq!(om.transpose(), -&om);
        assert_eq!(&om * &om, -DMatrix::<f64>::identity(4, 4));
    }

    #[test]
    fn canonical_form_pairs_momentum_with_position() {
        // d/dp ^ d/dq evaluates to 1 in (q, p) ordering
        let dp = [0.0, 1.0];
        let dq = [1.0, 0.0];
        assert_eq!(omega_canonical(&dp, &dq), 1.0);
        assert_eq!(omega_canonical(&dq, &dp), -1.0);
    }

    #[test]
    fn inertia_counts_signs() {
        let m = DMatrix::from_diagonal(&dvec(&[2.0, -1.0, 0.0, 5.0]));
        assert_eq!(inertia(&m, 1e-12), (2, 1, 1));
    }

    #[test]
    fn rank_of_outer_product_is_one() {
        let v = dvec(&[1.0, 2.0, 3.0]);
        let m = &v * v.transpose();
        assert_eq!(numerical_rank(&m, 1e-8), 1);
    }

    #[test]
    fn gcd_basics() {
        assert_eq!(gcd(12, 18), 6);
        assert_eq!(gcd(7, 1), 1);
        assert_eq!(gcd(0, 5), 5);
    }
}
