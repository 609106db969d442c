//! Real symmetric embedding `S + iK ↦ [[S, −K], [K, S]]`.
//!
//! The embedding is PSD exactly when the Hermitian matrix is, and each
//! eigenvalue appears twice.

use num_complex::Complex64;

use super::linalg::{CMat, RMat};

pub fn embed_hermitian(m: &CMat) -> RMat {
    let n = m.nrows();
    let mut out = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let v = m[(i, j)];
            out[(i, j)] = v.re;
            out[(i + n, j + n)] = v.re;
            out[(i, j + n)] = -v.im;
            out[(i + n, j)] = v.im;
        }
    }
    out
}

/// Sparse form of [`embed_hermitian`]; zero parts are skipped.
pub fn embed_sparse(dim: usize, e: &[(usize, usize, Complex64)]) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::with_capacity(4 * e.len());
    for &(i, j, v) in e {
        if v.re != 0.0 {
            out.push((i, j, v.re));
            out.push((i + dim, j + dim, v.re));
        }
        if v.im != 0.0 {
            out.push((i, j + dim, -v.im));
            out.push((i + dim, j, v.im));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::linalg::eigh;

    #[test]
    fn doubled_spectrum() {
        let m = CMat::from_fn(3, 3, |i, j| {
            let a = Complex64::new((i + j) as f64 * 0.3, i as f64 - j as f64);
            if i == j {
                Complex64::new(a.re, 0.0)
            } else {
                a
            }
        });
        let (vals, _) = eigh(&m);
        let e = embed_hermitian(&m);
        assert!((&e - e.transpose()).norm() < 1e-15);
        let mut ev: Vec<f64> = e.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        for (k, v) in vals.iter().enumerate() {
            assert!((ev[2 * k] - v).abs() < 1e-10 && (ev[2 * k + 1] - v).abs() < 1e-10);
        }
    }
}
