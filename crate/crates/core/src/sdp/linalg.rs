//! Dense complex helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, Dyn};
use num_complex::Complex64;

use crate::relax::SparseEntries;

pub type CMat = DMatrix<Complex64>;
pub type RMat = DMatrix<f64>;

pub fn split(m: &CMat) -> (RMat, RMat) {
    (m.map(|c| c.re), m.map(|c| c.im))
}

pub fn join(re: &RMat, im: &RMat) -> CMat {
    re.zip_map(im, Complex64::new)
}

/// `a · b` through real matrix products, which are far faster than the
/// generic complex kernel.
pub fn cgemm_split(ar: &RMat, ai: &RMat, br: &RMat, bi: &RMat) -> (RMat, RMat) {
    let mut re = ar * br;
    re.gemm(-1.0, ai, bi, 1.0);
    let mut im = ar * bi;
    im.gemm(1.0, ai, br, 1.0);
    (re, im)
}

pub fn cgemm(a: &CMat, b: &CMat) -> CMat {
    let (ar, ai) = split(a);
    let (br, bi) = split(b);
    let (r, i) = cgemm_split(&ar, &ai, &br, &bi);
    join(&r, &i)
}

pub fn sparse_to_dense(dim: usize, e: &SparseEntries) -> CMat {
    let mut m = CMat::zeros(dim, dim);
    for &(r, c, v) in e {
        m[(r, c)] += v;
    }
    m
}

/// `Re tr(a† b)`, the real inner product of Hermitian matrices.
pub fn inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

/// `Re Σ conj(e) m[r, c]` over sparse entries: the inner product of a sparse
/// Hermitian matrix with a dense one.
pub fn sparse_inner(e: &SparseEntries, m: &CMat) -> f64 {
    e.iter()
        .map(|&(r, c, v)| {
            let x = m[(r, c)];
            v.re * x.re + v.im * x.im
        })
        .sum()
}

pub fn hermitize(m: &mut CMat) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)].im = 0.0;
        for j in 0..i {
            let v = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = v;
            m[(j, i)] = v.conj();
        }
    }
}

/// Cholesky factorization that fails unless `m` is Hermitian positive
/// definite. nalgebra's complex version takes complex square roots of the
/// pivots and so also "succeeds" on indefinite input.
pub fn cholesky_pd(m: &CMat) -> Option<Cholesky<Complex64, Dyn>> {
    let c = m.clone().cholesky()?;
    let l = c.l_dirty();
    (0..m.nrows())
        .all(|i| {
            let d = l[(i, i)];
            d.re > 0.0 && d.im.abs() <= 1e-12 * d.re
        })
        .then_some(c)
}

fn is_real(m: &CMat) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

fn to_complex(m: &RMat) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Ascending order of a decomposition.
fn sorted<T: nalgebra::Scalar + Copy>(values: &[f64], vectors: &DMatrix<T>) -> (Vec<f64>, DMatrix<T>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let vals = order.iter().map(|&i| values[i]).collect();
    let vecs = vectors.select_columns(&order);
    (vals, vecs)
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix. Real
/// input takes the much cheaper real symmetric path.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    if is_real(m) {
        let (vals, vecs) = eigh_real(&m.map(|z| z.re));
        return (vals, to_complex(&vecs));
    }
    let eig = m.clone().symmetric_eigen();
    sorted(eig.eigenvalues.as_slice(), &eig.eigenvectors)
}

pub fn eigh_real(m: &RMat) -> (Vec<f64>, RMat) {
    let eig = m.clone().symmetric_eigen();
    sorted(eig.eigenvalues.as_slice(), &eig.eigenvectors)
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    if is_real(m) {
        return m.map(|z| z.re).symmetric_eigenvalues().min();
    }
    m.clone().symmetric_eigenvalues().min()
}

/// Nearest PSD matrix in Frobenius norm.
pub fn psd_projection(m: &CMat) -> CMat {
    if is_real(m) {
        return to_complex(&psd_projection_real(&m.map(|z| z.re)));
    }
    let (vals, vecs) = eigh(m);
    let neg = vals.iter().take_while(|&&v| v < 0.0).count();
    if neg == 0 {
        let mut out = m.clone();
        hermitize(&mut out);
        return out;
    }
    // build from whichever eigenspace is smaller
    if 2 * neg < vals.len() {
        let part = vecs.columns(0, neg).into_owned();
        let mut out = m - scaled_outer(&part, &vals[..neg]);
        hermitize(&mut out);
        out
    } else {
        let part = vecs.columns(neg, vals.len() - neg).into_owned();
        scaled_outer(&part, &vals[neg..])
    }
}

pub fn psd_projection_real(m: &RMat) -> RMat {
    let (vals, vecs) = eigh_real(m);
    let neg = vals.iter().take_while(|&&v| v < 0.0).count();
    let symmetrize = |a: RMat| (&a + a.transpose()) * 0.5;
    if neg == 0 {
        return symmetrize(m.clone());
    }
    let (start, len, w) =
        if 2 * neg < vals.len() { (0, neg, &vals[..neg]) } else { (neg, vals.len() - neg, &vals[neg..]) };
    let part = vecs.columns(start, len).into_owned();
    let mut pw = part.clone();
    for (j, &x) in w.iter().enumerate() {
        pw.column_mut(j).scale_mut(x);
    }
    let outer = pw * part.transpose();
    if start == 0 {
        symmetrize(m - outer)
    } else {
        symmetrize(outer)
    }
}

/// `V diag(w) V†`.
pub fn scaled_outer(v: &CMat, w: &[f64]) -> CMat {
    let mut vw = v.clone();
    for (j, &x) in w.iter().enumerate() {
        vw.column_mut(j).scale_mut(x);
    }
    let mut out = cgemm(&vw, &v.adjoint());
    hermitize(&mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn split_product_matches_complex() {
        let a = CMat::from_fn(5, 4, |i, j| c(i as f64 - j as f64, (i * j) as f64 * 0.3));
        let b = CMat::from_fn(4, 3, |i, j| c((i + 2 * j) as f64 * 0.1, 1.0 - j as f64));
        assert!((cgemm(&a, &b) - &a * &b).norm() < 1e-12);
    }

    #[test]
    fn projection_clips_negative_part() {
        let m = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 2.0), c(0.0, -2.0), c(1.0, 0.0)]);
        let p = psd_projection(&m);
        assert!(min_eigenvalue(&p) > -1e-12);
        // eigenvalues 3 and -1: the projection keeps the 3-eigenspace
        let (vals, _) = eigh(&p);
        assert!((vals[1] - 3.0).abs() < 1e-12 && vals[0].abs() < 1e-12);
    }

    #[test]
    fn real_path_agrees_with_complex_kernel() {
        let m = CMat::from_fn(6, 6, |i, j| c(((i * 5 + j * 3) % 7) as f64 + ((j * 5 + i * 3) % 7) as f64 - 6.0, 0.0));
        let p = psd_projection(&m);
        // a vanishing imaginary perturbation forces the complex kernel
        let mut q = m.clone();
        q[(0, 1)].im = 1e-300;
        q[(1, 0)].im = -1e-300;
        assert!((psd_projection(&q) - &p).norm() < 1e-10);
        assert!((min_eigenvalue(&q) - min_eigenvalue(&m)).abs() < 1e-10);
        assert!(min_eigenvalue(&p) > -1e-10);
    }

    #[test]
    fn cholesky_rejects_indefinite_complex_input() {
        let indefinite = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 2.0), c(0.0, -2.0), c(1.0, 0.0)]);
        assert!(cholesky_pd(&indefinite).is_none());
        assert!(cholesky_pd(&-CMat::identity(3, 3)).is_none());
        let definite = CMat::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        assert!(cholesky_pd(&definite).is_some());
    }
}
