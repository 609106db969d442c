//! Primal–dual interior-point method on Hermitian PSD blocks and LP rows.
//!
//! Standard form: `min cᵀx  s.t.  Gx + s = h, s ∈ K, Ax = b` with `K` the
//! product of a nonnegative orthant (box and ranged rows) and one Hermitian
//! PSD cone per block. Search directions use Nesterov–Todd scaling and a
//! Mehrotra predictor–corrector. The scaling of a block is the matrix `R`
//! with `R s Rᴴ = R⁻ᴴ z R⁻¹ = Λ` diagonal.

use nalgebra::DVector;
use num_complex::Complex64;

use super::certificate::{infeasibility_margin, lagrangian_bound, DualPoint};
use super::linalg::{self, CMat, RMat};
use super::presolve::Reduced;
use super::{ConicProblem, SolverKind, SolverSettings, SolverStatus};
use crate::error::{Error, Result};
use crate::relax::SparseEntries;

const STEP_FRACTION: f64 = 0.99;
const REG: f64 = 1e-13;
/// Elements of the stacked `A_j V` chunk used when forming the Newton matrix.
const CHUNK_ELEMS: usize = 1 << 21;

enum LpSource {
    Bound,
    RowLo(usize),
    RowHi(usize),
}

struct BlockData {
    dim: usize,
    h: CMat,
    terms: Vec<(usize, SparseEntries)>,
}

/// Normalized standard-form data.
struct Data {
    m: usize,
    c: Vec<f64>,
    c_scale: f64,
    lp_g: Vec<Vec<(usize, f64)>>,
    lp_h: Vec<f64>,
    lp_src: Vec<LpSource>,
    row_scale: Vec<f64>,
    eq: Vec<Vec<(usize, f64)>>,
    eq_b: Vec<f64>,
    eq_scale: Vec<f64>,
    blocks: Vec<BlockData>,
    /// Position of each variable in the dense Newton block, if any.
    dense_pos: Vec<Option<usize>>,
    dense_vars: Vec<usize>,
}

impl Data {
    fn new(red: &Reduced, c_scale: f64) -> Data {
        let m = red.len();
        let mut lp_g = Vec::new();
        let mut lp_h = Vec::new();
        let mut lp_src = Vec::new();
        for i in 0..m {
            if red.lower[i].is_finite() {
                lp_g.push(vec![(i, -1.0)]);
                lp_h.push(-red.lower[i]);
                lp_src.push(LpSource::Bound);
            }
            if red.upper[i].is_finite() {
                lp_g.push(vec![(i, 1.0)]);
                lp_h.push(red.upper[i]);
                lp_src.push(LpSource::Bound);
            }
        }
        let mut row_scale = Vec::with_capacity(red.ineq.len());
        let mut in_dense = vec![false; m];
        for (j, r) in red.ineq.iter().enumerate() {
            let s = r.coeffs.iter().fold(0.0f64, |a, t| a.max(t.1.abs()));
            row_scale.push(s);
            if r.coeffs.len() > 1 {
                for &(i, _) in &r.coeffs {
                    in_dense[i] = true;
                }
            }
            if r.hi.is_finite() {
                lp_g.push(r.coeffs.iter().map(|&(i, a)| (i, a / s)).collect());
                lp_h.push(r.hi / s);
                lp_src.push(LpSource::RowHi(j));
            }
            if r.lo.is_finite() {
                lp_g.push(r.coeffs.iter().map(|&(i, a)| (i, -a / s)).collect());
                lp_h.push(-r.lo / s);
                lp_src.push(LpSource::RowLo(j));
            }
        }
        let mut eq = Vec::new();
        let mut eq_b = Vec::new();
        let mut eq_scale = Vec::new();
        for r in &red.eq {
            let s = r.coeffs.iter().fold(0.0f64, |a, t| a.max(t.1.abs()));
            eq.push(r.coeffs.iter().map(|&(i, a)| (i, a / s)).collect());
            eq_b.push(r.lo / s);
            eq_scale.push(s);
        }
        let blocks: Vec<BlockData> = red
            .blocks
            .iter()
            .map(|b| {
                for (i, _) in &b.terms {
                    in_dense[*i] = true;
                }
                BlockData { dim: b.dim, h: linalg::sparse_to_dense(b.dim, &b.constant), terms: b.terms.clone() }
            })
            .collect();
        let mut dense_pos = vec![None; m];
        let mut dense_vars = Vec::new();
        for i in 0..m {
            if in_dense[i] {
                dense_pos[i] = Some(dense_vars.len());
                dense_vars.push(i);
            }
        }
        Data {
            m,
            c: red.c.iter().map(|v| v / c_scale).collect(),
            c_scale,
            lp_g,
            lp_h,
            lp_src,
            row_scale,
            eq,
            eq_b,
            eq_scale,
            blocks,
            dense_pos,
            dense_vars,
        }
    }

    /// Degree of the cone.
    fn degree(&self) -> f64 {
        (self.lp_h.len() + self.blocks.iter().map(|b| b.dim).sum::<usize>()) as f64
    }

    fn g_apply(&self, x: &[f64]) -> Cone {
        let lp = self.lp_g.iter().map(|g| g.iter().map(|&(i, a)| a * x[i]).sum()).collect();
        let mats = self
            .blocks
            .iter()
            .map(|b| {
                let mut out = CMat::zeros(b.dim, b.dim);
                for (i, e) in &b.terms {
                    let xi = x[*i];
                    if xi != 0.0 {
                        for &(r, c, v) in e {
                            out[(r, c)] -= v * xi;
                        }
                    }
                }
                out
            })
            .collect();
        Cone { lp, mats }
    }

    fn gt_apply(&self, z: &Cone) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for (g, &zk) in self.lp_g.iter().zip(&z.lp) {
            for &(i, a) in g {
                out[i] += a * zk;
            }
        }
        for (b, zm) in self.blocks.iter().zip(&z.mats) {
            for (i, e) in &b.terms {
                out[*i] -= linalg::sparse_inner(e, zm);
            }
        }
        out
    }

    fn a_apply(&self, x: &[f64]) -> Vec<f64> {
        self.eq.iter().map(|r| r.iter().map(|&(i, a)| a * x[i]).sum()).collect()
    }

    fn at_apply(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for (r, &yk) in self.eq.iter().zip(y) {
            for &(i, a) in r {
                out[i] += a * yk;
            }
        }
        out
    }

    fn h_cone(&self) -> Cone {
        Cone { lp: self.lp_h.clone(), mats: self.blocks.iter().map(|b| b.h.clone()).collect() }
    }

    /// Multipliers of the original problem for a dual point of this one.
    fn dual_point(&self, p: &ConicProblem, red: &Reduced, z: &Cone, y: &[f64]) -> DualPoint {
        let blocks = red
            .blocks
            .iter()
            .zip(&z.mats)
            .map(|(b, zm)| (p.blocks[b.orig].label.clone(), b.to_original(zm) * Complex64::new(self.c_scale, 0.0)))
            .collect();
        let mut mu = vec![0.0; red.ineq.len()];
        for (src, &zk) in self.lp_src.iter().zip(&z.lp) {
            match *src {
                LpSource::RowLo(j) => mu[j] += zk / self.row_scale[j],
                LpSource::RowHi(j) => mu[j] -= zk / self.row_scale[j],
                _ => {}
            }
        }
        let mut rows: Vec<(String, f64)> =
            red.ineq.iter().zip(mu).map(|(r, v)| (p.rows[r.orig].label.clone(), v * self.c_scale)).collect();
        for ((r, &yk), s) in red.eq.iter().zip(y).zip(&self.eq_scale) {
            rows.push((p.rows[r.orig].label.clone(), -yk / s * self.c_scale));
        }
        DualPoint { blocks, rows }
    }
}

/// Element of the cone space.
#[derive(Clone, Debug)]
struct Cone {
    lp: Vec<f64>,
    mats: Vec<CMat>,
}

impl Cone {
    fn dot(&self, o: &Cone) -> f64 {
        self.lp.iter().zip(&o.lp).map(|(a, b)| a * b).sum::<f64>()
            + self.mats.iter().zip(&o.mats).map(|(a, b)| linalg::inner(a, b)).sum::<f64>()
    }

    fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    fn axpy(&mut self, a: f64, o: &Cone) {
        self.lp.iter_mut().zip(&o.lp).for_each(|(x, y)| *x += a * y);
        for (x, y) in self.mats.iter_mut().zip(&o.mats) {
            x.zip_apply(y, |u, v| *u += v * a);
        }
    }

    fn sub(&self, o: &Cone) -> Cone {
        let mut out = self.clone();
        out.axpy(-1.0, o);
        out
    }

    /// Smallest `t ≥ 0` with `self + t e` in the interior, plus one.
    fn interior_shift(&mut self) {
        let mut worst = f64::NEG_INFINITY;
        for v in &self.lp {
            worst = worst.max(-v);
        }
        for m in &self.mats {
            worst = worst.max(-linalg::min_eigenvalue(m));
        }
        if worst >= -1e-8 {
            let t = 1.0 + worst.max(0.0);
            self.lp.iter_mut().for_each(|v| *v += t);
            for m in &mut self.mats {
                for i in 0..m.nrows() {
                    m[(i, i)] += Complex64::new(t, 0.0);
                }
            }
        }
    }
}

struct BlockScale {
    r: CMat,
    rh: CMat,
    v_re: RMat,
    v_im: RMat,
    lam: Vec<f64>,
}

struct Scaling {
    /// `sqrt(z/s)` per LP entry.
    d: Vec<f64>,
    lam_lp: Vec<f64>,
    blocks: Vec<BlockScale>,
}

impl Scaling {
    fn identity(data: &Data) -> Scaling {
        Scaling {
            d: vec![1.0; data.lp_h.len()],
            lam_lp: vec![1.0; data.lp_h.len()],
            blocks: data
                .blocks
                .iter()
                .map(|b| BlockScale {
                    r: CMat::identity(b.dim, b.dim),
                    rh: CMat::identity(b.dim, b.dim),
                    v_re: RMat::identity(b.dim, b.dim),
                    v_im: RMat::zeros(b.dim, b.dim),
                    lam: vec![1.0; b.dim],
                })
                .collect(),
        }
    }

    fn new(s: &Cone, z: &Cone) -> Option<Scaling> {
        let mut d = Vec::with_capacity(s.lp.len());
        let mut lam_lp = Vec::with_capacity(s.lp.len());
        for (&a, &b) in s.lp.iter().zip(&z.lp) {
            if !(a > 0.0 && b > 0.0) {
                return None;
            }
            d.push((b / a).sqrt());
            lam_lp.push((a * b).sqrt());
        }
        let mut blocks = Vec::with_capacity(s.mats.len());
        for (sm, zm) in s.mats.iter().zip(&z.mats) {
            let ls = linalg::cholesky_pd(sm)?.l();
            let lz = linalg::cholesky_pd(zm)?.l();
            let svd = linalg::cgemm(&lz.adjoint(), &ls).svd(false, true);
            let vt = svd.v_t?;
            let lam: Vec<f64> = svd.singular_values.iter().copied().collect();
            if lam.iter().any(|&l| !(l > 0.0)) {
                return None;
            }
            // R = Λ^{1/2} Vᴴ L_s⁻¹, so Rᴴ = L_s⁻ᴴ V Λ^{1/2}
            let mut rh = ls.adjoint().solve_upper_triangular(&vt.adjoint())?;
            for (j, &l) in lam.iter().enumerate() {
                rh.column_mut(j).scale_mut(l.sqrt());
            }
            let r = rh.adjoint();
            let mut v = linalg::cgemm(&rh, &r);
            linalg::hermitize(&mut v);
            let (v_re, v_im) = linalg::split(&v);
            blocks.push(BlockScale { r, rh, v_re, v_im, lam });
        }
        Some(Scaling { d, lam_lp, blocks })
    }

    fn lambda(&self) -> Cone {
        Cone {
            lp: self.lam_lp.clone(),
            mats: self
                .blocks
                .iter()
                .map(|b| {
                    CMat::from_diagonal(&DVector::from_iterator(
                        b.lam.len(),
                        b.lam.iter().map(|&l| Complex64::new(l, 0.0)),
                    ))
                })
                .collect(),
        }
    }

    /// `R u Rᴴ`.
    fn forward(&self, u: &Cone) -> Cone {
        Cone {
            lp: u.lp.iter().zip(&self.d).map(|(a, d)| a * d).collect(),
            mats: self
                .blocks
                .iter()
                .zip(&u.mats)
                .map(|(b, m)| {
                    let mut o = linalg::cgemm(&linalg::cgemm(&b.r, m), &b.rh);
                    linalg::hermitize(&mut o);
                    o
                })
                .collect(),
        }
    }

    /// `Rᴴ u R`.
    fn backward(&self, u: &Cone) -> Cone {
        Cone {
            lp: u.lp.iter().zip(&self.d).map(|(a, d)| a * d).collect(),
            mats: self
                .blocks
                .iter()
                .zip(&u.mats)
                .map(|(b, m)| {
                    let mut o = linalg::cgemm(&linalg::cgemm(&b.rh, m), &b.r);
                    linalg::hermitize(&mut o);
                    o
                })
                .collect(),
        }
    }

    /// `V u V` with `V = RᴴR`.
    fn quad(&self, u: &Cone) -> Cone {
        self.backward(&self.forward(u))
    }
}

/// `q` with `λ ∘ q = ξ` (Jordan product).
fn lambda_solve(sc: &Scaling, xi: &Cone) -> Cone {
    Cone {
        lp: xi.lp.iter().zip(&sc.lam_lp).map(|(x, l)| x / l).collect(),
        mats: sc
            .blocks
            .iter()
            .zip(&xi.mats)
            .map(|(b, x)| CMat::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] * (2.0 / (b.lam[i] + b.lam[j]))))
            .collect(),
    }
}

fn jordan(a: &Cone, b: &Cone) -> Cone {
    Cone {
        lp: a.lp.iter().zip(&b.lp).map(|(x, y)| x * y).collect(),
        mats: a
            .mats
            .iter()
            .zip(&b.mats)
            .map(|(x, y)| {
                let p = linalg::cgemm(x, y);
                (&p + p.adjoint()) * Complex64::new(0.5, 0.0)
            })
            .collect(),
    }
}

/// Largest step `α ≤ 1/STEP_FRACTION` keeping `λ + α d` in the cone.
fn max_step(sc: &Scaling, d: &Cone) -> f64 {
    let mut a = f64::INFINITY;
    for (&di, &l) in d.lp.iter().zip(&sc.lam_lp) {
        if di < 0.0 {
            a = a.min(-l / di);
        }
    }
    for (b, m) in sc.blocks.iter().zip(&d.mats) {
        let s: Vec<f64> = b.lam.iter().map(|l| 1.0 / l.sqrt()).collect();
        let mut t = CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * (s[i] * s[j]));
        linalg::hermitize(&mut t);
        let e = linalg::min_eigenvalue(&t);
        if e < 0.0 {
            a = a.min(-1.0 / e);
        }
    }
    a
}

/// Factorized Newton system `[H Aᵀ; A 0]`.
struct Kkt {
    h_dense: RMat,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    diag: Vec<f64>,
    a_dense: RMat,
    s_chol: Option<nalgebra::Cholesky<f64, nalgebra::Dyn>>,
}

fn form_kkt(data: &Data, sc: &Scaling) -> Option<Kkt> {
    let np = data.dense_vars.len();
    let mut h = RMat::zeros(np, np);
    let mut diag = vec![0.0; data.m];
    for (g, &d) in data.lp_g.iter().zip(&sc.d) {
        let w = d * d;
        if g.len() == 1 && data.dense_pos[g[0].0].is_none() {
            diag[g[0].0] += w * g[0].1 * g[0].1;
            continue;
        }
        for &(i, a) in g {
            let Some(pi) = data.dense_pos[i] else { continue };
            for &(j, b) in g {
                if let Some(pj) = data.dense_pos[j] {
                    h[(pi, pj)] += w * a * b;
                }
            }
        }
    }
    for (b, bs) in data.blocks.iter().zip(&sc.blocks) {
        add_block_hessian(&mut h, data, b, bs);
    }
    let max_diag = (0..np).map(|i| h[(i, i)]).fold(1.0f64, f64::max);
    let mut hr = h.clone();
    for i in 0..np {
        hr[(i, i)] += REG * max_diag;
    }
    let chol = hr.cholesky()?;
    for i in 0..data.m {
        if data.dense_pos[i].is_none() && !(diag[i] > 0.0) {
            diag[i] = REG;
        }
    }
    let k = data.eq.len();
    let mut a_dense = RMat::zeros(k, np);
    let mut s = RMat::zeros(k, k);
    for (r, row) in data.eq.iter().enumerate() {
        for &(i, a) in row {
            if let Some(pi) = data.dense_pos[i] {
                a_dense[(r, pi)] += a;
            }
        }
    }
    if k > 0 {
        // A_P H⁻¹ A_Pᵀ = YᵀY with Y = L⁻¹ A_Pᵀ
        let y = chol.l().solve_lower_triangular(&a_dense.transpose())?;
        s = y.transpose() * &y;
        // diagonal part
        let mut by_var: Vec<Vec<(usize, f64)>> = vec![Vec::new(); data.m];
        for (r, row) in data.eq.iter().enumerate() {
            for &(i, a) in row {
                if data.dense_pos[i].is_none() {
                    by_var[i].push((r, a));
                }
            }
        }
        for (i, ent) in by_var.iter().enumerate() {
            for &(r1, a1) in ent {
                for &(r2, a2) in ent {
                    s[(r1, r2)] += a1 * a2 / diag[i];
                }
            }
        }
    }
    let s_chol = if k > 0 {
        let md = (0..k).map(|i| s[(i, i)]).fold(1e-300f64, f64::max);
        for i in 0..k {
            s[(i, i)] += REG * md;
        }
        Some(s.cholesky()?)
    } else {
        None
    };
    Some(Kkt { h_dense: h, chol, diag, a_dense, s_chol })
}

/// `H_ij += ⟨A_i, V A_j V⟩` for the variables of one block.
fn add_block_hessian(h: &mut RMat, data: &Data, b: &BlockData, bs: &BlockScale) {
    let n = b.dim;
    let chunk = (CHUNK_ELEMS / (n * n)).max(1);
    for group in b.terms.chunks(chunk) {
        let cols = n * group.len();
        let mut br = RMat::zeros(n, cols);
        let mut bi = RMat::zeros(n, cols);
        for (jl, (_, e)) in group.iter().enumerate() {
            let off = jl * n;
            for &(r, c, a) in e {
                for col in 0..n {
                    let (vr, vi) = (bs.v_re[(c, col)], bs.v_im[(c, col)]);
                    br[(r, off + col)] += a.re * vr - a.im * vi;
                    bi[(r, off + col)] += a.re * vi + a.im * vr;
                }
            }
        }
        let (kr, ki) = linalg::cgemm_split(&bs.v_re, &bs.v_im, &br, &bi);
        for (jl, (j, _)) in group.iter().enumerate() {
            let Some(pj) = data.dense_pos[*j] else { continue };
            let off = jl * n;
            for (i, ei) in &b.terms {
                let Some(pi) = data.dense_pos[*i] else { continue };
                let mut acc = 0.0;
                for &(r, c, a) in ei {
                    acc += a.re * kr[(r, off + c)] + a.im * ki[(r, off + c)];
                }
                h[(pi, pj)] += acc;
            }
        }
    }
}

impl Kkt {
    fn solve_once(&self, data: &Data, rx: &[f64], ry: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let np = data.dense_vars.len();
        let rp = DVector::from_iterator(np, data.dense_vars.iter().map(|&i| rx[i]));
        let up = self.chol.solve(&rp);
        let mut ud = vec![0.0; data.m];
        for i in 0..data.m {
            if data.dense_pos[i].is_none() {
                ud[i] = rx[i] / self.diag[i];
            }
        }
        let k = data.eq.len();
        let mut dy = vec![0.0; k];
        if let Some(sc) = &self.s_chol {
            let mut rhs = &self.a_dense * &up;
            for (r, row) in data.eq.iter().enumerate() {
                for &(i, a) in row {
                    if data.dense_pos[i].is_none() {
                        rhs[r] += a * ud[i];
                    }
                }
                rhs[r] -= ry[r];
            }
            let sol = sc.solve(&rhs);
            dy = sol.iter().copied().collect();
        }
        let mut dx = vec![0.0; data.m];
        let aty_p = self.a_dense.transpose() * DVector::from_vec(dy.clone());
        let corr = self.chol.solve(&aty_p);
        for (k, &i) in data.dense_vars.iter().enumerate() {
            dx[i] = up[k] - corr[k];
        }
        let aty = data.at_apply(&dy);
        for i in 0..data.m {
            if data.dense_pos[i].is_none() {
                dx[i] = ud[i] - aty[i] / self.diag[i];
            }
        }
        (dx, dy)
    }

    fn apply(&self, data: &Data, dx: &[f64], dy: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let xp = DVector::from_iterator(data.dense_vars.len(), data.dense_vars.iter().map(|&i| dx[i]));
        let hx = &self.h_dense * xp;
        let mut top = data.at_apply(dy);
        for (k, &i) in data.dense_vars.iter().enumerate() {
            top[i] += hx[k];
        }
        for i in 0..data.m {
            if data.dense_pos[i].is_none() {
                top[i] += self.diag[i] * dx[i];
            }
        }
        (top, data.a_apply(dx))
    }

    /// Solve with two steps of iterative refinement.
    fn solve(&self, data: &Data, rx: &[f64], ry: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (mut dx, mut dy) = self.solve_once(data, rx, ry);
        for _ in 0..2 {
            let (ax, ay) = self.apply(data, &dx, &dy);
            let ex: Vec<f64> = rx.iter().zip(&ax).map(|(a, b)| a - b).collect();
            let ey: Vec<f64> = ry.iter().zip(&ay).map(|(a, b)| a - b).collect();
            let (cx, cy) = self.solve_once(data, &ex, &ey);
            dx.iter_mut().zip(&cx).for_each(|(a, b)| *a += b);
            dy.iter_mut().zip(&cy).for_each(|(a, b)| *a += b);
        }
        (dx, dy)
    }
}

struct Direction {
    dx: Vec<f64>,
    dy: Vec<f64>,
    ds: Cone,
    dz: Cone,
    ds_t: Cone,
    dz_t: Cone,
}

/// Newton direction for scaled complementarity `ds̃ + dz̃ = q`.
fn direction(data: &Data, sc: &Scaling, kkt: &Kkt, q: &Cone, rd: &[f64], rp: &[f64], rc: &Cone) -> Direction {
    let mut t = sc.quad(rc);
    t.axpy(1.0, &sc.backward(q));
    let gt = data.gt_apply(&t);
    let rx: Vec<f64> = rd.iter().zip(&gt).map(|(a, b)| -a - b).collect();
    let ry: Vec<f64> = rp.iter().map(|v| -v).collect();
    let (dx, dy) = kkt.solve(data, &rx, &ry);
    let mut ds = data.g_apply(&dx);
    ds.axpy(1.0, rc);
    ds.lp.iter_mut().for_each(|v| *v = -*v);
    ds.mats.iter_mut().for_each(|m| m.neg_mut());
    let ds_t = sc.forward(&ds);
    let dz_t = q.sub(&ds_t);
    let dz = sc.backward(&dz_t);
    Direction { dx, dy, ds, dz, ds_t, dz_t }
}

struct State {
    x: Vec<f64>,
    y: Vec<f64>,
    s: Cone,
    z: Cone,
}

fn initial_point(data: &Data) -> Option<State> {
    let id = Scaling::identity(data);
    let kkt = form_kkt(data, &id)?;
    let h = data.h_cone();
    let (x, _) = kkt.solve(data, &data.gt_apply(&h), &data.eq_b);
    let mut s = h.sub(&data.g_apply(&x));
    let neg_c: Vec<f64> = data.c.iter().map(|v| -v).collect();
    let (xh, y) = kkt.solve(data, &neg_c, &vec![0.0; data.eq.len()]);
    let mut z = data.g_apply(&xh);
    s.interior_shift();
    z.interior_shift();
    Some(State { x, y, s, z })
}

struct Residuals {
    rd: Vec<f64>,
    rp: Vec<f64>,
    rc: Cone,
    pres: f64,
    dres: f64,
}

fn residuals(data: &Data, st: &State, hn: f64, bn: f64, cn: f64) -> Residuals {
    let gz = data.gt_apply(&st.z);
    let aty = data.at_apply(&st.y);
    let rd: Vec<f64> = (0..data.m).map(|i| data.c[i] + gz[i] + aty[i]).collect();
    let ax = data.a_apply(&st.x);
    let rp: Vec<f64> = ax.iter().zip(&data.eq_b).map(|(a, b)| a - b).collect();
    let mut rc = data.g_apply(&st.x);
    rc.axpy(1.0, &st.s);
    rc.axpy(-1.0, &data.h_cone());
    let pres = (norm(&rp) / (1.0 + bn)).max(rc.norm() / (1.0 + hn));
    let dres = norm(&rd) / (1.0 + cn);
    Residuals { rd, rp, rc, pres, dres }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) struct IpmOutput {
    pub status: SolverStatus,
    pub lower: f64,
    pub primal: f64,
    pub x: Vec<f64>,
    pub dual: DualPoint,
    pub iterations: usize,
}

pub(crate) fn solve(p: &ConicProblem, red: &Reduced, settings: &SolverSettings) -> Result<super::Solution> {
    let cmax = red.c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let scale = if cmax > 0.0 { cmax } else { 1.0 };
    let mut out = run(p, red, settings, scale)?;
    if out.status == SolverStatus::NumericalFailure {
        log::debug!("interior point: retrying with rescaled objective");
        let retry = run(p, red, settings, scale * 10.0)?;
        if retry.lower > out.lower || retry.status != SolverStatus::NumericalFailure {
            out = retry;
        }
    }
    Ok(super::Solution {
        result: super::result_with(out.lower, out.primal, out.status, out.iterations, SolverKind::InteriorPoint),
        dual: out.dual,
        primal: out.x,
        admm: None,
    })
}

fn run(p: &ConicProblem, red: &Reduced, settings: &SolverSettings, c_scale: f64) -> Result<IpmOutput> {
    let data = Data::new(red, c_scale);
    let nu = data.degree();
    let hn = data.h_cone().norm();
    let bn = norm(&data.eq_b);
    let cn = norm(&data.c);
    let box_max = p.box_max();
    let Some(mut st) = initial_point(&data) else {
        return Err(Error::Numerical("singular Newton system at the starting point".into()));
    };
    let mut best = IpmOutput {
        status: SolverStatus::NumericalFailure,
        lower: f64::NEG_INFINITY,
        primal: f64::NAN,
        x: red.expand(&st.x),
        dual: DualPoint::default(),
        iterations: 0,
    };
    for it in 0..settings.max_iter {
        best.iterations = it;
        let res = residuals(&data, &st, hn, bn, cn);
        let xf = red.expand(&st.x);
        let primal = p.objective_value(&xf);
        let dual = data.dual_point(p, red, &st.z, &st.y);
        let lb = lagrangian_bound(p, &dual);
        let mu = st.s.dot(&st.z) / nu;
        let scale = 1.0 + primal.abs();
        if lb > best.lower || best.lower.is_nan() {
            best.lower = lb;
            best.dual = dual.clone();
        }
        best.primal = primal;
        best.x = xf;
        log::trace!(
            "ipm {it}: pres {:.2e} dres {:.2e} mu {:.2e} primal {primal:.10} lb {lb:.10}",
            res.pres,
            res.dres,
            mu
        );
        if res.pres <= settings.feas_tol && (primal - best.lower).abs() <= settings.gap_tol * scale {
            best.status = SolverStatus::Optimal;
            return Ok(best);
        }
        if best.lower > box_max + 1e-9 * (1.0 + box_max.abs()) {
            best.status = SolverStatus::Infeasible;
            return Ok(best);
        }
        if res.pres > settings.feas_tol && it > 5 {
            let z = st.z.norm() + norm(&st.y);
            if z > 0.0 {
                let mut ray = dual;
                ray.blocks.iter_mut().for_each(|(_, m)| *m /= Complex64::new(z, 0.0));
                ray.rows.iter_mut().for_each(|(_, v)| *v /= z);
                if infeasibility_margin(p, &ray) > 1e-8 {
                    best.status = SolverStatus::Infeasible;
                    return Ok(best);
                }
            }
        }
        if mu < 1e-15 && res.pres < settings.feas_tol * 1e-2 && res.dres < 1e-13 {
            break;
        }

        let Some(sc) = Scaling::new(&st.s, &st.z) else {
            log::debug!("ipm {it}: lost interiority");
            break;
        };
        let Some(kkt) = form_kkt(&data, &sc) else {
            log::debug!("ipm {it}: Newton matrix not positive definite");
            break;
        };
        let lam = sc.lambda();
        // predictor
        let mut q_aff = lam.clone();
        q_aff.lp.iter_mut().for_each(|v| *v = -*v);
        q_aff.mats.iter_mut().for_each(|m| m.neg_mut());
        let aff = direction(&data, &sc, &kkt, &q_aff, &res.rd, &res.rp, &res.rc);
        let ap = max_step(&sc, &aff.ds_t).min(1.0);
        let ad = max_step(&sc, &aff.dz_t).min(1.0);
        let mut ls = lam.clone();
        ls.axpy(ap, &aff.ds_t);
        let mut lz = lam.clone();
        lz.axpy(ad, &aff.dz_t);
        let mu_aff = ls.dot(&lz) / nu;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        // corrector
        let mut xi = jordan(&lam, &lam);
        xi.axpy(1.0, &jordan(&aff.ds_t, &aff.dz_t));
        xi.lp.iter_mut().for_each(|v| *v = sigma * mu - *v);
        for m in &mut xi.mats {
            m.neg_mut();
            for i in 0..m.nrows() {
                m[(i, i)] += Complex64::new(sigma * mu, 0.0);
            }
        }
        let q = lambda_solve(&sc, &xi);
        let dir = direction(&data, &sc, &kkt, &q, &res.rd, &res.rp, &res.rc);
        let step = (STEP_FRACTION * max_step(&sc, &dir.ds_t).min(max_step(&sc, &dir.dz_t))).min(1.0);
        let (mut ap, mut ad) = (step, step);
        let mut moved = false;
        for _ in 0..30 {
            let mut s = st.s.clone();
            s.axpy(ap, &dir.ds);
            let mut z = st.z.clone();
            z.axpy(ad, &dir.dz);
            if Scaling::new(&s, &z).is_some() {
                st.s = s;
                st.z = z;
                st.x.iter_mut().zip(&dir.dx).for_each(|(a, b)| *a += ap * b);
                st.y.iter_mut().zip(&dir.dy).for_each(|(a, b)| *a += ad * b);
                moved = true;
                break;
            }
            ap *= 0.8;
            ad *= 0.8;
        }
        log::trace!("ipm {it}: sigma {sigma:.2e} steps {ap:.3} {ad:.3}");
        if !moved {
            log::debug!("ipm {it}: no admissible step");
            break;
        }
    }
    let scale = 1.0 + best.primal.abs();
    let gap = (best.primal - best.lower).abs();
    let res = residuals(&data, &st, hn, bn, cn);
    log::debug!("ipm stopped after {} iterations, pres {:.2e}, gap {gap:.2e}", best.iterations, res.pres);
    best.status = if best.lower.is_finite() && gap <= settings.near_gap_tol * scale {
        SolverStatus::NearOptimal
    } else {
        SolverStatus::NumericalFailure
    };
    Ok(best)
}
