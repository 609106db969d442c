//! Splitting method for large blocks whose coefficient matrices have
//! pairwise disjoint support, as moment matrices do.
//!
//! Iterates on `M(x) = X`, `X ⪰ 0` with scaled multiplier `U`:
//! a closed-form clamped `x` update, an eigenvalue projection for `X`, and
//! `U += M(x) − X`. The PSD multiplier `−ρU` feeds the Lagrangian bound.

use num_complex::Complex64;

use super::certificate::{lagrangian_bound, repaired, DualPoint};
use super::linalg::{self, CMat};
use super::presolve::{self, Reduced};
use super::{ConicProblem, SolverKind, SolverSettings, SolverStatus};
use crate::error::Result;

/// Iterate that can warm-start a related solve.
#[derive(Clone, Debug)]
pub struct AdmmState {
    /// Full-length variable vector of the original problem.
    pub x: Vec<f64>,
    /// Scaled multiplier per block label.
    pub u: Vec<(String, CMat)>,
    pub rho: f64,
}

const CHECK_EVERY: usize = 25;
const ADAPT_EVERY: usize = 50;
/// Over-relaxation factor.
const RELAX: f64 = 1.6;
/// Residual ratio that triggers a penalty change.
const BALANCE: f64 = 5.0;

/// No rows and, inside each block, coefficient matrices on disjoint cells.
pub(crate) fn applicable(red: &Reduced) -> bool {
    if !red.eq.is_empty() || !red.ineq.is_empty() || red.blocks.is_empty() {
        return false;
    }
    for b in &red.blocks {
        let mut owner = vec![usize::MAX; b.dim * b.dim];
        for (k, (_, e)) in b.terms.iter().enumerate() {
            for &(r, c, _) in e {
                let cell = &mut owner[r * b.dim + c];
                if *cell != usize::MAX && *cell != k {
                    return false;
                }
                *cell = k;
            }
        }
    }
    true
}

struct Block<'a> {
    dim: usize,
    constant: CMat,
    terms: Vec<(usize, Vec<(usize, usize, Complex64)>)>,
    label: String,
    reduced: &'a presolve::Block,
}

fn build(x: &[f64], b: &Block) -> CMat {
    let mut m = b.constant.clone();
    for (i, e) in &b.terms {
        for &(r, c, v) in e {
            m[(r, c)] += v * x[*i];
        }
    }
    m
}

pub(crate) fn solve(
    p: &ConicProblem,
    red: &Reduced,
    settings: &SolverSettings,
    warm: Option<&AdmmState>,
) -> Result<super::Solution> {
    let m = red.len();
    let blocks: Vec<Block> = red
        .blocks
        .iter()
        .map(|b| Block {
            dim: b.dim,
            constant: linalg::sparse_to_dense(b.dim, &b.constant),
            terms: b.terms.clone(),
            label: p.blocks[b.orig].label.clone(),
            reduced: b,
        })
        .collect();
    let mut weight = vec![0.0; m];
    for b in &blocks {
        for (i, e) in &b.terms {
            weight[*i] += e.iter().map(|t| t.2.norm_sqr()).sum::<f64>();
        }
    }
    let cmax = red.c.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);

    let mut x: Vec<f64> = (0..m).map(|i| 0.0f64.clamp(red.lower[i], red.upper[i])).collect();
    let mut u: Vec<CMat> = blocks.iter().map(|b| CMat::zeros(b.dim, b.dim)).collect();
    let mut rho = cmax;
    if let Some(w) = warm {
        for (k, &i) in red.vars.iter().enumerate() {
            if let Some(v) = w.x.get(i) {
                x[k] = v.clamp(red.lower[k], red.upper[k]);
            }
        }
        for (b, uk) in blocks.iter().zip(u.iter_mut()) {
            if let Some((_, wu)) = w.u.iter().find(|(l, wu)| *l == b.label && wu.nrows() == b.dim) {
                *uk = b.reduced.to_reduced(wu);
            }
        }
        if w.rho > 0.0 {
            rho = w.rho;
        }
    }
    let mut xs: Vec<CMat> = blocks.iter().map(|b| build(&x, b)).collect();
    for (xk, uk) in xs.iter_mut().zip(&u) {
        *xk = linalg::psd_projection(&(&*xk + uk));
    }

    let mut best_lb = f64::NEG_INFINITY;
    let mut best_dual = DualPoint::default();
    let mut primal = f64::NAN;
    let mut status = SolverStatus::NumericalFailure;
    let mut iterations = 0;
    let (mut rp, mut rd) = (0.0f64, 0.0f64);
    for it in 1..=settings.admm_max_iter {
        iterations = it;
        // x update
        let mut grad = vec![0.0; m];
        for ((b, xk), uk) in blocks.iter().zip(&xs).zip(&u) {
            let w = &b.constant - xk + uk;
            for (i, e) in &b.terms {
                grad[*i] += linalg::sparse_inner(e, &w);
            }
        }
        for i in 0..m {
            if weight[i] > 0.0 {
                x[i] = (-(red.c[i] / rho + grad[i]) / weight[i]).clamp(red.lower[i], red.upper[i]);
            } else {
                x[i] = if red.c[i] > 0.0 { red.lower[i] } else { red.upper[i] };
            }
        }
        // X and U updates
        rp = 0.0;
        rd = 0.0;
        let mut scale = 0.0f64;
        for ((b, xk), uk) in blocks.iter().zip(xs.iter_mut()).zip(u.iter_mut()) {
            let mx = build(&x, b);
            let relaxed = &mx * Complex64::new(RELAX, 0.0) + &*xk * Complex64::new(1.0 - RELAX, 0.0);
            let next = linalg::psd_projection(&(&relaxed + &*uk));
            rp += (&mx - &next).norm_squared();
            rd += (&next - &*xk).norm_squared();
            scale = scale.max(mx.norm()).max(next.norm());
            *uk += &relaxed - &next;
            *xk = next;
        }
        rp = rp.sqrt() / (1.0 + scale);
        rd = rho * rd.sqrt() / (1.0 + cmax);

        if it % CHECK_EVERY == 0 || it == settings.admm_max_iter {
            let mut dual = dual_point(&blocks, &u, rho);
            let mut lb = lagrangian_bound(p, &dual);
            let fixed = repaired(p, &dual);
            let lb_fixed = lagrangian_bound(p, &fixed);
            if lb_fixed > lb {
                dual = fixed;
                lb = lb_fixed;
            }
            let xf = red.expand(&x);
            primal = p.objective_value(&xf);
            if lb > best_lb {
                best_lb = lb;
                best_dual = dual;
            }
            let gap = (primal - best_lb).abs() / (1.0 + primal.abs());
            log::trace!("admm {it}: rp {rp:.2e} rd {rd:.2e} rho {rho:.2e} primal {primal:.8} lb {best_lb:.8}");
            if gap <= settings.gap_tol {
                status = SolverStatus::Optimal;
                break;
            }
            if gap <= settings.admm_gap_tol && rp <= settings.feas_tol.sqrt() {
                status = SolverStatus::NearOptimal;
                break;
            }
        }
        if it % ADAPT_EVERY == 0 {
            let f = if rp > BALANCE * rd {
                2.0
            } else if rd > BALANCE * rp {
                0.5
            } else {
                1.0
            };
            if f != 1.0 {
                rho *= f;
                u.iter_mut().for_each(|uk| *uk /= Complex64::new(f, 0.0));
            }
        }
    }
    if status == SolverStatus::NumericalFailure {
        let gap = (primal - best_lb).abs() / (1.0 + primal.abs());
        if best_lb.is_finite() && gap <= settings.near_gap_tol {
            status = SolverStatus::NearOptimal;
        }
    }
    log::debug!("admm stopped after {iterations} iterations: rp {rp:.2e} rd {rd:.2e} lb {best_lb:.8}");
    let xf = red.expand(&x);
    let state = AdmmState {
        x: xf.clone(),
        u: blocks.iter().zip(&u).map(|(b, uk)| (b.label.clone(), b.reduced.to_original(uk))).collect(),
        rho,
    };
    Ok(super::Solution {
        result: super::result_with(best_lb, primal, status, iterations, SolverKind::Admm),
        dual: best_dual,
        primal: xf,
        admm: Some(state),
    })
}

fn dual_point(blocks: &[Block], u: &[CMat], rho: f64) -> DualPoint {
    DualPoint {
        blocks: blocks
            .iter()
            .zip(u)
            .map(|(b, uk)| (b.label.clone(), b.reduced.to_original(uk) * Complex64::new(-rho, 0.0)))
            .collect(),
        rows: Vec::new(),
    }
}
