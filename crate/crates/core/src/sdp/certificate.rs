//! Lagrangian lower bounds from arbitrary dual points.
//!
//! For PSD multipliers `Z_k` and row multipliers `μ_j`, every feasible `x`
//! satisfies
//!
//! ```text
//! cᵀx ≥ Σ_i min(r_i l_i, r_i u_i) − Σ_k ⟨Z_k, B_k⟩ + Σ_j min(μ_j lo_j, μ_j hi_j)
//! r   = c − Σ_k A_k*(Z_k) − Σ_j μ_j a_j
//! ```
//!
//! so any dual point, however inaccurate, yields a valid bound once `Z_k` is
//! projected onto the PSD cone and `μ_j` has a sign compatible with the row.

use super::linalg::{self, CMat};
use super::ConicProblem;

/// Multipliers for PSD blocks and linear rows, keyed by label.
#[derive(Clone, Debug, Default)]
pub struct DualPoint {
    pub blocks: Vec<(String, CMat)>,
    pub rows: Vec<(String, f64)>,
}

fn position<'a, T>(items: &'a [T], hint: usize, label: &str, key: impl Fn(&'a T) -> &'a str) -> Option<usize> {
    if hint < items.len() && key(&items[hint]) == label {
        return Some(hint);
    }
    items.iter().position(|t| key(t) == label)
}

/// PSD part of a Hermitian matrix; the input itself when it is already
/// positive definite.
fn psd_part(z: &CMat) -> CMat {
    let mut h = z.clone();
    linalg::hermitize(&mut h);
    if linalg::cholesky_pd(&h).is_some() {
        h
    } else {
        linalg::psd_projection(&h)
    }
}

/// Valid lower bound on `min offset + cᵀx` for the given multipliers.
pub fn lagrangian_bound(p: &ConicProblem, dual: &DualPoint) -> f64 {
    lagrangian_parts(p, dual, &p.objective).iter().sum()
}

/// Terms of the bound for objective `c` (offset included in the box term).
pub(crate) fn lagrangian_parts(p: &ConicProblem, dual: &DualPoint, c: &[f64]) -> [f64; 3] {
    let mut r = c.to_vec();
    let mut block_term = 0.0;
    for (k, (label, z)) in dual.blocks.iter().enumerate() {
        let Some(bi) = position(&p.blocks, k, label, |b| b.label.as_str()) else {
            continue;
        };
        let b = &p.blocks[bi];
        if z.nrows() != b.dim || z.ncols() != b.dim {
            continue;
        }
        let z = psd_part(z);
        block_term -= linalg::sparse_inner(&b.constant, &z);
        for (i, e) in &b.terms {
            r[*i] -= linalg::sparse_inner(e, &z);
        }
    }
    let mut row_term = 0.0;
    for (k, (label, mu)) in dual.rows.iter().enumerate() {
        let Some(ri) = position(&p.rows, k, label, |r| r.label.as_str()) else {
            continue;
        };
        let row = &p.rows[ri];
        let mut mu = *mu;
        if !mu.is_finite() {
            continue;
        }
        if row.lo == f64::NEG_INFINITY {
            mu = mu.min(0.0);
        }
        if row.hi == f64::INFINITY {
            mu = mu.max(0.0);
        }
        if mu == 0.0 {
            continue;
        }
        row_term += (mu * row.lo).min(mu * row.hi);
        for &(i, a) in &row.coeffs {
            r[i] -= mu * a;
        }
    }
    let mut box_term = p.offset;
    for (i, &ri) in r.iter().enumerate() {
        if ri == 0.0 {
            continue;
        }
        box_term += (ri * p.lower[i]).min(ri * p.upper[i]);
    }
    [box_term, block_term, row_term]
}

/// Moves the residual of every block variable into the block multipliers,
/// then restores positivity with a multiple of the identity. Pays off when
/// many variables carry small residuals.
pub(crate) fn repaired(p: &ConicProblem, dual: &DualPoint) -> DualPoint {
    let mut z: Vec<Option<CMat>> = vec![None; p.blocks.len()];
    for (k, (label, m)) in dual.blocks.iter().enumerate() {
        if let Some(bi) = position(&p.blocks, k, label, |b| b.label.as_str()) {
            if m.nrows() == p.blocks[bi].dim && m.ncols() == p.blocks[bi].dim {
                z[bi] = Some(psd_part(m));
            }
        }
    }
    let mut r = p.objective.clone();
    let mut weight = vec![0.0; p.num_vars];
    for (b, zb) in p.blocks.iter().zip(&z) {
        for (i, e) in &b.terms {
            weight[*i] += e.iter().map(|t| t.2.norm_sqr()).sum::<f64>();
            if let Some(zb) = zb {
                r[*i] -= linalg::sparse_inner(e, zb);
            }
        }
    }
    for (k, (label, mu)) in dual.rows.iter().enumerate() {
        let Some(ri) = position(&p.rows, k, label, |r| r.label.as_str()) else { continue };
        let row = &p.rows[ri];
        let mut mu = *mu;
        if !mu.is_finite() {
            continue;
        }
        if row.lo == f64::NEG_INFINITY {
            mu = mu.min(0.0);
        }
        if row.hi == f64::INFINITY {
            mu = mu.max(0.0);
        }
        for &(i, a) in &row.coeffs {
            r[i] -= mu * a;
        }
    }
    let mut blocks = Vec::with_capacity(p.blocks.len());
    for (b, zb) in p.blocks.iter().zip(z) {
        let mut zb = zb.unwrap_or_else(|| CMat::zeros(b.dim, b.dim));
        for (i, e) in &b.terms {
            if weight[*i] > 0.0 {
                let t = r[*i] / weight[*i];
                for &(rr, cc, v) in e {
                    zb[(rr, cc)] += v * t;
                }
            }
        }
        linalg::hermitize(&mut zb);
        let low = linalg::min_eigenvalue(&zb);
        if low < 0.0 {
            let shift = -low * (1.0 + 1e-12);
            for d in 0..b.dim {
                zb[(d, d)].re += shift;
            }
        }
        blocks.push((b.label.clone(), zb));
    }
    DualPoint { blocks, rows: dual.rows.clone() }
}

/// Positive value proves that no `x` satisfies the constraints.
pub fn infeasibility_margin(p: &ConicProblem, dual: &DualPoint) -> f64 {
    let zero = vec![0.0; p.num_vars];
    let mut q = p.clone();
    q.offset = 0.0;
    lagrangian_parts(&q, dual, &zero).iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::{LinearRow, PsdBlock};
    use num_complex::Complex64;

    fn lp(lower: f64, upper: f64) -> ConicProblem {
        ConicProblem {
            num_vars: 2,
            var_moments: vec![None, None],
            conjugation_odd: Vec::new(),
            objective: vec![1.0, 1.0],
            offset: 0.0,
            lower: vec![lower; 2],
            upper: vec![upper; 2],
            rows: vec![LinearRow { coeffs: vec![(0, 1.0), (1, 1.0)], lo: 0.5, hi: 2.0, label: "sum".into() }],
            blocks: vec![],
            confidence: 1.0,
            lower_only: false,
        }
    }

    #[test]
    fn zero_dual_gives_box_bound() {
        let p = lp(-1.0, 1.0);
        assert_eq!(lagrangian_bound(&p, &DualPoint::default()), -2.0);
    }

    #[test]
    fn row_multiplier_tightens() {
        let p = lp(-1.0, 1.0);
        let d = DualPoint { blocks: vec![], rows: vec![("sum".into(), 1.0)] };
        assert!((lagrangian_bound(&p, &d) - 0.5).abs() < 1e-15);
        // wrong sign for a two-sided row is still valid, just weak
        let d = DualPoint { blocks: vec![], rows: vec![("sum".into(), -1.0)] };
        assert!(lagrangian_bound(&p, &d) <= 0.5);
    }

    #[test]
    fn block_multiplier() {
        // [[1, x], [x, 1]] ⪰ 0, minimize x → −1
        let one = Complex64::new(1.0, 0.0);
        let p = ConicProblem {
            num_vars: 1,
            var_moments: vec![None],
            conjugation_odd: Vec::new(),
            objective: vec![1.0],
            offset: 0.0,
            lower: vec![-5.0],
            upper: vec![5.0],
            rows: vec![],
            blocks: vec![PsdBlock {
                dim: 2,
                label: "b".into(),
                constant: vec![(0, 0, one), (1, 1, one)],
                terms: vec![(0, vec![(0, 1, one), (1, 0, one)])],
            }],
            confidence: 1.0,
            lower_only: false,
        };
        let z = CMat::from_row_slice(2, 2, &[one * 0.5, one * 0.5, one * 0.5, one * 0.5]);
        let d = DualPoint { blocks: vec![("b".into(), z)], rows: vec![] };
        assert!((lagrangian_bound(&p, &d) + 1.0).abs() < 1e-14);
        // an indefinite multiplier is projected first
        let z = CMat::from_row_slice(2, 2, &[one, one * 3.0, one * 3.0, one]);
        assert!(lagrangian_bound(&p, &DualPoint { blocks: vec![("b".into(), z)], rows: vec![] }) <= -1.0);
    }

    #[test]
    fn repair_removes_box_residual() {
        // [[1, x], [x, 1]] ⪰ 0 with x in [−5, 5]; a zero multiplier leaves
        // the whole objective on the box
        let one = Complex64::new(1.0, 0.0);
        let p = ConicProblem {
            num_vars: 1,
            var_moments: vec![None],
            conjugation_odd: Vec::new(),
            objective: vec![1.0],
            offset: 0.0,
            lower: vec![-5.0],
            upper: vec![5.0],
            rows: vec![],
            blocks: vec![PsdBlock {
                dim: 2,
                label: "b".into(),
                constant: vec![(0, 0, one), (1, 1, one)],
                terms: vec![(0, vec![(0, 1, one), (1, 0, one)])],
            }],
            confidence: 1.0,
            lower_only: false,
        };
        let d = DualPoint { blocks: vec![("b".into(), CMat::zeros(2, 2))], rows: vec![] };
        assert_eq!(lagrangian_bound(&p, &d), -5.0);
        let fixed = repaired(&p, &d);
        assert!((lagrangian_bound(&p, &fixed) + 1.0).abs() < 1e-10);
    }

    #[test]
    fn infeasibility_ray() {
        // x0 + x1 ≥ 3 with x in [−1, 1]²
        let mut p = lp(-1.0, 1.0);
        p.rows[0].lo = 3.0;
        p.rows[0].hi = f64::INFINITY;
        let d = DualPoint { blocks: vec![], rows: vec![("sum".into(), 1.0)] };
        assert!((infeasibility_margin(&p, &d) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn negative_multiplier_is_projected() {
        // zero objective over [[1, ix], [−ix, 1]] ⪰ 0: the minimum is 0, and
        // Z = −I would claim 2 if it were used as is
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let p = ConicProblem {
            num_vars: 1,
            var_moments: vec![None],
            conjugation_odd: Vec::new(),
            objective: vec![0.0],
            offset: 0.0,
            lower: vec![-1.0],
            upper: vec![1.0],
            rows: vec![],
            blocks: vec![PsdBlock {
                dim: 2,
                label: "b".into(),
                constant: vec![(0, 0, one), (1, 1, one)],
                terms: vec![(0, vec![(0, 1, i), (1, 0, -i)])],
            }],
            confidence: 1.0,
            lower_only: false,
        };
        let z = -CMat::identity(2, 2);
        assert!(lagrangian_bound(&p, &DualPoint { blocks: vec![("b".into(), z)], rows: vec![] }) <= 1e-12);
    }
}
