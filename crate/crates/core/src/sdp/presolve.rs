//! Fixed and isolated variables, empty and dependent rows.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::linalg::CMat;
use super::{ConicProblem, DualPoint};
use crate::error::Result;
use crate::relax::SparseEntries;

const FIX_TOL: f64 = 1e-12;
const CROSS_TOL: f64 = 1e-9;
const DEPENDENCE_TOL: f64 = 1e-9;
/// Relative size of a part treated as absent when classifying entries as
/// real or imaginary.
const PHASE_TOL: f64 = 1e-14;

#[derive(Clone, Debug)]
pub(crate) struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub lo: f64,
    pub hi: f64,
    /// Index in the original problem.
    pub orig: usize,
}

#[derive(Clone, Debug)]
pub(crate) struct Block {
    pub dim: usize,
    pub constant: SparseEntries,
    pub terms: Vec<(usize, SparseEntries)>,
    pub orig: usize,
    /// Rows multiplied by `i` to make the block real; empty when the block
    /// is the original one.
    pub phase: Vec<bool>,
}

impl Block {
    /// `U† z U` with `U = diag(phase)`: a multiplier of the original block.
    pub fn to_original(&self, z: &CMat) -> CMat {
        self.rotate(z, false)
    }

    /// Inverse of [`Block::to_original`].
    pub fn to_reduced(&self, z: &CMat) -> CMat {
        self.rotate(z, true)
    }

    fn rotate(&self, z: &CMat, forward: bool) -> CMat {
        if self.phase.is_empty() {
            return z.clone();
        }
        let u = |k: usize| match (self.phase[k], forward) {
            (false, _) => Complex64::new(1.0, 0.0),
            (true, true) => Complex64::new(0.0, 1.0),
            (true, false) => Complex64::new(0.0, -1.0),
        };
        CMat::from_fn(z.nrows(), z.ncols(), |r, c| u(r) * z[(r, c)] * u(c).conj())
    }
}

/// Problem over the surviving variables.
#[derive(Clone, Debug)]
pub(crate) struct Reduced {
    /// Original index of each surviving variable.
    pub vars: Vec<usize>,
    /// Values of the eliminated variables (surviving slots unused).
    pub fixed: Vec<f64>,
    pub c: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub eq: Vec<Row>,
    pub ineq: Vec<Row>,
    pub blocks: Vec<Block>,
}

impl Reduced {
    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut full = self.fixed.clone();
        for (k, &i) in self.vars.iter().enumerate() {
            if let Some(v) = x.get(k) {
                full[i] = *v;
            }
        }
        full
    }

    /// Rough cost of forming the interior-point Newton matrix.
    pub fn ipm_work(&self) -> f64 {
        let mut in_block = vec![false; self.len()];
        let mut cube = 0.0;
        for b in &self.blocks {
            cube += (b.dim as f64).powi(3);
            for (i, _) in &b.terms {
                in_block[*i] = true;
            }
        }
        let m = in_block.iter().filter(|&&b| b).count() as f64;
        m * cube + m * m * m / 3.0
    }
}

pub(crate) enum Outcome {
    Reduced(Reduced),
    Infeasible(DualPoint),
}

pub(crate) fn presolve(p: &ConicProblem) -> Result<Outcome> {
    let n = p.num_vars;
    let mut lower = p.lower.clone();
    let mut upper = p.upper.clone();
    for i in 0..n {
        if lower[i] > upper[i] + CROSS_TOL * (1.0 + lower[i].abs()) || lower[i].is_nan() || upper[i].is_nan() {
            log::debug!("presolve: empty box on variable {i}");
            return Ok(Outcome::Infeasible(DualPoint::default()));
        }
        if lower[i] > upper[i] {
            let mid = 0.5 * (lower[i] + upper[i]);
            lower[i] = mid;
            upper[i] = mid;
        }
    }

    let symmetry = conjugation_symmetry(p, &lower, &upper);
    if let Some(sym) = &symmetry {
        for (i, &odd) in sym.odd.iter().enumerate() {
            if odd {
                lower[i] = 0.0;
                upper[i] = 0.0;
            }
        }
        log::debug!("presolve: {} conjugation-odd variables fixed at zero", sym.odd.iter().filter(|&&o| o).count());
    }

    let mut used = vec![false; n];
    for r in &p.rows {
        for &(i, _) in &r.coeffs {
            used[i] = true;
        }
    }
    for b in &p.blocks {
        for (i, _) in &b.terms {
            used[*i] = true;
        }
    }

    let mut fixed = vec![0.0; n];
    let mut keep = vec![false; n];
    for i in 0..n {
        if upper[i] - lower[i] <= FIX_TOL {
            fixed[i] = 0.5 * (lower[i] + upper[i]);
        } else if !used[i] {
            let c = p.objective[i];
            fixed[i] = if c > 0.0 {
                lower[i]
            } else if c < 0.0 {
                upper[i]
            } else {
                0.0f64.clamp(lower[i], upper[i])
            };
        } else {
            keep[i] = true;
        }
    }
    let vars: Vec<usize> = (0..n).filter(|&i| keep[i]).collect();
    let mut new_index = vec![usize::MAX; n];
    for (k, &i) in vars.iter().enumerate() {
        new_index[i] = k;
    }

    let mut eq = Vec::new();
    let mut ineq = Vec::new();
    for (j, r) in p.rows.iter().enumerate() {
        let mut shift = 0.0;
        let mut coeffs = Vec::new();
        for &(i, a) in &r.coeffs {
            if keep[i] {
                coeffs.push((new_index[i], a));
            } else {
                shift += a * fixed[i];
            }
        }
        let (lo, hi) = (r.lo - shift, r.hi - shift);
        if coeffs.is_empty() {
            let tol = CROSS_TOL * (1.0 + shift.abs());
            if lo > tol || hi < -tol {
                log::debug!("presolve: row `{}` violated by fixed variables", r.label);
                return Ok(Outcome::Infeasible(DualPoint::default()));
            }
            continue;
        }
        if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            continue;
        }
        let row = Row { coeffs, lo, hi, orig: j };
        if r.is_equality() {
            eq.push(row);
        } else {
            ineq.push(row);
        }
    }
    drop_dependent(&mut eq, vars.len());

    let mut blocks = Vec::new();
    for (k, b) in p.blocks.iter().enumerate() {
        let mut constant = b.constant.clone();
        let mut terms = Vec::new();
        for (i, e) in &b.terms {
            if keep[*i] {
                terms.push((new_index[*i], e.clone()));
            } else if fixed[*i] != 0.0 {
                constant.extend(e.iter().map(|&(r, c, v)| (r, c, v * fixed[*i])));
            }
        }
        if terms.is_empty() {
            let m = super::linalg::sparse_to_dense(b.dim, &constant);
            if super::linalg::min_eigenvalue(&m) < -CROSS_TOL * (1.0 + m.norm()) {
                log::debug!("presolve: constant block `{}` is not PSD", b.label);
                return Ok(Outcome::Infeasible(DualPoint::default()));
            }
            continue;
        }
        let mut block = Block { dim: b.dim, constant, terms, orig: k, phase: Vec::new() };
        if let Some(sym) = &symmetry {
            make_real(&mut block, &sym.phases[k]);
        }
        blocks.push(block);
    }

    Ok(Outcome::Reduced(Reduced {
        c: vars.iter().map(|&i| p.objective[i]).collect(),
        lower: vars.iter().map(|&i| lower[i]).collect(),
        upper: vars.iter().map(|&i| upper[i]).collect(),
        vars,
        fixed,
        eq,
        ineq,
        blocks,
    }))
}

/// Complex conjugation of the state maps a feasible point to another one
/// with the same objective, so the average of the two (all odd variables at
/// zero) loses nothing. With them gone, every block is real up to a diagonal
/// phase.
struct Conjugation {
    odd: Vec<bool>,
    phases: Vec<Vec<bool>>,
}

fn conjugation_symmetry(p: &ConicProblem, lower: &[f64], upper: &[f64]) -> Option<Conjugation> {
    let odd = &p.conjugation_odd;
    if odd.len() != p.num_vars || !odd.iter().any(|&o| o) {
        return None;
    }
    for i in 0..p.num_vars {
        if odd[i] && (p.objective[i] != 0.0 || lower[i] != -upper[i]) {
            return None;
        }
    }
    for r in &p.rows {
        let odd_terms = r.coeffs.iter().filter(|t| odd[t.0]).count();
        if odd_terms > 0 && (odd_terms < r.coeffs.len() || r.lo != -r.hi) {
            return None;
        }
    }
    let mut phases = Vec::with_capacity(p.blocks.len());
    for b in &p.blocks {
        let mut uf = ParityForest::new(b.dim);
        let entries = b
            .constant
            .iter()
            .map(|e| (false, e))
            .chain(b.terms.iter().flat_map(|(i, es)| es.iter().map(move |e| (odd[*i], e))));
        for (flip, &(r, c, v)) in entries {
            let size = v.norm();
            if size == 0.0 {
                continue;
            }
            let imaginary = if v.im.abs() <= PHASE_TOL * size {
                false
            } else if v.re.abs() <= PHASE_TOL * size {
                true
            } else {
                return None;
            };
            if !uf.relate(r, c, imaginary ^ flip) {
                return None;
            }
        }
        phases.push((0..b.dim).map(|k| uf.find(k).1).collect());
    }
    Some(Conjugation { odd: odd.clone(), phases })
}

/// Union-find that tracks the parity of each node relative to its root.
struct ParityForest {
    parent: Vec<usize>,
    parity: Vec<bool>,
}

impl ParityForest {
    fn new(n: usize) -> Self {
        ParityForest { parent: (0..n).collect(), parity: vec![false; n] }
    }

    fn find(&mut self, k: usize) -> (usize, bool) {
        let p = self.parent[k];
        if p == k {
            return (k, false);
        }
        let (root, up) = self.find(p);
        self.parent[k] = root;
        self.parity[k] ^= up;
        (root, self.parity[k])
    }

    /// Records `parity(a) ^ parity(b) == differ`; false on a contradiction.
    fn relate(&mut self, a: usize, b: usize, differ: bool) -> bool {
        let (ra, pa) = self.find(a);
        let (rb, pb) = self.find(b);
        if ra == rb {
            return pa ^ pb == differ;
        }
        self.parent[ra] = rb;
        self.parity[ra] = pa ^ pb ^ differ;
        true
    }
}

fn make_real(block: &mut Block, phase: &[bool]) {
    if !phase.iter().any(|&p| p) {
        return;
    }
    let rotate = |e: &mut SparseEntries| {
        for (r, c, v) in e.iter_mut() {
            *v = match (phase[*r], phase[*c]) {
                (false, false) | (true, true) => Complex64::new(v.re, 0.0),
                (true, false) => Complex64::new(-v.im, 0.0),
                (false, true) => Complex64::new(v.im, 0.0),
            };
        }
    };
    rotate(&mut block.constant);
    for (_, e) in block.terms.iter_mut() {
        rotate(e);
    }
    block.phase = phase.to_vec();
}

/// Removes equality rows in the span of earlier ones (pivoted Cholesky of
/// the normalized Gram matrix).
fn drop_dependent(eq: &mut Vec<Row>, m: usize) {
    let k = eq.len();
    if k < 2 {
        return;
    }
    let mut a = DMatrix::<f64>::zeros(k, m);
    for (r, row) in eq.iter().enumerate() {
        let norm = row.coeffs.iter().map(|t| t.1 * t.1).sum::<f64>().sqrt();
        for &(i, v) in &row.coeffs {
            a[(r, i)] += v / norm;
        }
    }
    let mut g = &a * a.transpose();
    let mut keep = vec![false; k];
    let mut done = vec![false; k];
    for _ in 0..k {
        let Some((piv, d)) = (0..k).filter(|&i| !done[i]).map(|i| (i, g[(i, i)])).max_by(|x, y| x.1.total_cmp(&y.1))
        else {
            break;
        };
        if d <= DEPENDENCE_TOL {
            break;
        }
        done[piv] = true;
        keep[piv] = true;
        let s = d.sqrt();
        let col: Vec<f64> = (0..k).map(|i| if done[i] { 0.0 } else { g[(i, piv)] / s }).collect();
        for i in 0..k {
            if done[i] {
                continue;
            }
            for j in 0..k {
                if !done[j] {
                    g[(i, j)] -= col[i] * col[j];
                }
            }
        }
    }
    let dropped = keep.iter().filter(|&&b| !b).count();
    if dropped > 0 {
        log::debug!("presolve: dropped {dropped} dependent equality rows");
        let mut it = keep.into_iter();
        eq.retain(|_| it.next().unwrap_or(false));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::LinearRow;

    fn base() -> ConicProblem {
        ConicProblem {
            num_vars: 4,
            var_moments: vec![None; 4],
            conjugation_odd: Vec::new(),
            objective: vec![1.0, -1.0, 0.5, 0.0],
            offset: 0.0,
            lower: vec![-1.0, -1.0, 0.2, -1.0],
            upper: vec![1.0, 1.0, 0.2, 1.0],
            rows: vec![],
            blocks: vec![],
            confidence: 1.0,
            lower_only: false,
        }
    }

    #[test]
    fn isolated_and_fixed_variables_vanish() {
        let Outcome::Reduced(r) = presolve(&base()).unwrap() else { panic!() };
        assert!(r.is_trivial());
        assert_eq!(r.expand(&[]), vec![-1.0, 1.0, 0.2, 0.0]);
    }

    #[test]
    fn dependent_rows_dropped() {
        let mut p = base();
        let row = |c: Vec<(usize, f64)>, v: f64, l: &str| LinearRow { coeffs: c, lo: v, hi: v, label: l.into() };
        p.rows = vec![
            row(vec![(0, 1.0), (1, 1.0)], 0.0, "a"),
            row(vec![(1, 1.0), (3, 1.0)], 0.0, "b"),
            row(vec![(0, 2.0), (1, 4.0), (3, 2.0)], 0.0, "c"),
        ];
        let Outcome::Reduced(r) = presolve(&p).unwrap() else { panic!() };
        assert_eq!(r.len(), 3);
        assert_eq!(r.eq.len(), 2);
    }

    #[test]
    fn crossing_box_is_infeasible() {
        let mut p = base();
        p.lower[0] = 0.5;
        p.upper[0] = 0.4;
        assert!(matches!(presolve(&p).unwrap(), Outcome::Infeasible(_)));
    }
}
