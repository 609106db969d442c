//! Brute-force reference values for small systems: dense matrices of Pauli
//! polynomials, ground states, Lindblad steady states and partial traces.
//!
//! Basis convention: site `i` of an `n`-qubit string is bit `n − 1 − i` of
//! the computational-basis index, so site 1 is the most significant factor
//! of the Kronecker product.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::confidence::IntervalConstraint;
use crate::error::{Error, Result};
use crate::models::LindbladModel;
use crate::pauli::{OperatorPoly, Pauli, PauliString};
use crate::relax::{build_rdm_block, IndexSet, LinearMomentConstraint, MomentRegistry, Relation};
use crate::sdp::{self, SolverStatus};

/// Largest system for which dense `2ⁿ × 2ⁿ` matrices are built.
pub const MAX_DENSE_QUBITS: usize = 10;
/// Largest system for ground-state vectors.
pub const MAX_PURE_QUBITS: usize = 12;
/// Largest system for exact steady states (`4ⁿ − 1` unknowns).
pub const MAX_STEADY_QUBITS: usize = 6;
/// Dense eigensolver up to this size, Lanczos above.
const DENSE_EIGEN_QUBITS: usize = 8;
/// Gap or singular value below which a spectrum is treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;

type CMat = DMatrix<Complex64>;
type CVec = DVector<Complex64>;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Bit masks and constant phase of a string acting on basis states:
/// `P|b⟩ = phase · (−1)^{|b ∧ z|} |b ⊕ x⟩`.
#[derive(Clone, Copy, Debug)]
pub struct BasisAction {
    pub x: usize,
    pub z: usize,
    pub phase: Complex64,
}

impl BasisAction {
    pub fn new(p: &PauliString) -> Self {
        let n = p.num_qubits();
        let (mut x, mut z, mut ny) = (0usize, 0usize, 0u32);
        for (site, l) in p.sites() {
            let bit = 1usize << (n - 1 - site);
            match l {
                Pauli::X => x |= bit,
                Pauli::Z => z |= bit,
                Pauli::Y => {
                    x |= bit;
                    z |= bit;
                    ny += 1;
                }
                Pauli::I => {}
            }
        }
        let phase = match ny % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        BasisAction { x, z, phase }
    }

    /// Coefficient of `|b ⊕ x⟩` in `P|b⟩`.
    #[inline]
    pub fn amp(&self, b: usize) -> Complex64 {
        if (b & self.z).count_ones() % 2 == 1 {
            -self.phase
        } else {
            self.phase
        }
    }
}

fn check_dense(n: usize, limit: usize) -> Result<()> {
    if n > limit {
        return Err(Error::TooLarge(format!("{n} qubits exceeds the dense limit of {limit}")));
    }
    Ok(())
}

/// Dense matrix of a single string.
pub fn dense_string(p: &PauliString) -> Result<CMat> {
    let n = p.num_qubits();
    check_dense(n, MAX_DENSE_QUBITS)?;
    let d = 1usize << n;
    let act = BasisAction::new(p);
    let mut m = CMat::zeros(d, d);
    for b in 0..d {
        m[(b ^ act.x, b)] = act.amp(b);
    }
    Ok(m)
}

/// Dense matrix of a polynomial.
pub fn dense_poly(p: &OperatorPoly) -> Result<CMat> {
    let n = p.num_qubits();
    check_dense(n, MAX_DENSE_QUBITS)?;
    let d = 1usize << n;
    let mut m = CMat::zeros(d, d);
    for (s, c) in p.terms() {
        let act = BasisAction::new(s);
        for b in 0..d {
            m[(b ^ act.x, b)] += c * act.amp(b);
        }
    }
    Ok(m)
}

/// `p · v` without forming the matrix.
pub fn apply_poly(actions: &[(BasisAction, Complex64)], v: &CVec) -> CVec {
    let mut out = CVec::zeros(v.len());
    for (act, c) in actions {
        for b in 0..v.len() {
            out[b ^ act.x] += c * act.amp(b) * v[b];
        }
    }
    out
}

fn actions(p: &OperatorPoly) -> Vec<(BasisAction, Complex64)> {
    p.terms().map(|(s, c)| (BasisAction::new(s), c)).collect()
}

/// A pure or mixed state of `n` qubits.
#[derive(Clone, Debug)]
pub enum DenseState {
    Pure(CVec),
    Mixed(CMat),
}

impl DenseState {
    pub fn dim(&self) -> usize {
        match self {
            DenseState::Pure(v) => v.len(),
            DenseState::Mixed(m) => m.nrows(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    /// `tr(ρ P)`, real for Hermitian `P`.
    pub fn expectation(&self, p: &PauliString) -> f64 {
        let act = BasisAction::new(p);
        let mut acc = ZERO;
        match self {
            DenseState::Pure(v) => {
                for b in 0..v.len() {
                    acc += v[b ^ act.x].conj() * act.amp(b) * v[b];
                }
            }
            DenseState::Mixed(m) => {
                for b in 0..m.nrows() {
                    acc += m[(b, b ^ act.x)] * act.amp(b);
                }
            }
        }
        acc.re
    }

    pub fn expectation_poly(&self, p: &OperatorPoly) -> Complex64 {
        p.terms().map(|(s, c)| c * self.expectation(s)).sum()
    }

    pub fn to_matrix(&self) -> CMat {
        match self {
            DenseState::Pure(v) => v * v.adjoint(),
            DenseState::Mixed(m) => m.clone(),
        }
    }

    /// `tr ρ²`.
    pub fn purity(&self) -> f64 {
        match self {
            DenseState::Pure(v) => v.norm_squared().powi(2),
            DenseState::Mixed(m) => m.iter().map(|c| c.norm_sqr()).sum(),
        }
    }

    pub fn linear_entropy(&self) -> f64 {
        1.0 - self.purity()
    }

    pub fn trace(&self) -> f64 {
        match self {
            DenseState::Pure(v) => v.norm_squared(),
            DenseState::Mixed(m) => m.trace().re,
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        match self {
            DenseState::Pure(_) => 0.0,
            DenseState::Mixed(m) => m.clone().symmetric_eigenvalues().min(),
        }
    }

    /// Largest `|ρ − ρ†|` entry.
    pub fn hermiticity_error(&self) -> f64 {
        match self {
            DenseState::Pure(_) => 0.0,
            DenseState::Mixed(m) => (m - m.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max),
        }
    }
}

/// Lowest eigenpair of a Hamiltonian.
#[derive(Clone, Debug)]
pub struct GroundState {
    pub energy: f64,
    pub state: DenseState,
    /// The lowest eigenvalue is (numerically) degenerate; the state is one
    /// vector of the ground space.
    pub degenerate: bool,
}

pub fn exact_ground_state(h: &OperatorPoly) -> Result<GroundState> {
    let n = h.num_qubits();
    check_dense(n, MAX_PURE_QUBITS)?;
    if !h.is_hermitian(1e-12) {
        return Err(Error::NonHermitian("Hamiltonian has complex coefficients".into()));
    }
    if n <= DENSE_EIGEN_QUBITS {
        let eig = dense_poly(h)?.symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
        let e0 = eig.eigenvalues[order[0]];
        let degenerate = order.len() > 1 && eig.eigenvalues[order[1]] - e0 < DEGENERACY_TOL;
        let v = eig.eigenvectors.column(order[0]).into_owned();
        Ok(GroundState { energy: e0, state: DenseState::Pure(v), degenerate })
    } else {
        lanczos_ground(h)
    }
}

/// Lanczos with full reorthogonalization.
fn lanczos_ground(h: &OperatorPoly) -> Result<GroundState> {
    let d = 1usize << h.num_qubits();
    let acts = actions(h);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v = CVec::from_fn(d, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    v /= Complex64::new(v.norm(), 0.0);
    let max_k = d.min(400);
    let mut basis: Vec<CVec> = Vec::with_capacity(max_k);
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    loop {
        let mut w = apply_poly(&acts, &v);
        let a = v.dotc(&w).re;
        basis.push(v.clone());
        alpha.push(a);
        for _ in 0..2 {
            for q in &basis {
                let c = q.dotc(&w);
                w.axpy(-c, q, Complex64::new(1.0, 0.0));
            }
        }
        let b = w.norm();
        let k = alpha.len();
        let done = b < 1e-12 || k == max_k;
        if done || k % 10 == 0 {
            let mut t = DMatrix::<f64>::zeros(k, k);
            for i in 0..k {
                t[(i, i)] = alpha[i];
                if i + 1 < k {
                    t[(i, i + 1)] = beta[i];
                    t[(i + 1, i)] = beta[i];
                }
            }
            let eig = t.symmetric_eigen();
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
            let y = eig.eigenvectors.column(order[0]);
            let resid = b * y[k - 1].abs();
            if done || resid < 1e-11 {
                let mut g = CVec::zeros(d);
                for (j, q) in basis.iter().enumerate() {
                    g.axpy(Complex64::new(y[j], 0.0), q, Complex64::new(1.0, 0.0));
                }
                g /= Complex64::new(g.norm(), 0.0);
                let e0 = eig.eigenvalues[order[0]];
                let degenerate = k > 1 && eig.eigenvalues[order[1]] - e0 < DEGENERACY_TOL;
                return Ok(GroundState { energy: e0, state: DenseState::Pure(g), degenerate });
            }
        }
        beta.push(b);
        v = w / Complex64::new(b, 0.0);
    }
}

/// Dense `L(ρ) = −i[H, ρ] + Σ γ (A ρ A† − ½{A†A, ρ})`.
pub fn lindblad_apply_dense(model: &LindbladModel, rho: &CMat) -> Result<CMat> {
    let h = dense_poly(&model.hamiltonian)?;
    let mi = Complex64::new(0.0, -1.0);
    let mut out = (&h * rho - rho * &h) * mi;
    for j in &model.jumps {
        if j.rate == 0.0 {
            continue;
        }
        let a = dense_poly(&j.op)?;
        let ad = a.adjoint();
        let ada = &ad * &a;
        let term = &a * rho * &ad - (&ada * rho + rho * &ada) * Complex64::new(0.5, 0.0);
        out += term * Complex64::new(j.rate, 0.0);
    }
    Ok(out)
}

/// Stationary state of a Lindblad model.
#[derive(Clone, Debug)]
pub struct SteadyState {
    pub state: DenseState,
    /// The stationary space is more than one-dimensional; `state` is the
    /// minimum-norm member.
    pub degenerate: bool,
    /// Frobenius norm of `L(ρ)`.
    pub residual: f64,
}

/// Index of a string in the `4ⁿ` Pauli basis: `(x << n) | z` over the
/// basis-bit masks. The identity is 0.
fn basis_index(act: &BasisAction, n: usize) -> usize {
    (act.x << n) | act.z
}

fn string_from_index(idx: usize, n: usize) -> PauliString {
    let (x, z) = (idx >> n, idx & ((1 << n) - 1));
    let mut s = PauliString::identity(n);
    for site in 0..n {
        let bit = 1usize << (n - 1 - site);
        let l = match (x & bit != 0, z & bit != 0) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        };
        s.set(site, l);
    }
    s
}

/// All `4ⁿ` strings in Pauli-basis index order.
pub fn all_strings(n: usize) -> Vec<PauliString> {
    (0..1usize << (2 * n)).map(|i| string_from_index(i, n)).collect()
}

/// Solves `⟨L†(P)⟩ = 0` for every non-identity string with
/// `ρ = (𝟙 + Σ y_P P) / 2ⁿ`.
pub fn exact_steady_state(model: &LindbladModel) -> Result<SteadyState> {
    let n = model.num_qubits();
    check_dense(n, MAX_STEADY_QUBITS)?;
    let dim = 1usize << (2 * n);
    let m = dim - 1;
    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    for row in 1..dim {
        let p = string_from_index(row, n);
        let img = model.adjoint_apply(&p)?;
        for (q, c) in img.terms() {
            let col = basis_index(&BasisAction::new(q), n);
            if col == 0 {
                rhs[row - 1] -= c.re;
            } else {
                a[(row - 1, col - 1)] += c.re;
            }
        }
    }
    let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1e-300);
    let lu = a.clone().lu();
    let mut degenerate = true;
    let mut y = None;
    if let Some(sol) = lu.solve(&rhs) {
        if sol.iter().all(|v| v.is_finite()) {
            // Inverse iteration estimates the smallest |eigenvalue| of the
            // system; a near-singular system means a non-unique steady state.
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let mut v = DVector::<f64>::from_fn(m, |_, _| rng.random::<f64>() - 0.5);
            v /= v.norm();
            let mut growth = 0.0;
            for _ in 0..6 {
                match lu.solve(&v) {
                    Some(w) if w.iter().all(|x| x.is_finite()) => {
                        growth = w.norm();
                        v = w / growth;
                    }
                    _ => {
                        growth = f64::INFINITY;
                        break;
                    }
                }
            }
            let smallest = 1.0 / growth;
            degenerate = smallest < DEGENERACY_TOL * scale.max(1.0);
            if !degenerate {
                y = Some(sol);
            }
        }
    }
    let y = match y {
        Some(y) => y,
        None => {
            // Minimum-norm solution of the singular system.
            let at = a.transpose();
            let mut normal = &at * &a;
            let reg = 1e-12 * scale * scale;
            for i in 0..m {
                normal[(i, i)] += reg;
            }
            let b = &at * &rhs;
            normal
                .cholesky()
                .map(|c| c.solve(&b))
                .ok_or_else(|| Error::Numerical("steady-state normal equations".into()))?
        }
    };
    let d = 1usize << n;
    let mut rho = CMat::identity(d, d);
    for idx in 1..dim {
        let c = y[idx - 1];
        if c == 0.0 {
            continue;
        }
        let act = BasisAction::new(&string_from_index(idx, n));
        for b in 0..d {
            rho[(b ^ act.x, b)] += act.amp(b) * c;
        }
    }
    rho /= Complex64::new(d as f64, 0.0);
    let residual = lindblad_apply_dense(model, &rho)?.norm();
    Ok(SteadyState { state: DenseState::Mixed(rho), degenerate, residual })
}

/// Reduced state on `keep` (0-based sites, any order; the result follows
/// increasing site order).
pub fn partial_trace(state: &DenseState, keep: &[usize]) -> Result<DenseState> {
    let n = state.num_qubits();
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.iter().any(|&s| s >= n) {
        return Err(Error::Shape(format!("kept sites {keep:?} outside {n} qubits")));
    }
    let k = keep.len();
    let traced: Vec<usize> = (0..n).filter(|s| !keep.contains(s)).collect();
    let spread = |bits: usize, sites: &[usize]| -> usize {
        let m = sites.len();
        sites
            .iter()
            .enumerate()
            .filter(|(j, _)| bits >> (m - 1 - j) & 1 == 1)
            .map(|(_, &s)| 1usize << (n - 1 - s))
            .sum()
    };
    let da = 1usize << k;
    let de = 1usize << traced.len();
    let ka: Vec<usize> = (0..da).map(|a| spread(a, &keep)).collect();
    let ke: Vec<usize> = (0..de).map(|e| spread(e, &traced)).collect();
    let mut out = CMat::zeros(da, da);
    match state {
        DenseState::Pure(v) => {
            for a in 0..da {
                for a2 in 0..da {
                    out[(a, a2)] = ke.iter().map(|&e| v[ka[a] | e] * v[ka[a2] | e].conj()).sum();
                }
            }
        }
        DenseState::Mixed(m) => {
            for a in 0..da {
                for a2 in 0..da {
                    out[(a, a2)] = ke.iter().map(|&e| m[(ka[a] | e, ka[a2] | e)]).sum();
                }
            }
        }
    }
    Ok(DenseState::Mixed(out))
}

/// Largest system for the density-matrix program.
pub const MAX_DENSE_SDP_QUBITS: usize = 4;

/// Exact range `(min, max)` of `⟨objective⟩` over all density matrices that
/// satisfy the bands and the guarantees `⟨g⟩ = 0`, with the full `ρ` as one
/// PSD block.
pub fn exact_sdp_dense(
    objective: &OperatorPoly,
    intervals: &[IntervalConstraint],
    guarantees: &[OperatorPoly],
) -> Result<(f64, f64)> {
    let n = objective.num_qubits();
    if n == 0 || n > MAX_DENSE_SDP_QUBITS {
        return Err(Error::TooLarge(format!("density-matrix program on {n} qubits")));
    }
    let mut reg = MomentRegistry::new(n);
    for s in all_strings(n) {
        reg.register_silent(&s, IndexSet::Positivity)?;
    }
    let sites: Vec<usize> = (0..n).collect();
    let rho = build_rdm_block(&sites, &mut reg)?;
    let mut linear = Vec::with_capacity(guarantees.len());
    for g in guarantees {
        if g.num_qubits() != n {
            return Err(Error::Shape("guarantee acts on a different number of qubits".into()));
        }
        if let Some(c) = LinearMomentConstraint::from_form(&reg.linear_form(g)?, Relation::Eq) {
            linear.push(c);
        } else if g.coeff(&PauliString::identity(n)).norm() > 1e-12 {
            return Err(Error::Infeasible("constant guarantee is nonzero".into()));
        }
    }
    let p = sdp::assemble(&reg, sdp::Objective::Linear(objective), &[rho], &linear, intervals, 1.0)?;
    let (lo, hi) = sdp::solve_both(&p, &sdp::SolverSettings::default())?;
    for r in [&lo, &hi] {
        match r.status {
            SolverStatus::Optimal | SolverStatus::NearOptimal => {}
            SolverStatus::Infeasible => return Err(Error::Infeasible("no density matrix meets the bands".into())),
            s => return Err(Error::Numerical(format!("density-matrix program ended with {}", s.as_str()))),
        }
    }
    Ok((lo.value, hi.value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_boundary_driven, build_single_qubit, build_tfi_2d, BathSpec};

    fn ps(s: &str, n: usize) -> PauliString {
        PauliString::parse_sparse(s, n).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_qubit_matrices() {
        let y = dense_string(&ps("Y1", 1)).unwrap();
        assert_eq!(y[(0, 1)], c(0.0, -1.0));
        assert_eq!(y[(1, 0)], c(0.0, 1.0));
        let z = dense_string(&ps("Z1", 1)).unwrap();
        assert_eq!((z[(0, 0)], z[(1, 1)]), (c(1.0, 0.0), c(-1.0, 0.0)));
    }

    #[test]
    fn site_one_is_most_significant() {
        // Z1 on two qubits: diag(1, 1, -1, -1)
        let z = dense_string(&ps("Z1", 2)).unwrap();
        let diag: Vec<f64> = (0..4).map(|i| z[(i, i)].re).collect();
        assert_eq!(diag, vec![1.0, 1.0, -1.0, -1.0]);
    }

    #[test]
    fn ground_state_of_z() {
        let h = OperatorPoly::from_string(ps("Z1", 1), c(1.0, 0.0));
        let g = exact_ground_state(&h).unwrap();
        assert!((g.energy + 1.0).abs() < 1e-14);
        assert!((g.state.expectation(&ps("Z1", 1)) + 1.0).abs() < 1e-14);
        assert!(!g.degenerate);
    }

    #[test]
    fn lanczos_agrees_with_dense() {
        let h = build_tfi_2d(3, 3, 0.8, 1.0).unwrap();
        let lz = lanczos_ground(&h).unwrap();
        let eig = dense_poly(&h).unwrap().symmetric_eigenvalues();
        assert!((lz.energy - eig.min()).abs() < 1e-9);
        let e = lz.state.expectation_poly(&h).re;
        assert!((e - lz.energy).abs() < 1e-8);
    }

    #[test]
    fn steady_state_two_rates() {
        let (up, down) = (1.56517642749666e-4, 1.15651764274967e-3);
        let m = build_single_qubit(1.0, up, down).unwrap();
        let ss = exact_steady_state(&m).unwrap();
        assert!(!ss.degenerate);
        assert!(ss.residual < 1e-12);
        let z = ss.state.expectation(&ps("Z1", 1));
        assert!((z - (up - down) / (up + down)).abs() < 1e-12);
    }

    #[test]
    fn zero_rates_are_degenerate() {
        let m = build_single_qubit(1.0, 0.0, 0.0).unwrap();
        let ss = exact_steady_state(&m).unwrap();
        assert!(ss.degenerate);
        assert!(ss.residual < 1e-12);
        assert!((ss.state.purity() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn boundary_driven_steady_state_is_a_state() {
        let hot = BathSpec::new(1.0, 0.05, 2.0).unwrap();
        let cold = BathSpec::new(0.1, 0.2, 2.0).unwrap();
        let m = build_boundary_driven(1, 3, 1.0, 1.0, hot, cold).unwrap();
        let ss = exact_steady_state(&m).unwrap();
        assert!(!ss.degenerate);
        assert!(ss.residual < 1e-9);
        assert!(ss.state.min_eigenvalue() > -1e-10);
        assert!((ss.state.trace() - 1.0).abs() < 1e-10);
        assert!(ss.state.hermiticity_error() < 1e-12);
    }

    #[test]
    fn bell_pair_marginal() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = CVec::from_vec(vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]);
        let r = partial_trace(&DenseState::Pure(v), &[1]).unwrap();
        let m = r.to_matrix();
        assert!((m - CMat::identity(2, 2) * c(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn product_state_factor() {
        // |0> ⊗ |+> ⊗ |1>
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut v = CVec::zeros(8);
        v[0b001] = c(h, 0.0);
        v[0b011] = c(h, 0.0);
        let st = DenseState::Pure(v);
        let plus = partial_trace(&st, &[1]).unwrap();
        assert!((plus.expectation(&ps("X1", 1)) - 1.0).abs() < 1e-15);
        let ends = partial_trace(&st, &[2, 0]).unwrap();
        assert!((ends.expectation(&ps("Z1", 2)) - 1.0).abs() < 1e-15);
        assert!((ends.expectation(&ps("Z2", 2)) + 1.0).abs() < 1e-15);
        assert!(partial_trace(&st, &[3]).is_err());
    }

    #[test]
    fn size_guards() {
        let h = OperatorPoly::identity(13);
        assert!(matches!(exact_ground_state(&h), Err(Error::TooLarge(_))));
    }

    #[test]
    fn dense_program_trivial_ranges() {
        let z = OperatorPoly::from_string(ps("Z1", 1), 1.0.into());
        let (lo, hi) = exact_sdp_dense(&z, &[], &[]).unwrap();
        assert!((lo + 1.0).abs() < 1e-7 && (hi - 1.0).abs() < 1e-7);
        let band = IntervalConstraint::new(z.clone(), 0.3, 0.05);
        let (lo, hi) = exact_sdp_dense(&z, &[band], &[]).unwrap();
        assert!((lo - 0.25).abs() < 1e-7 && (hi - 0.35).abs() < 1e-7);
    }

    #[test]
    fn dense_program_uses_positivity() {
        // ⟨X⟩ = 0.8 leaves ⟨Z⟩ ∈ [−0.6, 0.6]
        let x = OperatorPoly::from_string(ps("X1", 1), 1.0.into());
        let z = OperatorPoly::from_string(ps("Z1", 1), 1.0.into());
        let (lo, hi) = exact_sdp_dense(&z, &[IntervalConstraint::exact(x.clone(), 0.8)], &[]).unwrap();
        assert!((lo + 0.6).abs() < 1e-6 && (hi - 0.6).abs() < 1e-6, "{lo} {hi}");
        let contradiction = [IntervalConstraint::exact(x, 0.8), IntervalConstraint::exact(z.clone(), 0.8)];
        assert!(matches!(exact_sdp_dense(&z, &contradiction, &[]), Err(Error::Infeasible(_))));
    }
}
