//! Benchmark spin systems: the 2D transverse-field Ising model, its
//! boundary-driven open-system version, and the Majumdar–Ghosh chain.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{anticommutator, commutator, OperatorPoly, Pauli, PauliString};

/// Rectangular lattice with row-major site numbering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub rows: usize,
    pub cols: usize,
}

impl Grid {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Geometry(format!("{rows}x{cols} grid has no sites")));
        }
        Ok(Grid { rows, cols })
    }

    pub fn num_sites(&self) -> usize {
        self.rows * self.cols
    }

    #[inline]
    pub fn site(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    /// Nearest-neighbour pairs with open boundaries, horizontal then vertical
    /// within each site.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                if c + 1 < self.cols {
                    out.push((self.site(r, c), self.site(r, c + 1)));
                }
                if r + 1 < self.rows {
                    out.push((self.site(r, c), self.site(r + 1, c)));
                }
            }
        }
        out
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.rows).map(move |r| self.site(r, col))
    }
}

fn real(c: f64) -> Complex64 {
    Complex64::new(c, 0.0)
}

/// `g Σ Z_i + (J/2) Σ_<ij> X_i X_j` on an open grid.
pub fn build_tfi_2d(rows: usize, cols: usize, g: f64, j: f64) -> Result<OperatorPoly> {
    let grid = Grid::new(rows, cols)?;
    let n = grid.num_sites();
    let mut h = OperatorPoly::zero(n);
    for s in 0..n {
        h.add_term(PauliString::single(n, s, Pauli::Z), real(g));
    }
    for (a, b) in grid.edges() {
        let xx = PauliString::from_sites(n, &[(a, Pauli::X), (b, Pauli::X)])?;
        h.add_term(xx, real(0.5 * j));
    }
    Ok(h)
}

/// Thermal bath coupled through single-site raising/lowering jumps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub temperature: f64,
    pub rate: f64,
    /// Energy exchanged per jump.
    pub quantum: f64,
}

impl BathSpec {
    pub fn new(temperature: f64, rate: f64, quantum: f64) -> Result<Self> {
        let b = BathSpec { temperature, rate, quantum };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Domain(format!("bath temperature {} must be positive", self.temperature)));
        }
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return Err(Error::Domain(format!("bath rate {} must be non-negative", self.rate)));
        }
        if !(self.quantum > 0.0 && self.quantum.is_finite()) {
            return Err(Error::Domain(format!("bath quantum {} must be positive", self.quantum)));
        }
        Ok(())
    }

    /// Bose occupation `1/(e^{ε/T} − 1)`.
    pub fn bose_factor(&self) -> f64 {
        1.0 / (self.quantum / self.temperature).exp_m1()
    }

    /// `(γ n_B, γ (n_B + 1))`: rates of the raising and lowering jumps.
    pub fn rates(&self) -> (f64, f64) {
        let nb = self.bose_factor();
        (self.rate * nb, self.rate * (nb + 1.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BathTag {
    Hot,
    Cold,
}

/// A dissipator term `γ D[A]`.
#[derive(Clone, Debug)]
pub struct Jump {
    pub rate: f64,
    pub op: OperatorPoly,
    pub bath: BathTag,
    // A† and A†A are reused for every adjoint application.
    op_dag: OperatorPoly,
    op_dag_op: OperatorPoly,
    support: Vec<usize>,
}

impl Jump {
    pub fn new(rate: f64, op: OperatorPoly, bath: BathTag) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::Domain(format!("jump rate {rate} must be non-negative")));
        }
        let op_dag = op.conjugate_transpose();
        let op_dag_op = op_dag.multiply_poly(&op)?;
        let mut support: Vec<usize> = op.strings().flat_map(|s| s.support()).collect();
        support.sort_unstable();
        support.dedup();
        Ok(Jump { rate, op, bath, op_dag, op_dag_op, support })
    }

    /// Sites the jump operator acts on.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// `A† O A − ½{A†A, O}` (without the rate).
    pub fn adjoint_dissipator(&self, o: &OperatorPoly) -> Result<OperatorPoly> {
        let sandwich = self.op_dag.multiply_poly(o)?.multiply_poly(&self.op)?;
        let anti = anticommutator(&self.op_dag_op, o)?;
        sandwich.sub(&anti.scale_real(0.5))
    }

    pub fn op_dag_op(&self) -> &OperatorPoly {
        &self.op_dag_op
    }

    pub fn op_dag(&self) -> &OperatorPoly {
        &self.op_dag
    }
}

/// `σ₊ = ½(X + iY)` on `site`, mapping `|1⟩ → |0⟩`.
pub fn sigma_plus(n: usize, site: usize) -> OperatorPoly {
    let mut p = OperatorPoly::zero(n);
    p.add_term(PauliString::single(n, site, Pauli::X), real(0.5));
    p.add_term(PauliString::single(n, site, Pauli::Y), Complex64::new(0.0, 0.5));
    p
}

/// `σ₋ = ½(X − iY)` on `site`, mapping `|0⟩ → |1⟩`.
pub fn sigma_minus(n: usize, site: usize) -> OperatorPoly {
    sigma_plus(n, site).conjugate_transpose()
}

/// Markovian open system `−i[H, ·] + Σ γ_j D[A_j]`.
#[derive(Clone, Debug)]
pub struct LindbladModel {
    pub hamiltonian: OperatorPoly,
    pub jumps: Vec<Jump>,
    pub grid: Option<Grid>,
}

impl LindbladModel {
    pub fn new(hamiltonian: OperatorPoly, jumps: Vec<Jump>, grid: Option<Grid>) -> Result<Self> {
        let n = hamiltonian.num_qubits();
        if !hamiltonian.is_hermitian(1e-12) {
            return Err(Error::NonHermitian("Hamiltonian has complex coefficients".into()));
        }
        for j in &jumps {
            if j.op.num_qubits() != n {
                return Err(Error::Shape(format!("jump on {} qubits in a {n}-qubit model", j.op.num_qubits())));
            }
        }
        if let Some(g) = grid {
            if g.num_sites() != n {
                return Err(Error::Geometry(format!("{}x{} grid for {n} qubits", g.rows, g.cols)));
            }
        }
        Ok(LindbladModel { hamiltonian, jumps, grid })
    }

    pub fn num_qubits(&self) -> usize {
        self.hamiltonian.num_qubits()
    }

    pub fn hot_jumps(&self) -> impl Iterator<Item = &Jump> + '_ {
        self.jumps.iter().filter(|j| j.bath == BathTag::Hot)
    }

    /// `L†(O) = i[H, O] + Σ γ_j D†[A_j](O)` for a polynomial `O`.
    pub fn adjoint_apply_poly(&self, o: &OperatorPoly) -> Result<OperatorPoly> {
        let n = self.num_qubits();
        if o.num_qubits() != n {
            return Err(Error::Shape(format!("{}-qubit operator in a {n}-qubit model", o.num_qubits())));
        }
        let mut out = OperatorPoly::zero(n);
        for (p, c) in o.terms() {
            let img = self.adjoint_apply(p)?;
            for (q, v) in img.terms() {
                out.add_term(q.clone(), c * v);
            }
        }
        Ok(out)
    }

    /// `L†(P)` for a single string. The result is Hermitian.
    pub fn adjoint_apply(&self, p: &PauliString) -> Result<OperatorPoly> {
        let n = self.num_qubits();
        if p.num_qubits() != n {
            return Err(Error::Shape(format!("{}-qubit string in a {n}-qubit model", p.num_qubits())));
        }
        let mut out = commutator(&self.hamiltonian, p)?.scale(Complex64::new(0.0, 1.0));
        let single = OperatorPoly::from_string(p.clone(), real(1.0));
        for j in &self.jumps {
            if j.rate == 0.0 || !j.support.iter().any(|&s| p.get(s) != Pauli::I) {
                continue;
            }
            let d = j.adjoint_dissipator(&single)?;
            for (q, v) in d.terms() {
                out.add_term(q.clone(), v * j.rate);
            }
        }
        Ok(out)
    }
}

/// Boundary-driven TFI grid: hot bath on column 0, cold bath on the last
/// column, each site coupled through `σ₊` (rate `γ n_B`) and `σ₋`
/// (rate `γ (n_B + 1)`).
pub fn build_boundary_driven(
    rows: usize,
    cols: usize,
    g: f64,
    j: f64,
    hot: BathSpec,
    cold: BathSpec,
) -> Result<LindbladModel> {
    let grid = Grid::new(rows, cols)?;
    if cols < 2 {
        return Err(Error::Geometry("hot and cold columns coincide; need at least 2 columns".into()));
    }
    hot.validate()?;
    cold.validate()?;
    let n = grid.num_sites();
    let h = build_tfi_2d(rows, cols, g, j)?;
    let mut jumps = Vec::new();
    for (bath, spec, col) in [(BathTag::Hot, hot, 0), (BathTag::Cold, cold, cols - 1)] {
        let (up, down) = spec.rates();
        for s in grid.column(col) {
            jumps.push(Jump::new(up, sigma_plus(n, s), bath)?);
            jumps.push(Jump::new(down, sigma_minus(n, s), bath)?);
        }
    }
    LindbladModel::new(h, jumps, Some(grid))
}

/// Single qubit with `H = gZ` and one bath; the smallest open system.
pub fn build_single_qubit(g: f64, rate_up: f64, rate_down: f64) -> Result<LindbladModel> {
    let h = OperatorPoly::from_string(PauliString::single(1, 0, Pauli::Z), real(g));
    let jumps = vec![
        Jump::new(rate_up, sigma_plus(1, 0), BathTag::Hot)?,
        Jump::new(rate_down, sigma_minus(1, 0), BathTag::Hot)?,
    ];
    LindbladModel::new(h, jumps, None)
}

/// `Σ_{hot} γ_j D†[A_j](H)`: energy leaving the hot bath per unit time.
pub fn heat_current_poly(model: &LindbladModel) -> Result<OperatorPoly> {
    let mut any = false;
    let mut out = OperatorPoly::zero(model.num_qubits());
    for j in model.hot_jumps() {
        any = true;
        if j.rate == 0.0 {
            continue;
        }
        let d = j.adjoint_dissipator(&model.hamiltonian)?;
        for (q, v) in d.terms() {
            out.add_term(q.clone(), v * j.rate);
        }
    }
    if !any {
        return Err(Error::Config("model has no hot-bath jumps".into()));
    }
    // Residual imaginary parts are rounding noise on Hermitian input.
    OperatorPoly::from_real_terms(out.num_qubits(), out.real_terms().map(|(s, c)| (c, s.clone())))
}

/// Scale applied to the Majumdar–Ghosh couplings.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MgNormalization {
    /// Spin-½ operators `S = σ/2`; dimer energy −3/8 per site.
    #[default]
    Spin,
    /// Bare Pauli letters; dimer energy −3/2 per site.
    Pauli,
}

/// Periodic Majumdar–Ghosh chain
/// `c [Σ_j σ_j·σ_{j+1} + ½ Σ_j σ_j·σ_{j+2}]` with `c = ¼` or `1`.
///
/// At `n = 4` the next-nearest pairs `(j, j+2)` and `(j+2, j+4)` coincide and
/// their terms are merged.
pub fn build_majumdar_ghosh(n: usize, norm: MgNormalization) -> Result<OperatorPoly> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::Geometry(format!("Majumdar–Ghosh chain needs an even length of at least 4, got {n}")));
    }
    let scale = match norm {
        MgNormalization::Spin => 0.25,
        MgNormalization::Pauli => 1.0,
    };
    let mut h = OperatorPoly::zero(n);
    for (range, w) in [(1usize, 1.0), (2, 0.5)] {
        for j in 0..n {
            let k = (j + range) % n;
            for p in [Pauli::X, Pauli::Y, Pauli::Z] {
                let s = PauliString::from_sites(n, &[(j, p), (k, p)])?;
                h.add_term(s, real(scale * w));
            }
        }
    }
    Ok(h)
}
