//! Moment relaxation compiler.
//!
//! Every Pauli expectation that appears anywhere (objective, constraints,
//! measured observables, positivity blocks) becomes a real variable in a
//! [`MomentRegistry`]. Positivity of the state is relaxed to positivity of
//! Hermitian blocks that are affine in those variables, stored as a constant
//! part plus one sparse coefficient matrix per moment.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::LindbladModel;
use crate::oracle::BasisAction;
use crate::pauli::{OperatorPoly, PauliString, Phase};

/// Index of a moment variable. Id 0 is always the identity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MomentId(pub u32);

impl MomentId {
    pub const IDENTITY: MomentId = MomentId(0);

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_identity(self) -> bool {
        self.0 == 0
    }
}

/// The role a moment plays in the relaxation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexSet {
    /// Appears in the objective.
    Objective,
    /// Appears in a positivity block.
    Positivity,
    /// Appears in a measured observable.
    Measured,
    /// Appears in a linear guarantee (steady state, symmetry, energy shell).
    Linear,
}

impl IndexSet {
    fn bit(self) -> u8 {
        match self {
            IndexSet::Objective => 1,
            IndexSet::Positivity => 2,
            IndexSet::Measured => 4,
            IndexSet::Linear => 8,
        }
    }

    pub const ALL: [IndexSet; 4] = [IndexSet::Objective, IndexSet::Positivity, IndexSet::Measured, IndexSet::Linear];
}

/// Bijection between Pauli strings and moment ids, with set membership and
/// occurrence counts.
#[derive(Clone, Debug)]
pub struct MomentRegistry {
    n: usize,
    strings: Vec<PauliString>,
    ids: HashMap<PauliString, MomentId>,
    sets: Vec<u8>,
    counts: Vec<u32>,
}

impl MomentRegistry {
    pub fn new(n: usize) -> Self {
        let id = PauliString::identity(n);
        let mut ids = HashMap::new();
        ids.insert(id.clone(), MomentId::IDENTITY);
        MomentRegistry { n, strings: vec![id], ids, sets: vec![0], counts: vec![0] }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    /// Number of registered strings, the identity included.
    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.len() <= 1
    }

    /// Number of free moments (the identity is pinned to 1).
    pub fn num_variables(&self) -> usize {
        self.strings.len() - 1
    }

    pub fn lookup(&self, s: &PauliString) -> Option<MomentId> {
        self.ids.get(s).copied()
    }

    pub fn require(&self, s: &PauliString) -> Result<MomentId> {
        self.lookup(s).ok_or_else(|| Error::Unregistered(s.to_string()))
    }

    pub fn string(&self, id: MomentId) -> &PauliString {
        &self.strings[id.index()]
    }

    /// Strings in registration order, identity first.
    pub fn strings(&self) -> &[PauliString] {
        &self.strings
    }

    pub fn occurrences(&self, id: MomentId) -> u32 {
        self.counts[id.index()]
    }

    pub fn in_set(&self, id: MomentId, set: IndexSet) -> bool {
        self.sets[id.index()] & set.bit() != 0
    }

    /// Ids in `set`, increasing.
    pub fn members(&self, set: IndexSet) -> Vec<MomentId> {
        (1..self.len() as u32).map(MomentId).filter(|&id| self.in_set(id, set)).collect()
    }

    fn insert(&mut self, s: &PauliString, set: IndexSet, count: bool) -> Result<MomentId> {
        if s.num_qubits() != self.n {
            return Err(Error::Shape(format!("{}-qubit string in a {}-qubit registry", s.num_qubits(), self.n)));
        }
        let id = match self.ids.get(s) {
            Some(&id) => id,
            None => {
                let id = MomentId(self.strings.len() as u32);
                self.strings.push(s.clone());
                self.ids.insert(s.clone(), id);
                self.sets.push(0);
                self.counts.push(0);
                id
            }
        };
        if !id.is_identity() {
            self.sets[id.index()] |= set.bit();
            if count {
                self.counts[id.index()] += 1;
            }
        }
        Ok(id)
    }

    /// Registers `s` in `set` and counts one occurrence.
    pub fn register(&mut self, s: &PauliString, set: IndexSet) -> Result<MomentId> {
        self.insert(s, set, true)
    }

    /// Registers `s` in `set` without touching its occurrence count.
    pub fn register_silent(&mut self, s: &PauliString, set: IndexSet) -> Result<MomentId> {
        self.insert(s, set, false)
    }

    /// Registers every string of `p`, one occurrence each.
    pub fn register_poly(&mut self, p: &OperatorPoly, set: IndexSet) -> Result<Vec<MomentId>> {
        p.strings().map(|s| self.register(s, set)).collect()
    }

    /// Real linear form of a Hermitian polynomial over registered moments.
    pub fn linear_form(&self, p: &OperatorPoly) -> Result<LinearForm> {
        if !p.is_hermitian(1e-10) {
            return Err(Error::NonHermitian(format!("{p:?}")));
        }
        let mut form = LinearForm::default();
        for (s, c) in p.real_terms() {
            let id = self.require(s)?;
            if id.is_identity() {
                form.constant += c;
            } else {
                form.coeffs.push((id, c));
            }
        }
        form.coeffs.sort_by_key(|t| t.0);
        Ok(form)
    }

    pub fn index_sets(&self) -> IndexSetSizes {
        IndexSetSizes {
            variables: self.num_variables(),
            objective: self.members(IndexSet::Objective).len(),
            positivity: self.members(IndexSet::Positivity).len(),
            measured: self.members(IndexSet::Measured).len(),
            linear: self.members(IndexSet::Linear).len(),
        }
    }

    pub fn to_json(&self) -> RegistryDump {
        RegistryDump {
            num_qubits: self.n,
            moments: (0..self.len())
                .map(|i| RegistryEntry {
                    id: i as u32,
                    string: self.strings[i].to_string(),
                    sets: IndexSet::ALL.into_iter().filter(|s| self.sets[i] & s.bit() != 0).collect(),
                    occurrences: self.counts[i],
                })
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexSetSizes {
    pub variables: usize,
    pub objective: usize,
    pub positivity: usize,
    pub measured: usize,
    pub linear: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegistryDump {
    pub num_qubits: usize,
    pub moments: Vec<RegistryEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub id: u32,
    pub string: String,
    pub sets: Vec<IndexSet>,
    pub occurrences: u32,
}

/// `constant + Σ c_α ⟨P_α⟩` with the identity folded into `constant`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearForm {
    pub constant: f64,
    pub coeffs: Vec<(MomentId, f64)>,
}

impl LinearForm {
    pub fn evaluate(&self, moment: impl Fn(MomentId) -> f64) -> f64 {
        self.constant + self.coeffs.iter().map(|&(id, c)| c * moment(id)).sum::<f64>()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn scale(&self, s: f64) -> LinearForm {
        LinearForm { constant: self.constant * s, coeffs: self.coeffs.iter().map(|&(id, c)| (id, c * s)).collect() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

/// `Σ c_α ⟨P_α⟩ (=, ≤, ≥) rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearMomentConstraint {
    pub coeffs: Vec<(MomentId, f64)>,
    pub rhs: f64,
    pub relation: Relation,
}

impl LinearMomentConstraint {
    /// `form (relation) 0`; `None` when `form` has no moment terms.
    pub fn from_form(form: &LinearForm, relation: Relation) -> Option<Self> {
        if form.is_constant() {
            return None;
        }
        Some(LinearMomentConstraint { coeffs: form.coeffs.clone(), rhs: -form.constant, relation })
    }

    pub fn lhs(&self, moment: impl Fn(MomentId) -> f64) -> f64 {
        self.coeffs.iter().map(|&(id, c)| c * moment(id)).sum()
    }

    /// Amount by which `moment` violates the constraint (0 when satisfied).
    pub fn violation(&self, moment: impl Fn(MomentId) -> f64) -> f64 {
        let r = self.lhs(moment) - self.rhs;
        match self.relation {
            Relation::Eq => r.abs(),
            Relation::Le => r.max(0.0),
            Relation::Ge => (-r).max(0.0),
        }
    }

    pub fn to_json(&self, reg: &MomentRegistry) -> ConstraintDump {
        ConstraintDump {
            terms: self.coeffs.iter().map(|&(id, c)| (reg.string(id).to_string(), c)).collect(),
            relation: self.relation,
            rhs: self.rhs,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstraintDump {
    pub terms: Vec<(String, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// Breadth-first steady-state guarantees `⟨L†(P)⟩ = 0`.
///
/// Starting from `seeds`, each dequeued string yields one constraint; every
/// string in its image is registered and, if new, enqueued in canonical
/// order. Generation stops after `budget` constraints or when the queue runs
/// dry. Strings with a vanishing image yield nothing.
pub fn generate_steady_constraints(
    model: &LindbladModel,
    seeds: &[PauliString],
    budget: usize,
    reg: &mut MomentRegistry,
) -> Result<Vec<LinearMomentConstraint>> {
    if budget < 1 {
        return Err(Error::Config("constraint budget must be at least 1".into()));
    }
    if seeds.is_empty() {
        return Err(Error::Config("steady-state generation needs seed strings".into()));
    }
    let mut seen: HashSet<PauliString> = HashSet::new();
    let mut queue = VecDeque::new();
    for s in seeds {
        if !s.is_identity() && seen.insert(s.clone()) {
            queue.push_back(s.clone());
        }
    }
    let mut out = Vec::new();
    while let Some(p) = queue.pop_front() {
        if out.len() >= budget {
            break;
        }
        let img = model.adjoint_apply(&p)?;
        let img = OperatorPoly::from_real_terms(img.num_qubits(), img.real_terms().map(|(s, c)| (c, s.clone())))?;
        if img.is_empty() {
            continue;
        }
        for s in img.strings() {
            reg.register(s, IndexSet::Linear)?;
            if !s.is_identity() && seen.insert(s.clone()) {
                queue.push_back(s.clone());
            }
        }
        let form = reg.linear_form(&img)?;
        match LinearMomentConstraint::from_form(&form, Relation::Eq) {
            Some(c) => out.push(c),
            None => return Err(Error::Numerical(format!("L†({p}) is a nonzero multiple of the identity"))),
        }
    }
    Ok(out)
}

/// Non-identity strings of `constraints` in order of first appearance.
pub fn generation_order(constraints: &[LinearMomentConstraint], reg: &MomentRegistry) -> Vec<PauliString> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for c in constraints {
        for &(id, _) in &c.coeffs {
            if seen.insert(id) {
                out.push(reg.string(id).clone());
            }
        }
    }
    out
}

/// Chosen moment-matrix basis.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisSelection {
    pub strings: Vec<PauliString>,
    /// Fewer strings were registered than requested.
    pub truncated: bool,
}

/// Identity plus the `size − 1` most frequently occurring registered
/// strings; ties go to the canonically smaller string.
pub fn select_moment_basis(reg: &MomentRegistry, size: usize) -> Result<BasisSelection> {
    if size < 1 {
        return Err(Error::Config("moment basis size must be at least 1".into()));
    }
    let mut cand: Vec<MomentId> = (1..reg.len() as u32).map(MomentId).collect();
    cand.sort_by(|&a, &b| reg.occurrences(b).cmp(&reg.occurrences(a)).then_with(|| reg.string(a).cmp(reg.string(b))));
    let truncated = cand.len() < size - 1;
    if truncated {
        log::warn!("requested a {size}-string basis but only {} strings are registered", cand.len() + 1);
    }
    let mut strings = vec![PauliString::identity(reg.num_qubits())];
    strings.extend(cand.into_iter().take(size - 1).map(|id| reg.string(id).clone()));
    Ok(BasisSelection { strings, truncated })
}

/// Sparse entries `(row, col, value)` of a Hermitian matrix, both triangles.
pub type SparseEntries = Vec<(usize, usize, Complex64)>;

/// Hermitian matrix `B + Σ_α A_α ⟨P_α⟩` that must be PSD.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianBlock {
    pub dim: usize,
    pub label: String,
    pub constant: SparseEntries,
    /// Coefficient matrices in order of first appearance (row-major scan).
    pub terms: Vec<(MomentId, SparseEntries)>,
}

impl HermitianBlock {
    pub fn evaluate(&self, moment: impl Fn(MomentId) -> f64) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.constant {
            m[(r, c)] += v;
        }
        for (id, ent) in &self.terms {
            let x = moment(*id);
            for &(r, c, v) in ent {
                m[(r, c)] += v * x;
            }
        }
        m
    }

    pub fn constant_matrix(&self) -> DMatrix<Complex64> {
        to_dense(self.dim, &self.constant)
    }

    pub fn coefficient_matrix(&self, id: MomentId) -> Option<DMatrix<Complex64>> {
        self.terms.iter().find(|(i, _)| *i == id).map(|(_, e)| to_dense(self.dim, e))
    }

    /// Whether every coefficient matrix is Hermitian.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        let herm = |e: &SparseEntries| {
            let d = to_dense(self.dim, e);
            (&d - d.adjoint()).iter().all(|v| v.norm() <= tol)
        };
        herm(&self.constant) && self.terms.iter().all(|(_, e)| herm(e))
    }
}

fn to_dense(dim: usize, e: &SparseEntries) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(dim, dim);
    for &(r, c, v) in e {
        m[(r, c)] += v;
    }
    m
}

/// Symbolic entry `phase · ⟨P⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MomentEntry {
    pub phase: Phase,
    pub id: MomentId,
}

/// Moment matrix over a basis of strings: entry `(r, c)` is `⟨P_r P_c⟩`.
#[derive(Clone, Debug)]
pub struct MomentMatrixSpec {
    pub basis: Vec<PauliString>,
    /// Row-major `N × N` symbolic entries.
    pub entries: Vec<MomentEntry>,
    pub block: HermitianBlock,
}

impl MomentMatrixSpec {
    pub fn size(&self) -> usize {
        self.basis.len()
    }

    pub fn entry(&self, r: usize, c: usize) -> MomentEntry {
        self.entries[r * self.size() + c]
    }

    /// Renders an entry as text, e.g. `"i<Y1 X2>"` or `"1"`.
    pub fn entry_text(&self, r: usize, c: usize, reg: &MomentRegistry) -> String {
        let e = self.entry(r, c);
        let pre = match e.phase.exponent() {
            0 => "",
            1 => "i",
            2 => "-",
            _ => "-i",
        };
        if e.id.is_identity() {
            match e.phase.exponent() {
                0 => "1".into(),
                2 => "-1".into(),
                _ => pre.into(),
            }
        } else {
            format!("{pre}<{}>", reg.string(e.id))
        }
    }
}

/// Builds `M_{rc} = ⟨P_r P_c⟩` and registers each product string.
pub fn build_moment_matrix(basis: &[PauliString], reg: &mut MomentRegistry) -> Result<MomentMatrixSpec> {
    let mut seen = HashSet::new();
    for s in basis {
        if s.num_qubits() != reg.num_qubits() {
            return Err(Error::Shape(format!(
                "{}-qubit basis string in a {}-qubit registry",
                s.num_qubits(),
                reg.num_qubits()
            )));
        }
        if !seen.insert(s) {
            return Err(Error::DuplicateBasis(s.to_string()));
        }
    }
    let n = basis.len();
    let mut entries = Vec::with_capacity(n * n);
    for r in basis {
        for c in basis {
            let p = r.mul_unchecked(c);
            let id = reg.register_silent(&p.string, IndexSet::Positivity)?;
            entries.push(MomentEntry { phase: p.phase, id });
        }
    }
    for r in 0..n {
        for c in 0..r {
            let (a, b) = (entries[r * n + c], entries[c * n + r]);
            if a.id != b.id || a.phase != b.phase.conj() {
                return Err(Error::Numerical(format!("moment matrix not Hermitian at ({r}, {c})")));
            }
        }
    }
    let mut constant = Vec::new();
    let mut order: Vec<MomentId> = Vec::new();
    let mut by_id: HashMap<MomentId, SparseEntries> = HashMap::new();
    for r in 0..n {
        for c in 0..n {
            let e = entries[r * n + c];
            let v = e.phase.to_complex();
            if e.id.is_identity() {
                constant.push((r, c, v));
            } else {
                by_id
                    .entry(e.id)
                    .or_insert_with(|| {
                        order.push(e.id);
                        Vec::new()
                    })
                    .push((r, c, v));
            }
        }
    }
    let terms = order
        .into_iter()
        .map(|id| {
            let e = by_id.remove(&id).unwrap_or_default();
            (id, e)
        })
        .collect();
    Ok(MomentMatrixSpec {
        basis: basis.to_vec(),
        entries,
        block: HermitianBlock { dim: n, label: "moment".into(), constant, terms },
    })
}

/// Largest site subset accepted for a reduced-density-matrix block.
pub const MAX_RDM_SITES: usize = 5;

/// `ρ_A = 2^{-k} Σ_Q ⟨Q⟩ Q` over all `4^k` strings supported on `sites`.
pub fn build_rdm_block(sites: &[usize], reg: &mut MomentRegistry) -> Result<HermitianBlock> {
    let n = reg.num_qubits();
    let mut sites = sites.to_vec();
    sites.sort_unstable();
    sites.dedup();
    if sites.is_empty() || sites.len() > MAX_RDM_SITES {
        return Err(Error::TooLarge(format!("reduced block on {} sites (allowed 1..={MAX_RDM_SITES})", sites.len())));
    }
    if let Some(&s) = sites.iter().find(|&&s| s >= n) {
        return Err(Error::Shape(format!("site {} outside {n} qubits", s + 1)));
    }
    let k = sites.len();
    let d = 1usize << k;
    let scale = 1.0 / d as f64;
    let mut constant = Vec::new();
    let mut terms = Vec::new();
    for local in crate::oracle::all_strings(k) {
        let act = BasisAction::new(&local);
        let ent: SparseEntries = (0..d).map(|b| (b ^ act.x, b, act.amp(b) * scale)).collect();
        let mut global = PauliString::identity(n);
        for (j, l) in local.sites() {
            global.set(sites[j], l);
        }
        if global.is_identity() {
            constant = ent;
        } else {
            let id = reg.register_silent(&global, IndexSet::Positivity)?;
            terms.push((id, ent));
        }
    }
    let label = format!("rdm[{}]", sites.iter().map(|s| (s + 1).to_string()).collect::<Vec<_>>().join(","));
    Ok(HermitianBlock { dim: d, label, constant, terms })
}

/// `⟨expr⟩ = 0` for a declared symmetry.
pub fn add_symmetry_constraint(expr: &OperatorPoly, reg: &mut MomentRegistry) -> Result<LinearMomentConstraint> {
    if !expr.is_hermitian(1e-12) {
        return Err(Error::NonHermitian("symmetry expression has complex coefficients".into()));
    }
    reg.register_poly(expr, IndexSet::Linear)?;
    let form = reg.linear_form(expr)?;
    LinearMomentConstraint::from_form(&form, Relation::Eq)
        .ok_or_else(|| Error::Config("symmetry expression has no moment terms".into()))
}

/// `lo ≤ ⟨H⟩ ≤ hi` as two inequalities.
pub fn energy_shell_constraints(
    h: &OperatorPoly,
    lo: f64,
    hi: f64,
    reg: &mut MomentRegistry,
) -> Result<[LinearMomentConstraint; 2]> {
    if !(lo <= hi) {
        return Err(Error::Domain(format!("empty energy shell [{lo}, {hi}]")));
    }
    if !h.is_hermitian(1e-12) {
        return Err(Error::NonHermitian("shell Hamiltonian".into()));
    }
    reg.register_poly(h, IndexSet::Linear)?;
    let form = reg.linear_form(h)?;
    let err = || Error::Config("energy-shell operator is a constant".into());
    let mut ge = LinearMomentConstraint::from_form(&form, Relation::Ge).ok_or_else(err)?;
    ge.rhs += lo;
    let mut le = LinearMomentConstraint::from_form(&form, Relation::Le).ok_or_else(err)?;
    le.rhs += hi;
    Ok([ge, le])
}

impl fmt::Display for MomentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m{}", self.0)
    }
}

/// Occurrence-ordered strings, most frequent first (for diagnostics).
pub fn frequency_table(reg: &MomentRegistry) -> BTreeMap<u32, Vec<String>> {
    let mut t: BTreeMap<u32, Vec<String>> = BTreeMap::new();
    for i in 1..reg.len() {
        let id = MomentId(i as u32);
        t.entry(reg.occurrences(id)).or_default().push(reg.string(id).to_string());
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::build_single_qubit;

    fn ps(s: &str, n: usize) -> PauliString {
        PauliString::parse_sparse(s, n).unwrap()
    }

    #[test]
    fn identity_is_pinned() {
        let mut reg = MomentRegistry::new(2);
        assert_eq!(reg.register(&PauliString::identity(2), IndexSet::Objective).unwrap(), MomentId::IDENTITY);
        assert_eq!(reg.num_variables(), 0);
        let id = reg.register(&ps("Z1", 2), IndexSet::Objective).unwrap();
        assert_eq!(id, MomentId(1));
        assert!(reg.in_set(id, IndexSet::Objective));
        assert!(!reg.in_set(id, IndexSet::Measured));
        assert!(reg.register(&ps("Z1", 3), IndexSet::Objective).is_err());
    }

    #[test]
    fn single_qubit_steady_constraint() {
        let (up, down) = (0.2, 0.9);
        let m = build_single_qubit(0.0, up, down).unwrap();
        let mut reg = MomentRegistry::new(1);
        let cs = generate_steady_constraints(&m, &[ps("Z1", 1)], 10, &mut reg).unwrap();
        assert_eq!(cs.len(), 1);
        let z = reg.require(&ps("Z1", 1)).unwrap();
        // up (1 - <Z>) - down (1 + <Z>) = 0
        assert_eq!(cs[0].coeffs, vec![(z, -(up + down))]);
        assert!((cs[0].rhs - (down - up)).abs() < 1e-15);
    }

    #[test]
    fn identity_seed_gives_nothing() {
        let m = build_single_qubit(1.0, 0.2, 0.3).unwrap();
        let mut reg = MomentRegistry::new(1);
        let cs = generate_steady_constraints(&m, &[PauliString::identity(1)], 10, &mut reg).unwrap();
        assert!(cs.is_empty());
        assert!(generate_steady_constraints(&m, &[ps("Z1", 1)], 0, &mut reg).is_err());
    }

    #[test]
    fn basis_ranking() {
        let mut reg = MomentRegistry::new(3);
        for _ in 0..10 {
            reg.register(&ps("Y2", 3), IndexSet::Linear).unwrap();
        }
        for _ in 0..2 {
            reg.register(&ps("X1", 3), IndexSet::Linear).unwrap();
        }
        reg.register(&ps("Z3", 3), IndexSet::Objective).unwrap();
        reg.register(&ps("Z1", 3), IndexSet::Objective).unwrap();
        let sel = select_moment_basis(&reg, 4).unwrap();
        let names: Vec<String> = sel.strings.iter().map(|s| s.to_string()).collect();
        assert_eq!(names, ["I", "Y2", "X1", "Z3"]);
        assert!(!sel.truncated);
        assert!(select_moment_basis(&reg, 9).unwrap().truncated);
    }

    #[test]
    fn duplicate_basis_is_rejected() {
        let mut reg = MomentRegistry::new(2);
        let b = vec![PauliString::identity(2), ps("Z1", 2), ps("Z1", 2)];
        assert!(matches!(build_moment_matrix(&b, &mut reg), Err(Error::DuplicateBasis(_))));
    }

    #[test]
    fn bloch_ball_block() {
        let mut reg = MomentRegistry::new(1);
        let b = build_rdm_block(&[0], &mut reg).unwrap();
        assert_eq!(b.dim, 2);
        assert_eq!(b.terms.len(), 3);
        let x = reg.require(&ps("X1", 1)).unwrap();
        let z = reg.require(&ps("Z1", 1)).unwrap();
        let at = |vx: f64, vz: f64| {
            b.evaluate(|id| {
                if id == x {
                    vx
                } else if id == z {
                    vz
                } else {
                    0.0
                }
            })
            .symmetric_eigenvalues()
            .min()
        };
        assert!(at(0.6, 0.8) > -1e-14);
        assert!(at(0.61, 0.8) < 0.0);
    }

    #[test]
    fn symmetry_and_shell() {
        let mut reg = MomentRegistry::new(4);
        let e = OperatorPoly::from_real_terms(4, [(1.0, ps("X1 X2", 4)), (-1.0, ps("X3 X4", 4))]).unwrap();
        let c = add_symmetry_constraint(&e, &mut reg).unwrap();
        assert_eq!(c.coeffs.len(), 2);
        assert_eq!(c.rhs, 0.0);
        let bad = OperatorPoly::from_string(ps("X1", 4), Complex64::new(0.0, 1.0));
        assert!(matches!(add_symmetry_constraint(&bad, &mut reg), Err(Error::NonHermitian(_))));
        let h = OperatorPoly::from_real_terms(4, [(1.0, ps("Z1", 4)), (0.5, PauliString::identity(4))]).unwrap();
        let [ge, le] = energy_shell_constraints(&h, -1.0, -0.5, &mut reg).unwrap();
        assert_eq!((ge.relation, ge.rhs), (Relation::Ge, -1.5));
        assert_eq!((le.relation, le.rhs), (Relation::Le, -1.0));
    }
}
