//! From symbolic moments to a [`ConicProblem`].

use num_complex::Complex64;

use super::{ConicProblem, LinearRow, PsdBlock};
use crate::confidence::IntervalConstraint;
use crate::error::{Error, Result};
use crate::pauli::{OperatorPoly, Pauli, PauliString};
use crate::relax::{HermitianBlock, LinearForm, LinearMomentConstraint, MomentId, MomentRegistry, Relation};

/// Truncated purity `(1/d) Σ_{γ∈I_o} ⟨P_γ⟩²`, the identity contributing `1/d`.
#[derive(Clone, Debug, PartialEq)]
pub struct PuritySpec {
    pub moments: Vec<MomentId>,
    pub dim: f64,
}

impl PuritySpec {
    pub fn evaluate(&self, moment: impl Fn(MomentId) -> f64) -> f64 {
        (1.0 + self.moments.iter().map(|&m| moment(m).powi(2)).sum::<f64>()) / self.dim
    }
}

/// Truncated-purity objective over registered strings on `2^n` levels.
pub fn purity_epigraph(reg: &MomentRegistry, strings: &[PauliString]) -> Result<PuritySpec> {
    let n = reg.num_qubits();
    if n >= 60 {
        return Err(Error::TooLarge(format!("purity normalization for {n} qubits")));
    }
    let mut moments = Vec::new();
    for s in strings {
        let id = reg.require(s)?;
        if !id.is_identity() && !moments.contains(&id) {
            moments.push(id);
        }
    }
    Ok(PuritySpec { moments, dim: (1u64 << n) as f64 })
}

pub enum Objective<'a> {
    Linear(&'a OperatorPoly),
    Purity(&'a PuritySpec),
}

fn var(id: MomentId) -> usize {
    id.0 as usize - 1
}

/// Assembles the relaxed problem. Rows touching a single moment become box
/// bounds; `confidence` is recorded only when `intervals` is non-empty.
pub fn assemble(
    reg: &MomentRegistry,
    objective: Objective<'_>,
    blocks: &[HermitianBlock],
    linear: &[LinearMomentConstraint],
    intervals: &[IntervalConstraint],
    confidence: f64,
) -> Result<ConicProblem> {
    let m = reg.num_variables();
    let mut p = ConicProblem {
        num_vars: m,
        var_moments: (1..=m).map(|i| Some(MomentId(i as u32))).collect(),
        conjugation_odd: reg.strings()[1..]
            .iter()
            .map(|s| s.letters().filter(|&l| l == Pauli::Y).count() % 2 == 1)
            .collect(),
        objective: vec![0.0; m],
        offset: 0.0,
        lower: vec![-1.0; m],
        upper: vec![1.0; m],
        rows: Vec::new(),
        blocks: Vec::new(),
        confidence: if intervals.is_empty() { 1.0 } else { confidence },
        lower_only: false,
    };
    let check = |id: MomentId| -> Result<usize> {
        if id.index() >= reg.len() {
            return Err(Error::Unregistered(id.to_string()));
        }
        Ok(id.index())
    };

    match objective {
        Objective::Linear(o) => {
            if o.num_qubits() != reg.num_qubits() {
                return Err(Error::Shape("objective acts on a different number of qubits".into()));
            }
            if !o.is_hermitian(1e-12) {
                return Err(Error::NonHermitian("objective has non-real coefficients".into()));
            }
            let form = reg.linear_form(o)?;
            p.offset = form.constant;
            for (id, c) in form.coeffs {
                p.objective[var(id)] += c;
            }
        }
        Objective::Purity(spec) => {
            p.lower_only = true;
            let k = spec.moments.len();
            p.offset = 1.0 / spec.dim;
            if k > 0 {
                let t = p.num_vars;
                p.num_vars += 1;
                p.var_moments.push(None);
                p.conjugation_odd.push(false);
                p.objective.push(1.0 / spec.dim);
                p.lower.push(0.0);
                p.upper.push(k as f64);
                let one = Complex64::new(1.0, 0.0);
                let mut terms = vec![(t, vec![(0, 0, one)])];
                for (j, &id) in spec.moments.iter().enumerate() {
                    check(id)?;
                    if id.is_identity() {
                        return Err(Error::Config("identity listed as a purity moment".into()));
                    }
                    terms.push((var(id), vec![(0, j + 1, one), (j + 1, 0, one)]));
                }
                p.blocks.push(PsdBlock {
                    dim: k + 1,
                    label: "purity".into(),
                    constant: (1..=k).map(|j| (j, j, one)).collect(),
                    terms,
                });
            }
        }
    }

    for b in blocks {
        let mut constant = b.constant.clone();
        let mut terms = Vec::with_capacity(b.terms.len());
        for (id, e) in &b.terms {
            check(*id)?;
            if id.is_identity() {
                constant.extend_from_slice(e);
            } else {
                terms.push((var(*id), e.clone()));
            }
        }
        p.blocks.push(PsdBlock { dim: b.dim, label: b.label.clone(), constant, terms });
    }

    for (k, c) in linear.iter().enumerate() {
        for &(id, _) in &c.coeffs {
            check(id)?;
        }
        let form = LinearForm { constant: -c.rhs, coeffs: c.coeffs.clone() };
        let (lo, hi) = match c.relation {
            Relation::Eq => (0.0, 0.0),
            Relation::Le => (f64::NEG_INFINITY, 0.0),
            Relation::Ge => (0.0, f64::INFINITY),
        };
        push_row(&mut p, &form, lo, hi, format!("lin[{k}]"))?;
    }

    for (k, iv) in intervals.iter().enumerate() {
        let form = reg.linear_form(&iv.observable)?;
        push_row(&mut p, &form, iv.lo, iv.hi, format!("band[{k}]"))?;
    }
    Ok(p)
}

/// Adds `lo ≤ form ≤ hi`, folding single-moment rows into the box.
fn push_row(p: &mut ConicProblem, form: &LinearForm, lo: f64, hi: f64, label: String) -> Result<()> {
    let (lo, hi) = (lo - form.constant, hi - form.constant);
    let mut coeffs: Vec<(usize, f64)> = Vec::with_capacity(form.coeffs.len());
    for &(id, a) in &form.coeffs {
        if id.is_identity() {
            return Err(Error::Numerical("identity inside a linear form".into()));
        }
        match coeffs.iter_mut().find(|(i, _)| *i == var(id)) {
            Some(t) => t.1 += a,
            None => coeffs.push((var(id), a)),
        }
    }
    coeffs.retain(|t| t.1 != 0.0);
    match coeffs.as_slice() {
        [] => {
            if lo > 1e-12 || hi < -1e-12 {
                return Err(Error::Domain(format!("constant row `{label}` is violated")));
            }
        }
        &[(i, a)] => {
            let (mut l, mut u) = (lo / a, hi / a);
            if a < 0.0 {
                std::mem::swap(&mut l, &mut u);
            }
            p.lower[i] = p.lower[i].max(l);
            p.upper[i] = p.upper[i].min(u);
        }
        _ => p.rows.push(LinearRow { coeffs, lo, hi, label }),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relax::IndexSet;

    fn reg_with(n: usize, strings: &[&str]) -> MomentRegistry {
        let mut reg = MomentRegistry::new(n);
        for s in strings {
            reg.register(&PauliString::parse_sparse(s, n).unwrap(), IndexSet::Objective).unwrap();
        }
        reg
    }

    fn poly(n: usize, terms: &[(&str, f64)]) -> OperatorPoly {
        OperatorPoly::from_real_terms(n, terms.iter().map(|(s, c)| (*c, PauliString::parse_sparse(s, n).unwrap())))
            .unwrap()
    }

    #[test]
    fn bands_fold_into_box() {
        let reg = reg_with(1, &["Z1"]);
        let o = poly(1, &[("Z1", 1.0)]);
        let iv = IntervalConstraint::new(o.clone(), 0.3, 0.05);
        let p = assemble(&reg, Objective::Linear(&o), &[], &[], &[iv], 0.997).unwrap();
        assert!(p.rows.is_empty());
        assert!((p.lower[0] - 0.25).abs() < 1e-15 && (p.upper[0] - 0.35).abs() < 1e-15);
        assert_eq!(p.confidence, 0.997);
    }

    #[test]
    fn identity_goes_to_offset() {
        let reg = reg_with(2, &["Z1", "X2"]);
        let o = poly(2, &[("I", 0.5), ("Z1", 2.0), ("X2", -1.0)]);
        let p = assemble(&reg, Objective::Linear(&o), &[], &[], &[], 0.9).unwrap();
        assert_eq!(p.offset, 0.5);
        assert_eq!(p.confidence, 1.0);
        assert_eq!(p.objective.iter().filter(|&&c| c != 0.0).count(), 2);
    }

    #[test]
    fn unregistered_and_complex_objectives() {
        let reg = reg_with(2, &["Z1"]);
        let o = poly(2, &[("X2", 1.0)]);
        assert!(matches!(assemble(&reg, Objective::Linear(&o), &[], &[], &[], 1.0), Err(Error::Unregistered(_))));
        let c = OperatorPoly::from_string(PauliString::parse_sparse("Z1", 2).unwrap(), Complex64::new(0.0, 1.0));
        assert!(assemble(&reg, Objective::Linear(&c), &[], &[], &[], 1.0).is_err());
    }

    #[test]
    fn purity_block_shape() {
        let reg = reg_with(1, &["X1", "Y1", "Z1"]);
        let strings: Vec<_> =
            ["I", "X1", "Y1", "Z1"].iter().map(|s| PauliString::parse_sparse(s, 1).unwrap()).collect();
        let spec = purity_epigraph(&reg, &strings).unwrap();
        assert_eq!(spec.evaluate(|_| 0.0), 0.5);
        let p = assemble(&reg, Objective::Purity(&spec), &[], &[], &[], 1.0).unwrap();
        assert!(p.lower_only);
        assert_eq!(p.num_vars, 4);
        assert_eq!(p.blocks[0].dim, 4);
    }
}
