use num_complex::Complex64;

use super::*;
use crate::confidence::IntervalConstraint;
use crate::pauli::{OperatorPoly, PauliString};
use crate::relax::{IndexSet, MomentRegistry};

fn ps(s: &str, n: usize) -> PauliString {
    PauliString::parse_sparse(s, n).unwrap()
}

fn single(n: usize, s: &str) -> (MomentRegistry, OperatorPoly) {
    let mut reg = MomentRegistry::new(n);
    reg.register(&ps(s, n), IndexSet::Objective).unwrap();
    (reg, OperatorPoly::from_string(ps(s, n), 1.0.into()))
}

#[test]
fn box_only_bounds() {
    let (reg, o) = single(1, "Z1");
    let p = assemble(&reg, Objective::Linear(&o), &[], &[], &[], 1.0).unwrap();
    let (lo, hi) = solve_both(&p, &SolverSettings::default()).unwrap();
    assert_eq!((lo.value, hi.value), (-1.0, 1.0));
    assert_eq!(lo.status, SolverStatus::Optimal);
    assert_eq!(hi.direction, Direction::Upper);
}

#[test]
fn band_bounds() {
    let (reg, o) = single(1, "Z1");
    let iv = IntervalConstraint::new(o.clone(), 0.3, 0.05);
    let p = assemble(&reg, Objective::Linear(&o), &[], &[], &[iv], 0.997).unwrap();
    let (lo, hi) = solve_both(&p, &SolverSettings::default()).unwrap();
    assert!((lo.value - 0.25).abs() < 1e-15 && (hi.value - 0.35).abs() < 1e-15);
    assert_eq!(lo.confidence, 0.997);
}

#[test]
fn empty_objective() {
    let (reg, _) = single(2, "X1");
    let o = OperatorPoly::zero(2);
    let p = assemble(&reg, Objective::Linear(&o), &[], &[], &[], 1.0).unwrap();
    let r = solve(&p).unwrap();
    assert_eq!((r.value, r.status), (0.0, SolverStatus::Optimal));
}

#[test]
fn purity_single_qubit() {
    let mut reg = MomentRegistry::new(1);
    let strings: Vec<_> = ["X1", "Y1", "Z1"].iter().map(|s| ps(s, 1)).collect();
    for s in &strings {
        reg.register(s, IndexSet::Objective).unwrap();
    }
    let spec = purity_epigraph(&reg, &strings).unwrap();
    let p = assemble(&reg, Objective::Purity(&spec), &[], &[], &[], 1.0).unwrap();
    let r = solve(&p).unwrap();
    assert!((r.value - 0.5).abs() < 1e-7, "{}", r.value);
    assert!(r.value <= 0.5 + 1e-12);
    assert!(matches!(
        solve_direction(&p, Direction::Upper, &SolverSettings::default(), &SolveHints::default()),
        Err(Error::UnsupportedDirection(_))
    ));
}

#[test]
fn purity_with_band_is_pushed_up() {
    // ⟨Z⟩ ≥ 0.6 forces purity ≥ (1 + 0.36)/2
    let mut reg = MomentRegistry::new(1);
    let strings: Vec<_> = ["X1", "Y1", "Z1"].iter().map(|s| ps(s, 1)).collect();
    for s in &strings {
        reg.register(s, IndexSet::Objective).unwrap();
    }
    let spec = purity_epigraph(&reg, &strings).unwrap();
    let z = OperatorPoly::from_string(ps("Z1", 1), 1.0.into());
    let iv = IntervalConstraint::new(z, 0.8, 0.2);
    let p = assemble(&reg, Objective::Purity(&spec), &[], &[], &[iv], 0.95).unwrap();
    let r = solve(&p).unwrap();
    assert!((r.value - 0.68).abs() < 1e-7, "{}", r.value);
}

#[test]
fn objective_scaling() {
    let one = Complex64::new(1.0, 0.0);
    let p = ConicProblem {
        num_vars: 2,
        var_moments: vec![None, None],
        conjugation_odd: Vec::new(),
        objective: vec![0.3, -0.7],
        offset: 0.1,
        lower: vec![-1.0; 2],
        upper: vec![1.0; 2],
        rows: vec![],
        blocks: vec![PsdBlock {
            dim: 2,
            label: "b".into(),
            constant: vec![(0, 0, one), (1, 1, one)],
            terms: vec![(0, vec![(0, 0, one), (1, 1, -one)]), (1, vec![(0, 1, one), (1, 0, one)])],
        }],
        confidence: 1.0,
        lower_only: false,
    };
    let (a, b) = solve_both(&p, &SolverSettings::default()).unwrap();
    let (c, d) = solve_both(&p.scaled(3.5), &SolverSettings::default()).unwrap();
    let exact = (0.3f64.powi(2) + 0.7f64.powi(2)).sqrt();
    assert!((a.value - (0.1 - exact)).abs() < 1e-7 && (b.value - (0.1 + exact)).abs() < 1e-7);
    assert!((c.value - 3.5 * a.value).abs() < 1e-6 && (d.value - 3.5 * b.value).abs() < 1e-6);
}

#[test]
fn contradictory_rows_are_infeasible() {
    let p = ConicProblem {
        num_vars: 2,
        var_moments: vec![None, None],
        conjugation_odd: Vec::new(),
        objective: vec![1.0, 0.0],
        offset: 0.0,
        lower: vec![-1.0; 2],
        upper: vec![1.0; 2],
        rows: vec![
            LinearRow { coeffs: vec![(0, 1.0), (1, 1.0)], lo: 1.5, hi: 2.0, label: "a".into() },
            LinearRow { coeffs: vec![(0, 1.0), (1, -1.0)], lo: 0.9, hi: 1.0, label: "b".into() },
            LinearRow { coeffs: vec![(0, 1.0), (1, 2.0)], lo: f64::NEG_INFINITY, hi: 0.0, label: "c".into() },
        ],
        blocks: vec![],
        confidence: 1.0,
        lower_only: false,
    };
    let r = solve(&p).unwrap();
    assert_eq!(r.status, SolverStatus::Infeasible);
    assert!(r.bound().is_none());
}

#[test]
fn hints_only_raise() {
    let (reg, o) = single(1, "Z1");
    let p = assemble(&reg, Objective::Linear(&o), &[], &[], &[], 1.0).unwrap();
    let junk = DualPoint { blocks: vec![], rows: vec![("nope".into(), 5.0)] };
    let hints = SolveHints { duals: vec![&junk], admm: None };
    let s = solve_direction(&p, Direction::Lower, &SolverSettings::default(), &hints).unwrap();
    assert_eq!(s.result.value, -1.0);
}
