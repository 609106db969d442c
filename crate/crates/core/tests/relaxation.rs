use std::time::Instant;

use qbound::models::{build_single_qubit, build_tfi_2d};
use qbound::oracle::{all_strings, exact_ground_state};
use qbound::pauli::{OperatorPoly, PauliString};
use qbound::relax::{build_moment_matrix, generate_steady_constraints, IndexSet, MomentRegistry};
use qbound::sdp::{
    assemble, lagrangian_bound, solve, solve_both, solve_direction, Direction, Method, Objective, SolveHints,
    SolverSettings, SolverStatus,
};

fn full_basis_bound(rows: usize, cols: usize) -> (f64, f64) {
    let h = build_tfi_2d(rows, cols, 1.0, 1.0).unwrap();
    let n = rows * cols;
    let mut reg = MomentRegistry::new(n);
    reg.register_poly(&h, IndexSet::Objective).unwrap();
    let mm = build_moment_matrix(&all_strings(n), &mut reg).unwrap();
    let p = assemble(&reg, Objective::Linear(&h), &[mm.block], &[], &[], 1.0).unwrap();
    let r = solve(&p).unwrap();
    assert!(r.status.has_value(), "{:?}", r.status);
    eprintln!("{:?} iters {} primal {} lb {}", r.status, r.iterations, r.primal_value, r.value);
    (r.value, exact_ground_state(&h).unwrap().energy)
}

#[test]
fn tfi_two_qubits_full_basis_is_tight() {
    let (lb, e0) = full_basis_bound(1, 2);
    assert!((lb - e0).abs() < 1e-6, "{lb} vs {e0}");
    assert!(lb <= e0 + 1e-9);
}

#[test]
fn tfi_four_qubits_full_basis_is_tight() {
    let t = Instant::now();
    let (lb, e0) = full_basis_bound(2, 2);
    eprintln!("n=4 full basis: {:.2}s", t.elapsed().as_secs_f64());
    assert!((lb - e0).abs() < 1e-5, "{lb} vs {e0}");
}

#[test]
fn single_qubit_steady_state_pins_z() {
    let (up, down) = (1.56518e-4, 1.156518e-3);
    let model = build_single_qubit(1.0, up, down).unwrap();
    let z = PauliString::parse_sparse("Z1", 1).unwrap();
    let o = OperatorPoly::from_string(z.clone(), 1.0.into());
    let mut reg = MomentRegistry::new(1);
    reg.register(&z, IndexSet::Objective).unwrap();
    let cons = generate_steady_constraints(&model, &[z], 10, &mut reg).unwrap();
    let p = assemble(&reg, Objective::Linear(&o), &[], &cons, &[], 1.0).unwrap();
    let (lo, hi) = solve_both(&p, &SolverSettings::default()).unwrap();
    let want = (up - down) / (up + down);
    assert_eq!(lo.status, SolverStatus::Optimal);
    assert!((lo.value - want).abs() < 1e-6 && (hi.value - want).abs() < 1e-6, "{} {} {want}", lo.value, hi.value);
}

#[test]
fn conjugation_reduction_keeps_the_bound() {
    // Heisenberg pair plus a field: real Hamiltonian, full 16-string basis
    let n = 2;
    let h = OperatorPoly::from_real_terms(
        n,
        ["X1 X2", "Y1 Y2", "Z1 Z2", "Z1", "X2"]
            .iter()
            .zip([1.0, 1.0, 1.0, 0.3, -0.7])
            .map(|(s, c)| (c, PauliString::parse_sparse(s, n).unwrap())),
    )
    .unwrap();
    let mut reg = MomentRegistry::new(n);
    reg.register_poly(&h, IndexSet::Objective).unwrap();
    let mm = build_moment_matrix(&all_strings(n), &mut reg).unwrap();
    let p = assemble(&reg, Objective::Linear(&h), &[mm.block], &[], &[], 1.0).unwrap();
    assert!(p.conjugation_odd.iter().any(|&o| o));
    let mut plain = p.clone();
    plain.conjugation_odd.clear();
    let e0 = exact_ground_state(&h).unwrap().energy;
    for method in [Method::InteriorPoint, Method::Admm] {
        let settings = SolverSettings { method, ..SolverSettings::default() };
        let hints = SolveHints::default();
        let a = solve_direction(&p, Direction::Lower, &settings, &hints).unwrap();
        let b = solve_direction(&plain, Direction::Lower, &settings, &hints).unwrap();
        assert!(a.result.status.has_value() && b.result.status.has_value());
        assert!((a.result.value - e0).abs() < 1e-5, "{method:?}: {} vs {e0}", a.result.value);
        assert!((a.result.value - b.result.value).abs() < 1e-5);
        // the reported multipliers certify the original problem
        assert!((lagrangian_bound(&plain, &a.dual) - a.result.value).abs() < 1e-9);
    }
}
