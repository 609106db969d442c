use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use qbound::models::{build_majumdar_ghosh, build_tfi_2d, MgNormalization};
use qbound::relax::{build_moment_matrix, select_moment_basis, IndexSet, MomentRegistry};
use qbound::sampler::{shot_rng, simulate_shots};
use qbound::sdp::{assemble, solve, Objective};
use qbound::{multiply, Pauli, PauliString};

fn long_string(n: usize, offset: usize) -> PauliString {
    let letters = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    let v: Vec<Pauli> = (0..n).map(|k| letters[(k * 7 + offset) % 4]).collect();
    PauliString::from_letters(&v)
}

fn pauli(c: &mut Criterion) {
    let (a, b) = (long_string(200, 1), long_string(200, 2));
    c.bench_function("multiply 200 qubits", |bench| bench.iter(|| multiply(black_box(&a), black_box(&b)).unwrap()));
}

fn moment_matrix(c: &mut Criterion) {
    let h = build_majumdar_ghosh(50, MgNormalization::Spin).unwrap();
    let mut reg = MomentRegistry::new(50);
    reg.register_poly(&h, IndexSet::Objective).unwrap();
    let basis = select_moment_basis(&reg, 200).unwrap().strings;
    let mut group = c.benchmark_group("relax");
    group.sample_size(10);
    group.bench_function("moment matrix 200x200, chain of 50", |bench| {
        bench.iter_batched(|| reg.clone(), |mut r| build_moment_matrix(&basis, &mut r).unwrap(), BatchSize::LargeInput)
    });
    group.finish();
}

fn interior_point(c: &mut Criterion) {
    let h = build_tfi_2d(2, 2, 1.0, 1.0).unwrap();
    let mut reg = MomentRegistry::new(4);
    reg.register_poly(&h, IndexSet::Objective).unwrap();
    let mut basis = vec![PauliString::identity(4)];
    basis.extend(select_moment_basis(&reg, 40).unwrap().strings.into_iter().skip(1));
    let mm = build_moment_matrix(&basis, &mut reg).unwrap();
    let p = assemble(&reg, Objective::Linear(&h), &[mm.block], &[], &[], 1.0).unwrap();
    let mut group = c.benchmark_group("sdp");
    group.sample_size(10);
    group.bench_function("2x2 grid ground energy", |bench| bench.iter(|| solve(black_box(&p)).unwrap()));
    group.finish();
}

fn sampling(c: &mut Criterion) {
    c.bench_function("one million shots", |bench| {
        bench.iter(|| simulate_shots(black_box(0.3), 1_000_000, &mut shot_rng(7, 0, 0)))
    });
}

criterion_group!(benches, pauli, moment_matrix, interior_point, sampling);
criterion_main!(benches);
