use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use meanfield::hermitian::pauli;
use meanfield::lattice::{Interaction, LocalObservable, Volume};
use meanfield::ncpoly::NcPolynomial;
use meanfield::thermo::{legendre_transform, pressure_surface, TiltGrid, XyGrid};
use meanfield::tilted::Path;
use meanfield::varprinciple::product_state_solve;
use meanfield::Execution;

const MODES: [(&str, Execution); 2] = [
    ("serial", Execution::Serial),
    ("parallel", Execution::Parallel),
];

/// Heisenberg-coupled chain with a transverse field; dense path throughout.
fn chain_model() -> (Interaction, LocalObservable, LocalObservable) {
    let coupling = LocalObservable::sum(&[
        LocalObservable::pauli("xx", -0.3, 1).unwrap(),
        LocalObservable::pauli("yy", -0.3, 1).unwrap(),
        LocalObservable::pauli("zz", -0.5, 1).unwrap(),
    ])
    .unwrap();
    let phi = Interaction::new(
        2,
        1,
        vec![coupling, LocalObservable::pauli("x", -0.4, 1).unwrap()],
    )
    .unwrap();
    (
        phi,
        LocalObservable::pauli("z", 1.0, 1).unwrap(),
        LocalObservable::pauli("x", 1.0, 1).unwrap(),
    )
}

fn benches(c: &mut Criterion) {
    let (phi, x, y) = chain_model();
    let volumes: Vec<Volume> = [4, 6, 8]
        .into_iter()
        .map(|n| Volume::chain(n).unwrap())
        .collect();
    let tilt = TiltGrid::square(9);

    let mut group = c.benchmark_group("pressure_surface");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                pressure_surface(&phi, &x, &y, black_box(&tilt), &volumes, Path::Dense, exec)
                    .unwrap()
            })
        });
    }
    group.finish();

    let ps = pressure_surface(
        &phi,
        &x,
        &y,
        &TiltGrid::default(),
        &volumes,
        Path::Dense,
        Execution::Parallel,
    )
    .unwrap();
    let xy = XyGrid::default();
    let mut group = c.benchmark_group("legendre_transform");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| legendre_transform(black_box(&ps), &xy, exec).unwrap())
        });
    }
    group.finish();

    let d = LocalObservable::onsite(pauli::x() * meanfield::C64::new(-0.4, 0.0), 1).unwrap();
    let g = NcPolynomial::from_real_terms(&[("xx", 0.8), ("xy", 0.2), ("yx", 0.2)]).unwrap();
    let mut group = c.benchmark_group("product_state_solve");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| product_state_solve(&d, black_box(&x), &y, &g, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(parallel_vs_serial, benches);
criterion_main!(parallel_vs_serial);
