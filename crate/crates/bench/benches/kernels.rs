use criterion::{black_box, criterion_group, criterion_main, Criterion};
use gyroball::bodyframe::{self, BodyVariant};
use gyroball::elliptic::{self, Lattice};
use gyroball::neumann::{NeumannState, NeumannSystem};
use gyroball::ode::IntegratorConfig;
use gyroball::params::{Configuration, SystemParams};
use gyroball::{quadratures, voronec};
use num_complex::Complex64;

fn system() -> NeumannSystem {
    NeumannSystem::new(SystemParams {
        r1: 2.0,
        r2: 1.0,
        m: 1.5,
        a1: 0.6,
        c1: 0.9,
        a2: 0.3,
        c2: 0.2,
        k: 1.3,
        config: Configuration::Outer,
    })
    .unwrap()
}

fn state(sys: &NeumannSystem) -> NeumannState {
    sys.align_axis(&NeumannState { u: 1.1, v: 0.4, theta: 0.3, u1: 1.3, v1: -0.2, s: 0.5, tau: -0.3, n: 0.7 })
}

fn kernels(c: &mut Criterion) {
    let lat = Lattice::new(2.0, -0.7).unwrap();
    let z = Complex64::new(0.31, 0.17);
    c.bench_function("wp_pair", |b| b.iter(|| lat.wp_pair(black_box(z)).unwrap()));
    c.bench_function("addition_check", |b| {
        b.iter(|| elliptic::addition_check_on(&lat, black_box(z), Complex64::new(-0.2, 0.4)).unwrap())
    });

    let sys = system();
    let st = state(&sys);
    c.bench_function("eom_rhs", |b| b.iter(|| sys.eom_rhs(black_box(&st)).unwrap()));
    c.bench_function("reduce_state", |b| b.iter(|| quadratures::reduce_state(&sys, black_box(&st)).unwrap()));
    let (_, qd) = quadratures::reduce_state(&sys, &st).unwrap();
    c.bench_function("solve_xt", |b| b.iter(|| quadratures::solve_xt(&qd, st.u.cos(), st.tau.signum()).unwrap()));
    c.bench_function("simulate_neumann_t10", |b| {
        b.iter(|| sys.simulate(black_box(&st), 10.0, &IntegratorConfig::default()).unwrap())
    });

    let (q, _) = voronec::coords_of(&st, &sys.dc);
    c.bench_function("voronec_coeffs", |b| b.iter(|| voronec::constraint_coeffs(black_box(&q), &sys.dc).unwrap()));

    let inertia = sys.inertia();
    let body = sys.to_bodyframe(&st).unwrap();
    c.bench_function("measure_residual", |b| {
        b.iter(|| bodyframe::measure_residual(black_box(&body), &inertia, BodyVariant::Gyrostat).unwrap())
    });
}

criterion_group!(benches, kernels);
criterion_main!(benches);
