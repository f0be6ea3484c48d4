use std::f64::consts::FRAC_PI_4;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use ecdwit_core::families::{cat_column_points, fock_points, generic_points};
use ecdwit_core::fock::displacement;
use ecdwit_core::noise::{apply_loss, LossChannel};
use ecdwit_core::optimizer::grad_with;
use ecdwit_core::phase_space::{negativity_volume, GridConfig};
use ecdwit_core::shot::{sample, Layout, MeasurementPlan};
use ecdwit_core::witness::{build_with, certify_exact, CharFnEvaluator};
use ecdwit_core::{make_state, StateSpec, C64};

fn kernels(c: &mut Criterion) {
    let beta = C64::new(2.0, 0.0);
    let cat = make_state(&StateSpec::Cat2 { beta }, None).unwrap();
    let bell = make_state(&StateSpec::FockBell { theta: FRAC_PI_4 }, None).unwrap();
    let one = make_state(&StateSpec::Fock { n: vec![1] }, None).unwrap();

    c.bench_function("displacement d=40", |b| {
        b.iter(|| displacement(black_box(40), black_box(C64::new(0.7, -0.3))))
    });

    let eval = CharFnEvaluator::new(&cat);
    let pts4 = cat_column_points(beta, 2).unwrap();
    let pts16 = cat_column_points(beta, 8).unwrap();
    c.bench_function("cat C2 N=4", |b| {
        b.iter(|| build_with(&eval, black_box(&pts4)).unwrap())
    });
    c.bench_function("cat C2 N=16", |b| {
        b.iter(|| build_with(&eval, black_box(&pts16)).unwrap())
    });
    c.bench_function("cat gradient N=16", |b| {
        b.iter(|| grad_with(&eval, black_box(&pts16)).unwrap())
    });

    let ring = generic_points(&bell, 16, true).unwrap();
    c.bench_function("bell certify N=16", |b| {
        b.iter(|| certify_exact(&bell, black_box(&ring)).unwrap())
    });

    let loss = LossChannel::uniform(0.2, 2).unwrap();
    c.bench_function("cat loss", |b| {
        b.iter(|| apply_loss(black_box(&cat), &loss).unwrap())
    });

    c.bench_function("N_V |1> default grid", |b| {
        b.iter(|| negativity_volume(black_box(&one), &GridConfig::default()).unwrap())
    });

    let plan = MeasurementPlan::for_points(
        &fock_points(FRAC_PI_4),
        Layout::Local,
        10_000,
        0.95,
        1,
        true,
    )
    .unwrap();
    c.bench_function("shot sampling bell", |b| {
        b.iter(|| sample(black_box(&plan), &bell).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = kernels
}
criterion_main!(benches);
