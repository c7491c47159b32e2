use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use soliton_lab::chart::{riemann, ChartPoint};
use soliton_lab::decay::{measure_decay, DecayQuantity};
use soliton_lab::levelset::{frame_at, FdOptions, GeometricField, Stencil};
use soliton_lab::models::{bryant_integrate, bryant_model, cigar_cross_line_model, SolitonModel};
use soliton_lab::verify::{evolution_rows, IdentityId, VerifyOptions};

fn curvature(c: &mut Criterion) {
    let product = cigar_cross_line_model();
    let bryant = bryant_model(bryant_integrate(200.0, 1e-10).unwrap());
    let p = ChartPoint::new(vec![0.8, -0.4, 0.3]);
    let q = ChartPoint::new(vec![10.0, 1.2, 0.5]);
    c.bench_function("riemann/cigarxr", |b| {
        b.iter(|| riemann(&product.metric_jet(black_box(&p), 2).unwrap()).unwrap())
    });
    c.bench_function("riemann/bryant", |b| {
        b.iter(|| riemann(&bryant.metric_jet(black_box(&q), 2).unwrap()).unwrap())
    });
    c.bench_function("frame_at/cigarxr", |b| {
        b.iter(|| frame_at(&product, black_box(&p)).unwrap())
    });
    c.bench_function("frame_at/bryant", |b| {
        b.iter(|| frame_at(&bryant, black_box(&q)).unwrap())
    });
}

fn level_sets(c: &mut Criterion) {
    let product = cigar_cross_line_model();
    let p = ChartPoint::new(vec![0.8, -0.4, 0.3]);
    c.bench_function("stencil/lambda", |b| {
        b.iter(|| {
            let s = Stencil::new(&product, black_box(&p), FdOptions::with_step(1e-3)).unwrap();
            s.sample(&GeometricField::Lambda).unwrap()
        })
    });
    let opts = VerifyOptions::default();
    let mut group = c.benchmark_group("evolution_rows");
    group.sample_size(20);
    for id in [IdentityId::EvoH, IdentityId::Prop2, IdentityId::Prop3] {
        group.bench_function(id.as_str(), |b| {
            b.iter(|| evolution_rows(&product, black_box(&p), &[id], &opts))
        });
    }
    group.finish();
}

fn bryant(c: &mut Criterion) {
    let mut group = c.benchmark_group("bryant");
    group.sample_size(20);
    group.bench_function("integrate/1e4", |b| {
        b.iter(|| bryant_integrate(black_box(1e4), 1e-10).unwrap())
    });
    let model = bryant_model(bryant_integrate(1.1e4, 1e-10).unwrap());
    group.bench_function("decay/R", |b| {
        b.iter(|| measure_decay(&model, DecayQuantity::Scalar, (1e2, 1e4), 32).unwrap())
    });
    group.finish();
}

criterion_group!(benches, curvature, level_sets, bryant);
criterion_main!(benches);
