use criterion::{criterion_group, criterion_main, Criterion};
use schottky_core::geom::ModelVariant;
use schottky_core::numlin::{lie_closure, ComplexMatrix, Tolerances, C64};
use schottky_core::satake::classify_all;
use schottky_core::schottky::{build_group, run_certificate};
use std::hint::black_box;

fn bench_classify(c: &mut Criterion) {
    c.bench_function("classify_max_rank_6", |b| {
        b.iter(|| black_box(classify_all(black_box(6)).unwrap().len()))
    });
}

fn bench_certify(c: &mut Criterion) {
    let tol = Tolerances::default();
    let group = build_group(ModelVariant::ProjOdd(1), 2, 7, None, 1e-3, &tol).unwrap();
    c.bench_function("certify_p3_rank2_200_samples", |b| {
        b.iter(|| {
            let cert = run_certificate(black_box(&group), 200, 3, &tol).unwrap();
            black_box(cert.margin_achieved)
        })
    });
}

fn bench_lie_closure(c: &mut Criterion) {
    let tol = Tolerances::default();
    let gens: Vec<ComplexMatrix> = (0..3)
        .map(|k| {
            ComplexMatrix::from_fn(4, 4, |i, j| {
                C64::new(
                    ((i * 5 + j * 3 + k * 7 + 1) as f64 * 0.317).sin(),
                    ((i + 2 * j + 3 * k) as f64 * 0.733).cos() * 0.5,
                )
            })
        })
        .collect();
    c.bench_function("lie_closure_sl4_three_generators", |b| {
        b.iter(|| black_box(lie_closure(black_box(&gens), &tol).unwrap().len()))
    });
}

criterion_group!(benches, bench_classify, bench_certify, bench_lie_closure);
criterion_main!(benches);
