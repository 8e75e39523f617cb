use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sgt_bench::workloads;
use sgt_core::spectral::Symbol;
use sgt_core::*;

fn perron(c: &mut Criterion) {
    let mut group = c.benchmark_group("critical_exponent");
    for (name, g) in workloads() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &g, |b, g| {
            b.iter(|| critical_exponent(black_box(g)).unwrap())
        });
    }
    group.finish();
}

fn tree_measures(c: &mut Criterion) {
    let mut group = c.benchmark_group("ps_measure_tree");
    group.sample_size(10);
    for (name, g) in workloads() {
        for method in [TreeMethod::Perron, TreeMethod::Poincare] {
            let id = BenchmarkId::new(format!("{method:?}"), name);
            group.bench_with_input(id, &g, |b, g| {
                b.iter(|| ps_measure_tree(g, VertexId(0), black_box(3), method).unwrap())
            });
        }
    }
    group.finish();
}

fn pullback(c: &mut Criterion) {
    let mut group = c.benchmark_group("pullback_measure");
    group.sample_size(10);
    for (name, g) in workloads() {
        let p = canonical_presentation(&g).unwrap();
        for method in [
            BoundaryMethod::GeodesicClassify,
            BoundaryMethod::RestrictedPoincare,
        ] {
            let id = BenchmarkId::new(format!("{method:?}"), name);
            group.bench_with_input(id, &p, |b, p| {
                b.iter(|| pullback_measure(p, black_box(3), method).unwrap())
            });
        }
    }
    group.finish();
}

fn fingerprints(c: &mut Criterion) {
    let mut group = c.benchmark_group("fingerprint_set");
    group.sample_size(10);
    for (name, g) in workloads()
        .into_iter()
        .filter(|(_, g)| g.vertex_count() > 1)
    {
        group.bench_with_input(BenchmarkId::from_parameter(name), &g, |b, g| {
            b.iter(|| fingerprint_set(g, black_box(3), usize::MAX).unwrap())
        });
    }
    group.finish();
}

fn zeta(c: &mut Criterion) {
    let theta = corpus::theta();
    let nu = pullback_measure(
        &canonical_presentation(&theta).unwrap(),
        3,
        BoundaryMethod::GeodesicClassify,
    )
    .unwrap();
    let symbol: Symbol = "0.5*cyl:1,2-cyl:-2+1".parse().unwrap();
    c.bench_function("zeta_eval/theta", |b| {
        b.iter(|| zeta_eval(&symbol, &nu, black_box(-2.0), 25).unwrap())
    });
    let series = ZetaSeries::one(3, 25);
    c.bench_function("zeta_one_grid/g3", |b| {
        b.iter(|| {
            (0..=25)
                .map(|k| series.eval(-3.0 + 0.1 * k as f64).unwrap().value)
                .sum::<f64>()
        })
    });
}

criterion_group!(benches, perron, tree_measures, pullback, fingerprints, zeta);
criterion_main!(benches);
