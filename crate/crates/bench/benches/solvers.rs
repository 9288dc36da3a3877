use std::hint::black_box;

use bsi_bench::convolution_problem;
use bsi_core::jmap::iterate;
use bsi_core::{solve_jmap, solve_vba, HyperParams, Init, JmapConfig, Separability, VbaConfig};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn hyper() -> HyperParams {
    HyperParams {
        alpha_eps: 3.0,
        beta_eps: 0.02,
        alpha_f: 0.5,
        beta_f: 0.05,
        ..HyperParams::default()
    }
}

fn jmap_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("jmap_sweep");
    let hyper = hyper();
    for size in [32, 64, 128] {
        for indirect in [false, true] {
            let p = convolution_problem(size, indirect, 1);
            let state = bsi_core::jmap::initial_state(&p, &hyper, &Init::LeastSquares).unwrap();
            let label = if indirect { "indirect" } else { "direct" };
            group.bench_with_input(BenchmarkId::new(label, size), &p, |b, p| {
                b.iter(|| iterate(black_box(p), &hyper, &state).unwrap())
            });
        }
    }
    group.finish();
}

fn solvers(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_128");
    group.sample_size(20);
    let hyper = hyper();
    let p = convolution_problem(128, false, 2);
    let capped = |max_iter| JmapConfig {
        max_iter,
        ..JmapConfig::default()
    };
    group.bench_function("jmap", |b| b.iter(|| solve_jmap(black_box(&p), &hyper, &capped(50)).unwrap()));
    for (name, separability) in [("vba_partial", Separability::Partial), ("vba_full", Separability::Full)] {
        let config = VbaConfig {
            max_iter: 50,
            separability,
            ..VbaConfig::default()
        };
        group.bench_function(name, |b| b.iter(|| solve_vba(black_box(&p), &hyper, &config).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, jmap_sweep, solvers);
criterion_main!(benches);
