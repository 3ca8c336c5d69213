use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use mfou::noise::gaussian_increments;
use mfou::spectral::{dft, idft};
use mfou::stats::{scale_grid, structure_function};
use mfou::theory::c2n_quadrature;
use mfou::Synthesizer;
use mfou_bench::{bench_config, sample_paths};

fn transforms(c: &mut Criterion) {
    let mut g = c.benchmark_group("dft_round_trip");
    g.sample_size(10);
    for log2 in [16u32, 20] {
        let n = 1usize << log2;
        let x = gaussian_increments(1, 0, 0, n, 1.0);
        g.throughput(Throughput::Elements(n as u64));
        g.bench_with_input(BenchmarkId::from_parameter(n), &x, |b, x| {
            b.iter(|| idft(&dft(black_box(x)).unwrap()).unwrap())
        });
    }
    g.finish();
}

fn synthesis(c: &mut Criterion) {
    let mut g = c.benchmark_group("bundle");
    g.sample_size(10);
    for log2 in [16u32, 20] {
        let cfg = bench_config(1 << log2, 1.0 / 3.0, 0.04);
        let synth = Synthesizer::new(&cfg).unwrap();
        g.throughput(Throughput::Elements(cfg.n_points as u64));
        g.bench_function(BenchmarkId::from_parameter(cfg.n_points), |b| {
            b.iter(|| synth.bundle(black_box(0)).unwrap())
        });
    }
    g.finish();
}

fn statistics(c: &mut Criterion) {
    let cfg = bench_config(1 << 18, 0.5, 0.02);
    let paths = sample_paths(&cfg, 2);
    let scales = scale_grid(cfg.dt(), cfg.dt(), cfg.t_large, 2).unwrap();
    let mut g = c.benchmark_group("structure_function");
    g.sample_size(10);
    g.bench_function("2x2^18_orders_2_3_4", |b| {
        b.iter(|| structure_function(black_box(&paths), &[2, 3, 4], &scales).unwrap())
    });
    g.finish();
}

fn quadrature(c: &mut Criterion) {
    let mut g = c.benchmark_group("c4_quadrature");
    g.sample_size(10);
    for h in [1.0 / 3.0, 0.5, 2.0 / 3.0] {
        g.bench_with_input(BenchmarkId::from_parameter(format!("H={h:.3}")), &h, |b, &h| {
            b.iter(|| c2n_quadrature(black_box(h), 0.04, 2, 1.0).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, transforms, synthesis, statistics, quadrature);
criterion_main!(benches);
