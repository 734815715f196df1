use criterion::{criterion_group, criterion_main, Criterion};
use echo_core::bloch::simulate_sequence;
use echo_core::experiment::{bin_areas, bin_times, build_fig1_sequence};
use echo_core::pathways::{enumerate_pathways, Relaxation};
use std::hint::black_box;

fn simulate(c: &mut Criterion) {
    let (p, spec) = echo_bench::fixture();
    let seq = build_fig1_sequence(&p).unwrap();
    let bins = bin_times(&p).unwrap();
    let window = (bins[0] - 80.0, bins[2] + 80.0);

    c.bench_function("simulate_fig1_window", |b| {
        b.iter(|| simulate_sequence(black_box(&seq), &spec, window, 1.0).unwrap())
    });
    c.bench_function("bin_areas", |b| b.iter(|| bin_areas(black_box(&p), &spec).unwrap()));
}

fn pathways(c: &mut Criterion) {
    let (p, spec) = echo_bench::fixture();
    let seq = build_fig1_sequence(&p).unwrap();
    let relax = Relaxation::from(&spec);
    c.bench_function("enumerate_pathways_5", |b| {
        b.iter(|| enumerate_pathways(black_box(&seq), relax).unwrap())
    });
}

criterion_group!(benches, simulate, pathways);
criterion_main!(benches);
