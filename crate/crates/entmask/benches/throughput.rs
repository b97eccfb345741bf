//! Throughput comparison of the data-parallel execution policy against
//! the sequential fallback on the three heavy pipeline stages: joint
//! matrix quadrature, equal-period witness scans, and coincidence
//! simulation.
//!
//! Run with `cargo bench -p entmask`. Building with
//! `--no-default-features` removes the thread pool, in which case both
//! policies measure the sequential path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use entmask::{
    build_detection_model, mask_joint_matrix_with_exec, scan_equal_periods_with_exec,
    simulate_counts_with_exec, Domain, Exec, MaskSpec, OpticalSetup, SimConfig, SincTreatment,
    SourceParams, DEFAULT_SUPPORT_SIGMAS,
};
use std::hint::black_box;

fn reference_model() -> entmask::DetectionModel {
    build_detection_model(
        &SourceParams::reference(),
        &OpticalSetup::reference(),
        SincTreatment::GaussianVarianceMatch,
    )
    .expect("reference parameters are valid")
}

const POLICIES: [(&str, Exec); 2] = [("auto", Exec::Auto), ("sequential", Exec::Sequential)];

fn bench_joint_matrix(c: &mut Criterion) {
    let model = reference_model();
    let spec = MaskSpec::new(5, 2.4).expect("valid mask");
    let mut group = c.benchmark_group("joint_matrix_d5");
    group.sample_size(20);
    for (name, exec) in POLICIES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| {
                mask_joint_matrix_with_exec(
                    black_box(&model),
                    Domain::Ip,
                    &spec,
                    &spec,
                    1e-8,
                    DEFAULT_SUPPORT_SIGMAS,
                    exec,
                )
                .expect("quadrature converges")
            })
        });
    }
    group.finish();
}

fn bench_equal_period_scan(c: &mut Criterion) {
    let model = reference_model();
    let ds = [2usize, 3];
    let ts = [0.96, 1.92, 2.88];
    let mut group = c.benchmark_group("equal_period_scan_2x3");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| {
                scan_equal_periods_with_exec(black_box(&model), &ds, &ts, 1e-6, exec)
                    .expect("scan completes")
            })
        });
    }
    group.finish();
}

fn bench_simulate(c: &mut Criterion) {
    let model = reference_model();
    let sim = SimConfig::new(20_000, 7);
    let mut group = c.benchmark_group("simulate_d3_20k");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| {
                simulate_counts_with_exec(black_box(&model), 3, 3.36, 2.16, &sim, exec)
                    .expect("simulation completes")
            })
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_joint_matrix,
    bench_equal_period_scan,
    bench_simulate
);
criterion_main!(benches);
