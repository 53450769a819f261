//! Rayon data-parallel kernels against the same kernels on one thread.
//!
//! With the default `parallel` feature each workload runs twice: on the global
//! rayon pool and inside a single-thread pool. Building with
//! `--no-default-features` compiles the sequential fallback and benchmarks it
//! under the id `sequential_fallback`.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use relboltz_core::cross_sections::{cutoff_measure, CutoffParams};
use relboltz_core::limit_harness::{component_sweep, ComponentKind, SampleSpec};
use relboltz_core::{MomentumVec, Position};

fn measure_workload() -> f64 {
    let p = MomentumVec::from_slice(&[1.5, -0.5, 0.25]).unwrap();
    let q = MomentumVec::from_slice(&[-1.0, 0.75, 0.5]).unwrap();
    let x = Position::from_slice(&[0.2, 0.1, -0.3]).unwrap();
    let params = CutoffParams { b: 0.1, a: 0.5, alpha: 1.0 };
    cutoff_measure(&x, &p, &q, 0.5, 2.0, &params, 200_000, 7).unwrap()
}

fn sweep_workload() -> f64 {
    let spec = SampleSpec { n_samples: 20_000, ..SampleSpec::default() };
    let sweep = component_sweep(ComponentKind::KernelDiff, &[4.0, 8.0, 16.0, 32.0], &spec).unwrap();
    sweep.values[0]
}

fn bench_backends(c: &mut Criterion) {
    let workloads: [(&str, fn() -> f64); 2] = [("cutoff_measure_200k", measure_workload), ("kernel_sweep_20k", sweep_workload)];
    let mut group = c.benchmark_group("parallel_vs_sequential");
    group.sample_size(10);
    for (name, work) in workloads {
        #[cfg(feature = "parallel")]
        {
            group.bench_function(BenchmarkId::new(name, "parallel"), |b| b.iter(|| black_box(work())));
            let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
            group.bench_function(BenchmarkId::new(name, "sequential"), |b| b.iter(|| single.install(|| black_box(work()))));
        }
        #[cfg(not(feature = "parallel"))]
        group.bench_function(BenchmarkId::new(name, "sequential_fallback"), |b| b.iter(|| black_box(work())));
    }
    group.finish();
}

criterion_group!(benches, bench_backends);
criterion_main!(benches);
