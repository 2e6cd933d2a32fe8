use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use tailcs_core::exec::Execution;
use tailcs_core::experiments::{sweep_sparsity_with, Method, SweepOptions, TrialSpec};

fn modes() -> Vec<(&'static str, Execution)> {
    let mut modes = vec![("sequential", Execution::Sequential)];
    #[cfg(feature = "parallel")]
    modes.push(("parallel", Execution::Parallel));
    modes
}

fn small_sweep(c: &mut Criterion) {
    let base = TrialSpec::new(16, 32, 4, Method::Bp, 1);
    let s = [4, 6, 8];
    let mut group = c.benchmark_group("sweep_16x32");
    group.sample_size(10);
    for (name, exec) in modes() {
        let opts = SweepOptions { exec, ..Default::default() };
        group.bench_with_input(BenchmarkId::new("bp_tailmin", name), &opts, |b, opts| {
            b.iter(|| sweep_sparsity_with(&base, &s, &[Method::Bp, Method::TailMin], 8, opts).unwrap())
        });
    }
    group.finish();
}

fn l0_sweep(c: &mut Criterion) {
    let base = TrialSpec::new(6, 12, 3, Method::L0Oracle, 1);
    let mut group = c.benchmark_group("l0_6x12");
    group.sample_size(10);
    for (name, exec) in modes() {
        let opts = SweepOptions { exec, ..Default::default() };
        group.bench_with_input(BenchmarkId::new("l0", name), &opts, |b, opts| {
            b.iter(|| sweep_sparsity_with(&base, &[3, 4], &[Method::L0Oracle], 16, opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, small_sweep, l0_sweep);
criterion_main!(benches);
