use std::f64::consts::FRAC_PI_2;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use qubit_parity::exec::Execution;
use qubit_parity::interferometry::{averaged_metrics, VerificationSpec};
use qubit_parity::preparation::{growth_curve, AreaPolicy, PrepConfig};

const POLICIES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn bench_averaged_metrics(c: &mut Criterion) {
    let mut g = c.benchmark_group("averaged_metrics");
    g.sample_size(10);
    let prep = PrepConfig::half_transfer(6);
    let spec = VerificationSpec::single_pulse(FRAC_PI_2, 32);
    for (name, exec) in POLICIES {
        g.bench_with_input(BenchmarkId::new(name, 64), &exec, |b, &exec| {
            b.iter(|| averaged_metrics(&prep, None, &spec, 64, 7, 24, exec).unwrap())
        });
    }
    g.finish();
}

fn bench_growth_curve(c: &mut Criterion) {
    let mut g = c.benchmark_group("growth_curve");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_with_input(BenchmarkId::new(name, 256), &exec, |b, &exec| {
            b.iter(|| growth_curve(&[4, 8, 12], &AreaPolicy::HalfTransfer, 256, 7, 32, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bench_averaged_metrics, bench_growth_curve);
criterion_main!(benches);
