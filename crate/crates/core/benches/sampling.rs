use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lp_resolvent::harness::{check_phi_identity, check_resolvent, check_theorem_main1};
use lp_resolvent::operators::catalog;
use lp_resolvent::{Exec, SamplerConfig, SpaceDescriptor};

const EXECS: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn sampler(count: usize, exec: Exec) -> SamplerConfig {
    SamplerConfig { exec, ..SamplerConfig::with_seed(42, count) }
}

fn phi_identity(c: &mut Criterion) {
    let mut g = c.benchmark_group("phi_identity");
    for n in [2, 50] {
        let space = SpaceDescriptor::new(n, 1.5).unwrap();
        for (name, exec) in EXECS {
            let s = sampler(10_000, exec);
            g.bench_with_input(BenchmarkId::new(name, n), &s, |b, s| b.iter(|| black_box(check_phi_identity(&space, s).unwrap())));
        }
    }
    g.finish();
}

fn theorem_main1(c: &mut Criterion) {
    let mut g = c.benchmark_group("theorem_main1");
    let space = SpaceDescriptor::new(10, 1.5).unwrap();
    for (name, exec) in EXECS {
        let s = sampler(10_000, exec);
        g.bench_function(name, |b| b.iter(|| black_box(check_theorem_main1(&space, &s, None).unwrap())));
    }
    g.finish();
}

fn resolvent(c: &mut Criterion) {
    let mut g = c.benchmark_group("resolvent_sum_quadratic_l1");
    g.sample_size(10);
    let space = SpaceDescriptor::new(10, 1.5).unwrap();
    let (label, op) = catalog(10).into_iter().find(|(l, _)| l == "sum_quadratic_l1").unwrap();
    for (name, exec) in EXECS {
        let s = sampler(2_000, exec);
        g.bench_function(name, |b| {
            b.iter(|| black_box(check_resolvent(&space, &label, &op, 1.0, &s, Some(2.0)).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, phi_identity, theorem_main1, resolvent);
criterion_main!(benches);
