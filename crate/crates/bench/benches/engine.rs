use std::hint::black_box;

use bagcq::inequality::decide_max;
use bagcq::polymatroid::{mobius_forward, mobius_inverse};
use bagcq::reduction::{build_queries, verify_built, Construction, MiipInstance};
use bagcq::structures::count_homomorphisms;
use bagcq::{decide_containment, ConeId, PipelineConfig, SetFunction};
use bagcq_bench::*;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn containment(c: &mut Criterion) {
    let cfg = PipelineConfig::default();
    let mut g = c.benchmark_group("containment");
    let (a, b) = vee_pair();
    g.bench_function("vee", |x| {
        x.iter(|| decide_containment(black_box(&a), &b, &cfg).unwrap())
    });
    let (a, b) = normal_pair();
    g.bench_function("normal-database", |x| {
        x.iter(|| decide_containment(black_box(&a), &b, &cfg).unwrap())
    });
    for k in [3, 5, 7] {
        let (a, b) = cycle_into_path(k);
        g.bench_with_input(BenchmarkId::new("cycle-into-path", k), &k, |x, _| {
            x.iter(|| decide_containment(black_box(&a), &b, &cfg).unwrap())
        });
    }
    g.finish();
}

fn inequalities(c: &mut Criterion) {
    let mut g = c.benchmark_group("inequality");
    let m = chain_inequality();
    g.bench_function("chain/polymatroid", |x| {
        x.iter(|| decide_max(black_box(&m), ConeId::Polymatroid).unwrap())
    });
    let m = three_way_max();
    g.bench_function("three-way-max/polymatroid", |x| {
        x.iter(|| decide_max(black_box(&m), ConeId::Polymatroid).unwrap())
    });
    g.bench_function("three-way-max/normal", |x| {
        x.iter(|| decide_max(black_box(&m), ConeId::Normal).unwrap())
    });
    for n in [3, 4, 5, 6] {
        let m = chain_submodularity(n);
        g.bench_with_input(BenchmarkId::new("chain-submodularity", n), &n, |x, _| {
            x.iter(|| decide_max(black_box(&m), ConeId::Polymatroid).unwrap())
        });
    }
    g.finish();
}

fn algebra(c: &mut Criterion) {
    let mut g = c.benchmark_group("algebra");
    for n in [6, 10, 14] {
        let h = SetFunction::from_fn(n, |x| {
            bagcq::rat(x.len() as i64 * (n as i64 - x.len() as i64 + 1))
        });
        g.bench_with_input(BenchmarkId::new("mobius-round-trip", n), &n, |x, _| {
            x.iter(|| mobius_forward(&mobius_inverse(black_box(&h))))
        });
    }
    g.finish();
}

fn homomorphisms(c: &mut Criterion) {
    let mut g = c.benchmark_group("homomorphisms");
    let t = triangle();
    for n in [4, 8, 16] {
        let d = complete_graph(n);
        g.bench_with_input(BenchmarkId::new("triangle-into-complete", n), &n, |x, _| {
            x.iter(|| count_homomorphisms(black_box(&t), &d).unwrap())
        });
    }
    g.finish();
}

fn reduction(c: &mut Criterion) {
    let m = MiipInstance::from_inequality(&chain_inequality()).unwrap();
    let mut g = c.benchmark_group("reduction");
    g.sample_size(10);
    g.bench_function("build-and-verify/direct", |x| {
        x.iter(|| {
            verify_built(
                &build_queries(black_box(&m), Construction::Direct).unwrap(),
                1_000_000,
            )
            .unwrap()
        })
    });
    g.bench_function("build-and-verify/uniform", |x| {
        x.iter(|| {
            verify_built(
                &build_queries(black_box(&m), Construction::Uniform).unwrap(),
                1_000_000,
            )
            .unwrap()
        })
    });
    g.finish();
}

criterion_group!(
    benches,
    containment,
    inequalities,
    algebra,
    homomorphisms,
    reduction
);
criterion_main!(benches);
