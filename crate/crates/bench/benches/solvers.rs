use std::time::Duration;

use brp_bench::{fixture, SIZES};
use brp_core::bounds::{lb3, lb_ubalb};
use brp_core::{playout, solve_bbs, solve_exact, BeamConfig, Beta, LbKind, PolicyId};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn bounds(c: &mut Criterion) {
    let mut group = c.benchmark_group("bounds");
    for (w, h, n) in SIZES {
        let yard = fixture(w, h, n);
        let id = format!("{w}x{h}/{n}");
        group.bench_with_input(BenchmarkId::new("lb3", &id), &yard, |b, y| {
            b.iter(|| lb3(y))
        });
        group.bench_with_input(BenchmarkId::new("ubalb", &id), &yard, |b, y| {
            b.iter(|| lb_ubalb(y).unwrap())
        });
    }
    group.finish();
}

fn policies(c: &mut Criterion) {
    let mut group = c.benchmark_group("playout");
    for (w, h, n) in SIZES {
        let yard = fixture(w, h, n);
        let id = format!("{w}x{h}/{n}");
        for p in PolicyId::ALL {
            if n > 1000 && p == PolicyId::Lookahead1 {
                continue;
            }
            group.bench_with_input(BenchmarkId::new(p.name(), &id), &yard, |b, y| {
                b.iter(|| playout(p, y, None))
            });
        }
    }
    group.finish();
}

fn search(c: &mut Criterion) {
    let mut group = c.benchmark_group("search");
    group.sample_size(10);
    let small = fixture(4, 4, 12);
    group.bench_function("exact/4x4/12", |b| {
        b.iter(|| solve_exact(&small, LbKind::Ubalb, None, None))
    });
    let mid = fixture(10, 6, 54);
    let config = BeamConfig {
        beta: Beta::Width(50),
        time_limit: Some(Duration::from_secs(5)),
        ..BeamConfig::default()
    };
    group.bench_function("bbs-beta50/10x6/54", |b| {
        b.iter(|| solve_bbs(&mid, &config))
    });
    group.finish();
}

criterion_group!(benches, bounds, policies, search);
criterion_main!(benches);
