use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use dyadic::experiments::{run_batch, Job, RunSettings};
use dyadic::selfsimilar::gamma_by_shooting;
use dyadic::series::{build_series, psi_check, rouche_check, DEFAULT_TERMS};
use dyadic::Execution;

const POLICIES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn grids(c: &mut Criterion) {
    let table = build_series(DEFAULT_TERMS).unwrap();
    table.radius().unwrap();
    let mut g = c.benchmark_group("grid_checks");
    for (name, exec) in POLICIES {
        g.bench_with_input(BenchmarkId::new("rouche_3600", name), &exec, |b, &e| {
            b.iter(|| rouche_check(&table, 3600, e).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("psi_400", name), &exec, |b, &e| {
            b.iter(|| psi_check(&table, 400, e).unwrap())
        });
    }
    g.finish();
}

fn shooting(c: &mut Criterion) {
    let mut g = c.benchmark_group("gamma_by_shooting");
    g.sample_size(20);
    for (name, exec) in POLICIES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| {
            b.iter(|| gamma_by_shooting(1e-10, e).unwrap())
        });
    }
    g.finish();
}

fn batch(c: &mut Criterion) {
    let table = build_series(DEFAULT_TERMS).unwrap();
    let settings = RunSettings::default();
    let jobs: Vec<Job> = [0.5, 1.0, 2.0, 4.0]
        .into_iter()
        .map(|l| Job::Dissipation {
            l,
            n_modes: 16,
            m: 3,
            eps: 1.0,
        })
        .chain((0..4).map(|n0| Job::Coalescence {
            n0,
            t0: 1.0,
            n_modes: 16,
        }))
        .collect();
    let mut g = c.benchmark_group("run_batch");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &e| {
            b.iter(|| {
                for r in run_batch(&jobs, &table, &settings, e) {
                    r.unwrap();
                }
            })
        });
    }
    g.finish();
}

criterion_group!(benches, grids, shooting, batch);
criterion_main!(benches);
