use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use v3db::fixtures::{fixture_scale, random_query, random_snapshot, random_vector};
use v3db::{build_snapshot, circuit_stats, commit_snapshot, run_query, FieldSpec, QueryCircuit, Variant};
use v3db_bench::{medium, tiny};

fn plain(c: &mut Criterion) {
    let cfg = medium();
    let s = random_snapshot(1, cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let q = random_query(&mut rng, &s);
    c.bench_function("run_query/medium", |b| b.iter(|| run_query(&q, &s).unwrap()));
    c.bench_function("commit_snapshot/medium", |b| b.iter(|| commit_snapshot(&s).unwrap()));

    let scale = fixture_scale();
    let vectors: Vec<_> = (0..cfg.n0).map(|_| random_vector(&mut rng, cfg.dim, scale.coord_max())).collect();
    let items: Vec<u64> = (1..=cfg.n0 as u64).collect();
    let mut group = c.benchmark_group("build_snapshot");
    group.sample_size(10);
    group.bench_function("medium", |b| {
        b.iter(|| build_snapshot(&vectors, &items, cfg, FieldSpec::goldilocks(), scale, 3).unwrap())
    });
    group.finish();
}

fn proving(c: &mut Criterion) {
    let s = random_snapshot(1, tiny());
    let shape = s.shape().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut group = c.benchmark_group("tiny");
    group.sample_size(10);
    for variant in [Variant::Baseline, Variant::Multiset] {
        group
            .bench_function(format!("circuit_stats/{variant}"), |b| b.iter(|| circuit_stats(&shape, variant).unwrap()));
        let qc = QueryCircuit::build(&shape, variant).unwrap();
        group.bench_function(format!("prove/{variant}"), |b| {
            b.iter_batched(|| random_query(&mut rng, &s), |q| qc.prove(&s, &q).unwrap(), BatchSize::SmallInput)
        });
        let bundle = qc.prove(&s, &random_query(&mut rng, &s)).unwrap();
        group.bench_function(format!("verify/{variant}"), |b| b.iter(|| qc.verify(&bundle).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, plain, proving);
criterion_main!(benches);
