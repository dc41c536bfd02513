use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use kgworlds_bench::{default_partition, first_world};
use kgworlds_core::config::{GenConfig, SplitCounts};
use kgworlds_core::dataset_io::extend_graph;
use kgworlds_core::resolver::{brute_force_resolve, resolve_descriptor, validate_instance};
use kgworlds_core::rules::{generate_alphabet, generate_rules};
use kgworlds_core::sampler::{build_dataset, collect_descriptors};
use kgworlds_core::seed::{rng_for, stage};
use kgworlds_core::worldgraph::{closure_check, generate_world_graph};
use std::hint::black_box;

fn rules(c: &mut Criterion) {
    let alphabet = generate_alphabet(20, 0.5, &mut rng_for(0, &[stage::ALPHABET])).unwrap();
    let mut seed = 0u64;
    c.bench_function("generate_rules K=20", |b| {
        b.iter(|| {
            seed += 1;
            generate_rules(&alphabet, &mut rng_for(seed, &[stage::RULES]))
        })
    });
}

fn world_graph(c: &mut Criterion) {
    let p = default_partition(0);
    let cfg = GenConfig::default();
    let mut attempt = 0u64;
    c.bench_function("generate_world_graph w=20", |b| {
        b.iter(|| {
            attempt += 1;
            let mut rng = rng_for(0, &[stage::WORLD_GRAPH, 0, attempt]);
            generate_world_graph(&p.worlds[0], &p.rules, &cfg, &mut rng).unwrap()
        })
    });
    let (_, world_rules, g) = first_world(0);
    c.bench_function("closure_check", |b| {
        b.iter(|| closure_check(black_box(&g), &world_rules))
    });
    c.bench_function("collect_descriptors e=10", |b| {
        b.iter(|| collect_descriptors(black_box(&g), 10, 10_000).unwrap())
    });
}

fn sampling(c: &mut Criterion) {
    let (_, world_rules, g) = first_world(0);
    let cfg = GenConfig {
        graphs_per_split: SplitCounts {
            train: 200,
            valid: 50,
            test: 50,
        },
        ..GenConfig::default()
    };
    let mut group = c.benchmark_group("build_dataset");
    group.sample_size(10);
    group.bench_function("300 instances", |b| {
        b.iter(|| build_dataset(0, &g, &world_rules, &cfg, 0).unwrap())
    });
    group.finish();

    let (ds, _) = build_dataset(0, &g, &world_rules, &cfg, 0).unwrap();
    let instances: Vec<_> = ds.instances().cloned().collect();
    c.bench_function("validate_instance x300", |b| {
        b.iter(|| {
            instances
                .iter()
                .filter(|i| validate_instance(&world_rules, i).is_valid())
                .count()
        })
    });
    c.bench_function("extend_graph x300", |b| {
        b.iter_batched(
            || instances.clone(),
            |v| {
                v.iter()
                    .map(|i| extend_graph(&i.edges).node_count())
                    .sum::<usize>()
            },
            BatchSize::SmallInput,
        )
    });
}

fn resolver(c: &mut Criterion) {
    let (_, world_rules, g) = first_world(0);
    let collection = collect_descriptors(&g, 10, 10_000).unwrap();
    let longest = collection
        .pairs
        .iter()
        .map(|p| p.descriptor.clone())
        .max_by_key(|d| d.len())
        .unwrap();
    let d = longest.labels();
    c.bench_function(&format!("resolve_descriptor len={}", d.len()), |b| {
        b.iter(|| resolve_descriptor(&world_rules, black_box(d)))
    });
    c.bench_function(&format!("brute_force_resolve len={}", d.len()), |b| {
        b.iter(|| brute_force_resolve(&world_rules, black_box(d)).unwrap())
    });
}

criterion_group!(benches, rules, world_graph, sampling, resolver);
criterion_main!(benches);
