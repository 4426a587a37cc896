//! Hot paths on the rayon global pool versus a one-thread pool.
//!
//! Built with `--no-default-features` both variants run the sequential fallback.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ramie::embedding::HashedLexical;
use ramie::evaluation::score_task;
use ramie::fixtures::generate_records;
use ramie::model::{Record, TaskKind};
use ramie::parsing::{parse_generation, Prediction};
use ramie::prompting::serialize_gold;
use ramie::retrieval::{build_index, IndexOptions, RetrievalMode};

fn corpus() -> Vec<Record> {
    TaskKind::ALL
        .iter()
        .flat_map(|&t| generate_records(t, 500, 3 + t.index() as u64))
        .collect()
}

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    vec![
        ("parallel", rayon::ThreadPoolBuilder::new().build().unwrap()),
        (
            "sequential",
            rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap(),
        ),
    ]
}

fn bench(c: &mut Criterion) {
    let records = corpus();
    let embedder = HashedLexical::new(2048).unwrap();
    let index = build_index(&records, &embedder, IndexOptions::default()).unwrap();
    let mode = RetrievalMode::train().with_k(3);
    let raw: Vec<(TaskKind, String)> = records
        .iter()
        .map(|r| (r.task, format!("Answer:\n{}\n", serialize_gold(&r.gold))))
        .collect();
    let ner: Vec<Record> = records.iter().filter(|r| r.task == TaskKind::Ner).cloned().collect();
    let preds: Vec<Prediction> = ner
        .iter()
        .map(|r| Prediction::from_gold(r.id.clone(), r.gold.clone()))
        .collect();

    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::new("index_build", name), |b| {
            b.iter(|| pool.install(|| build_index(&records, &embedder, IndexOptions::default()).unwrap()))
        });
        group.bench_function(BenchmarkId::new("retrieve_batch", name), |b| {
            b.iter(|| pool.install(|| index.retrieve_batch(&embedder, &records, mode).unwrap()))
        });
        group.bench_function(BenchmarkId::new("parse_batch", name), |b| {
            b.iter(|| pool.install(|| ramie::par::map(&raw, |(task, text)| parse_generation(*task, text))))
        });
        group.bench_function(BenchmarkId::new("score_task", name), |b| {
            b.iter(|| pool.install(|| score_task(TaskKind::Ner, &ner, &preds).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
