//! Retrieval against exhaustive scoring over the fixture training sets.

mod common;

use common::fixtures_dir;
use ramie::dataset::{read_records, Split};
use ramie::embedding::{cosine, HashedLexical};
use ramie::fixtures::corpus_path;
use ramie::model::{Record, TaskKind};
use ramie::retrieval::{build_index, query_text, Baseline, ExampleIndex, IndexOptions, Phase, RetrievalMode};

fn split(split: Split) -> Vec<Record> {
    TaskKind::ALL
        .iter()
        .flat_map(|&t| read_records(&fixtures_dir().join(corpus_path(t, split)), Some(t)).unwrap())
        .collect()
}

fn setup() -> (Vec<Record>, HashedLexical, ExampleIndex) {
    let train = split(Split::Train);
    let e = HashedLexical::new(2048).unwrap();
    let index = build_index(&train, &e, IndexOptions::default()).unwrap();
    (train, e, index)
}

/// Ids ranked by descending similarity, ties by ascending id.
fn brute_force(index: &ExampleIndex, e: &HashedLexical, q: &Record, phase: Phase) -> Vec<String> {
    let qv = e.embed_text(&query_text(q, index.options()));
    let sentence = q.normalized_text();
    let mut scored: Vec<(f64, String)> = index
        .entries()
        .iter()
        .filter(|k| k.task == q.task)
        .filter(|k| phase == Phase::Test || (k.record_id != q.id && k.sentence != sentence))
        .map(|k| (cosine(&k.vector, &qv).unwrap(), k.record_id.clone()))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    scored.into_iter().map(|(_, id)| id).collect()
}

#[test]
fn top_k_matches_exhaustive_ranking() {
    let (train, e, index) = setup();
    let test = split(Split::Test);
    for k in [1, 2, 5] {
        let mode = RetrievalMode::test().with_k(k);
        let hits = index.retrieve_batch(&e, &test, mode).unwrap();
        for (q, hits) in test.iter().zip(&hits) {
            let ids: Vec<String> = hits.iter().map(|h| h.record_id.clone()).collect();
            assert_eq!(ids, brute_force(&index, &e, q, Phase::Test)[..k], "{}", q.id);
            assert!(hits.windows(2).all(|w| w[0].similarity >= w[1].similarity));
        }
    }
    let hits = index
        .retrieve_batch(&e, &train, RetrievalMode::train().with_k(3))
        .unwrap();
    for (q, hits) in train.iter().zip(&hits) {
        let ids: Vec<String> = hits.iter().map(|h| h.record_id.clone()).collect();
        assert_eq!(ids, brute_force(&index, &e, q, Phase::Train)[..3], "{}", q.id);
        assert!(!ids.contains(&q.id));
    }
}

#[test]
fn test_phase_finds_the_record_itself_in_training_data() {
    let (train, e, index) = setup();
    for q in &train {
        let hits = index.retrieve(&e, q, RetrievalMode::test()).unwrap();
        assert_eq!(hits[0].record_id, q.id);
        assert!(hits[0].similarity <= 1.0);
    }
}

#[test]
fn train_phase_skips_duplicate_sentences_under_other_ids() {
    let mut train = split(Split::Train);
    let twin = train[0].with_id("twin-of-first");
    train.push(twin.clone());
    let e = HashedLexical::new(2048).unwrap();
    let index = build_index(&train, &e, IndexOptions::default()).unwrap();
    for q in [&train[0], &twin] {
        let hits = index.retrieve(&e, q, RetrievalMode::train().with_k(5)).unwrap();
        assert!(hits
            .iter()
            .all(|h| h.record_id != train[0].id && h.record_id != twin.id));
    }
}

#[test]
fn random_baseline_is_seeded_and_within_candidates() {
    let (train, e, index) = setup();
    let mode = RetrievalMode::train().with_k(4).with_random(99);
    let a = index.retrieve_batch(&e, &train, mode).unwrap();
    assert_eq!(a, index.retrieve_batch(&e, &train, mode).unwrap());
    let other = index
        .retrieve_batch(
            &e,
            &train,
            RetrievalMode {
                baseline: Baseline::Random { seed: 100 },
                ..mode
            },
        )
        .unwrap();
    assert_ne!(a, other);
    for (q, hits) in train.iter().zip(&a) {
        let mut ids: Vec<&str> = hits.iter().map(|h| h.record_id.as_str()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 4);
        for id in ids {
            let k = index.get(id).unwrap();
            assert_eq!(k.task, q.task);
            assert_ne!(k.record_id, q.id);
        }
    }
}

#[test]
fn saved_index_answers_identically() {
    let (train, e, index) = setup();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("index.bin");
    index.save(&path).unwrap();
    let loaded = ExampleIndex::load(&path, Some(index.fingerprint())).unwrap();
    let mode = RetrievalMode::train().with_k(2);
    assert_eq!(
        index.retrieve_batch(&e, &train, mode).unwrap(),
        loaded.retrieve_batch(&e, &train, mode).unwrap()
    );
    assert!(ExampleIndex::load(&path, Some("not-the-fingerprint")).is_err());
}
