//! Benchmarks for the pipeline's hot paths: tag segmentation, mini-batch
//! k-means, logistic training and bank scoring.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use evcon_core::concept_bank::{score_image, ConceptBank};
use evcon_core::concept_clustering::{minibatch_kmeans, KMeansParams};
use evcon_core::corpus_io::{NGramTable, TagRecord};
use evcon_core::linear_models::{train_logistic, CVReport, LinearModel, ModelKind};
use evcon_core::segmentation::{segment_tag, CorpusStickiness, StickinessParams};

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn bench_segmentation(c: &mut Criterion) {
    let vocab: Vec<String> = (0..30).map(|i| format!("w{i}")).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut table = NGramTable::default();
    for w in &vocab {
        table.add(vec![w.clone()], rng.gen_range(1..500));
    }
    for _ in 0..400 {
        let a = vocab[rng.gen_range(0..vocab.len())].clone();
        let b = vocab[rng.gen_range(0..vocab.len())].clone();
        table.add(vec![a, b], rng.gen_range(1..100));
    }
    for _ in 0..100 {
        let g: Vec<String> = (0..3)
            .map(|_| vocab[rng.gen_range(0..vocab.len())].clone())
            .collect();
        table.add(g, rng.gen_range(1..20));
    }
    let provider = CorpusStickiness {
        ngrams: &table,
        params: StickinessParams::default(),
    };

    let mut group = c.benchmark_group("segment_tag");
    for len in [4usize, 8, 16] {
        let tag = TagRecord {
            event_label: "ev".into(),
            tag_words: (0..len)
                .map(|_| vocab[rng.gen_range(0..vocab.len())].clone())
                .collect(),
        };
        group.bench_with_input(BenchmarkId::from_parameter(len), &tag, |b, tag| {
            b.iter(|| segment_tag(black_box(tag), &provider, 3).unwrap())
        });
    }
    group.finish();
}

fn bench_kmeans(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let points: Vec<Vec<f64>> = (0..856)
        .map(|i| {
            let center = (i % 20) as f64;
            (0..32)
                .map(|d| center * ((d % 7) as f64 * 0.3) + gaussian(&mut rng))
                .collect()
        })
        .collect();
    c.bench_function("minibatch_kmeans 856x32 k=150", |b| {
        b.iter(|| {
            minibatch_kmeans(
                black_box(&points),
                &KMeansParams {
                    k: 150,
                    batch_size: 256,
                    iterations: 20,
                    seed: 3,
                },
            )
            .unwrap()
        })
    });
}

fn bench_logistic(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 400;
    let d = 64;
    let x: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let shift = if i % 2 == 0 { 0.6 } else { -0.6 };
            (0..d).map(|_| shift + gaussian(&mut rng)).collect()
        })
        .collect();
    let y: Vec<i8> = (0..n).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
    c.bench_function("train_logistic 400x64", |b| {
        b.iter(|| train_logistic(black_box(&x), &y, 1.0, 1e-6, 300).unwrap())
    });
}

fn bench_scoring(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = 856;
    let d = 128;
    let bank = ConceptBank {
        concepts: (0..m).map(|i| format!("c{i}")).collect(),
        models: (0..m)
            .map(|_| LinearModel {
                weights: (0..d).map(|_| gaussian(&mut rng)).collect(),
                bias: gaussian(&mut rng),
                reg_c: 1.0,
                kind: ModelKind::Logistic,
            })
            .collect(),
        feature_dim: d,
        metadata: (0..m)
            .map(|_| CVReport {
                grid: vec![1.0],
                fold_accuracies: vec![vec![1.0]],
                best_c: 1.0,
                best_mean_accuracy: 1.0,
            })
            .collect(),
    };
    let x: Vec<f64> = (0..d).map(|_| gaussian(&mut rng)).collect();
    c.bench_function("score_image 856 concepts x 128 dims", |b| {
        b.iter(|| score_image(black_box(&bank), "img", black_box(&x)).unwrap())
    });
}

criterion_group!(
    benches,
    bench_segmentation,
    bench_kmeans,
    bench_logistic,
    bench_scoring
);
criterion_main!(benches);
