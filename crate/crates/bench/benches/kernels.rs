use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wordclust::cluster::{self, ClusterConfig};
use wordclust::quantify::{self, PrevalenceVector};
use wordclust::sentiment::{self, OrdinalScale, SentimentFeatureConfig};
use wordclust::TrainConfig;
use wordclust_bench::{random_items, random_prevalence, random_table};

fn kmeans(c: &mut Criterion) {
    let table = random_table(2000, 50, 1);
    let mut group = c.benchmark_group("kmeans");
    group.sample_size(10);
    for k in [10, 100] {
        let config = ClusterConfig::new(k).with_restarts(1);
        group.bench_function(format!("fit_2000x50_k{}", k), |b| {
            b.iter(|| cluster::fit_with_restarts(black_box(&table), &config).unwrap())
        });
    }
    group.finish();
}

fn emd(c: &mut Criterion) {
    let scale = OrdinalScale::five_point();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let p = PrevalenceVector::new(&scale, random_prevalence(5, &mut rng)).unwrap();
    let q = PrevalenceVector::new(&scale, random_prevalence(5, &mut rng)).unwrap();
    c.bench_function("emd_5", |b| b.iter(|| quantify::emd(black_box(&p), black_box(&q)).unwrap()));
}

fn sentiment_pipeline(c: &mut Criterion) {
    let items = random_items(500, 15, 2000, 3);
    let table = random_table(2000, 20, 4);
    let lexicon = cluster::fit_with_restarts(&table, &ClusterConfig::new(50).with_restarts(1))
        .unwrap()
        .lexicon()
        .clone();
    let features = SentimentFeatureConfig {
        clusters: Some(lexicon),
        ..SentimentFeatureConfig::default()
    };
    let mut group = c.benchmark_group("sentiment");
    group.sample_size(10);
    group.bench_function("featurize_500", |b| {
        b.iter(|| sentiment::featurize_items(black_box(&items), &features))
    });
    let config = TrainConfig {
        epochs: 5,
        ..TrainConfig::default()
    };
    group.bench_function("train_500_5_epochs", |b| {
        b.iter(|| sentiment::train_classifier(black_box(&items), &features, &config, &OrdinalScale::five_point()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, kmeans, emd, sentiment_pipeline);
criterion_main!(benches);
