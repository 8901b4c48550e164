//! Seeded input generators shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wordclust::embedio::EmbeddingTable;
use wordclust::sentiment::{SentimentItem, FIVE_POINT};

/// `n` random `dim`-dimensional word vectors named `w0`, `w1`, ...
pub fn random_table(n: usize, dim: usize, seed: u64) -> EmbeddingTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n).map(|i| {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        (format!("w{}", i), v)
    });
    EmbeddingTable::from_rows(rows).expect("generated rows are valid")
}

/// Sentiment items of `len` words drawn from a `vocab`-word vocabulary.
pub fn random_items(n: usize, len: usize, vocab: usize, seed: u64) -> Vec<SentimentItem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let words: Vec<String> = (0..len).map(|_| format!("w{}", rng.gen_range(0..vocab))).collect();
            SentimentItem {
                id: i.to_string(),
                subject: format!("s{}", i % 10),
                label: FIVE_POINT[rng.gen_range(0..FIVE_POINT.len())].to_owned(),
                text: words.join(" "),
                pos_tags: Vec::new(),
            }
        })
        .collect()
}

/// A random prevalence vector over `n` classes.
pub fn random_prevalence(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}
