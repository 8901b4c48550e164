//! Synthetic corpora whose labels are a deterministic function of which
//! embedding blob a word comes from. Surface forms are random strings, and
//! test items use words never seen in training, so only cluster membership
//! carries the label signal.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SENTIMENT_CLASSES: [&str; 5] = ["VeryNegative", "Negative", "Neutral", "Positive", "VeryPositive"];
pub const NER_TYPES: [&str; 2] = ["person", "location"];

/// Draws distinct random lowercase words.
struct WordSource {
    rng: ChaCha8Rng,
    seen: BTreeSet<String>,
}

impl WordSource {
    fn new(seed: u64) -> Self {
        WordSource {
            rng: ChaCha8Rng::seed_from_u64(seed),
            seen: BTreeSet::new(),
        }
    }

    fn take(&mut self, count: usize) -> Vec<String> {
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let w: String = (0..7).map(|_| self.rng.gen_range(b'a'..=b'z') as char).collect();
            if self.seen.insert(w.clone()) {
                out.push(w);
            }
        }
        out
    }
}

/// word2vec text with an `N D` header. Group `g` is a blob of radius
/// `spread` around `10 * e_g`.
pub fn blob_vectors(groups: &[Vec<String>], spread: f64, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = groups.len();
    let n: usize = groups.iter().map(Vec::len).sum();
    let mut out = format!("{} {}\n", n, dim);
    for (g, words) in groups.iter().enumerate() {
        for w in words {
            out.push_str(w);
            for d in 0..dim {
                let centre = if d == g { 10.0 } else { 0.0 };
                let x: f64 = centre + rng.gen_range(-spread..spread);
                write!(out, " {:.6}", x).unwrap();
            }
            out.push('\n');
        }
    }
    out
}

/// Files of one synthetic experiment, as text.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub vectors: String,
    pub train: String,
    pub test: String,
    /// Number of label-bearing blobs in `vectors`.
    pub groups: usize,
}

/// Five-class sentiment items `id<TAB>subject<TAB>label<TAB>text`. Each text
/// holds four noise words (absent from the embeddings) and one signal word
/// from the blob of its label.
pub fn sentiment_corpus(seed: u64) -> Corpus {
    let mut words = WordSource::new(seed);
    let signal: Vec<Vec<String>> = (0..SENTIMENT_CLASSES.len()).map(|_| words.take(60)).collect();
    let noise = words.take(8);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5e47);

    let mut make = |per_class: usize, half: std::ops::Range<usize>, prefix: &str| {
        let mut rows = Vec::new();
        for (c, label) in SENTIMENT_CLASSES.iter().enumerate() {
            for _ in 0..per_class {
                let mut text: Vec<&str> = (0..4).map(|_| noise.choose(&mut rng).unwrap().as_str()).collect();
                let w = &signal[c][rng.gen_range(half.clone())];
                text.insert(rng.gen_range(0..=text.len()), w);
                rows.push((*label, text.join(" ")));
            }
        }
        rows.shuffle(&mut rng);
        let mut out = String::new();
        for (i, (label, text)) in rows.iter().enumerate() {
            writeln!(out, "{}{}\ts{}\t{}\t{}", prefix, i, i % 4, label, text).unwrap();
        }
        out
    };
    let train = make(80, 0..30, "tr");
    let test = make(20, 30..60, "te");
    Corpus {
        vectors: blob_vectors(&signal, 1.0, seed),
        train,
        test,
        groups: SENTIMENT_CLASSES.len(),
    }
}

/// CoNLL `surface<TAB>tag` sequences. Outside words come from one blob and
/// each entity type from its own blob; spans of one or two tokens are always
/// separated by an outside word, so the tag of every token follows from the
/// blobs of it and its left neighbour.
pub fn ner_corpus(seed: u64) -> Corpus {
    let mut words = WordSource::new(seed);
    let outside = words.take(60);
    let entity: Vec<Vec<String>> = NER_TYPES.iter().map(|_| words.take(30)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e7);

    let mut make = |sequences: usize, test: bool| {
        let pick = |pool: &[String], rng: &mut ChaCha8Rng| {
            let half = pool.len() / 2;
            let i = if test { rng.gen_range(half..pool.len()) } else { rng.gen_range(0..half) };
            pool[i].clone()
        };
        let mut out = String::new();
        for s in 0..sequences {
            if s > 0 {
                out.push('\n');
            }
            let segments = rng.gen_range(3..=6);
            let mut last_entity = false;
            for _ in 0..segments {
                if last_entity || rng.gen_bool(0.5) {
                    writeln!(out, "{}\tO", pick(&outside, &mut rng)).unwrap();
                    last_entity = false;
                } else {
                    let t = rng.gen_range(0..NER_TYPES.len());
                    let len = rng.gen_range(1..=2);
                    for j in 0..len {
                        let bio = if j == 0 { "B" } else { "I" };
                        writeln!(out, "{}\t{}-{}", pick(&entity[t], &mut rng), bio, NER_TYPES[t]).unwrap();
                    }
                    last_entity = true;
                }
            }
        }
        out
    };
    let train = make(120, false);
    let test = make(60, true);
    let mut groups = vec![outside];
    groups.extend(entity);
    Corpus {
        vectors: blob_vectors(&groups, 1.0, seed),
        train,
        test,
        groups: 1 + NER_TYPES.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpora_are_deterministic_and_disjoint() {
        let a = sentiment_corpus(3);
        assert_eq!(a.vectors, sentiment_corpus(3).vectors);
        assert_eq!(a.train.lines().count(), 400);
        assert_eq!(a.test.lines().count(), 100);
        let vocab = |s: &str| -> BTreeSet<String> {
            s.lines().flat_map(|l| l.split('\t').nth(3).unwrap().split(' ').map(str::to_owned).collect::<Vec<_>>()).collect()
        };
        let embedded: BTreeSet<String> = a.vectors.lines().skip(1).map(|l| l.split(' ').next().unwrap().to_owned()).collect();
        let train_signal: BTreeSet<_> = vocab(&a.train).intersection(&embedded).cloned().collect();
        let test_signal: BTreeSet<_> = vocab(&a.test).intersection(&embedded).cloned().collect();
        assert!(!test_signal.is_empty());
        assert!(train_signal.is_disjoint(&test_signal));

        let n = ner_corpus(3);
        assert_eq!(n.train, ner_corpus(3).train);
        assert_eq!(n.train.split("\n\n").count(), 120);
        assert!(n.test.contains("B-person") && n.test.contains("I-location") || n.test.contains("I-person"));
    }
}
