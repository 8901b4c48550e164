//! Sparse feature extraction.
//!
//! Every feature name is namespaced `family:detail`. Families in use:
//!
//! | family          | meaning                                         |
//! |-----------------|-------------------------------------------------|
//! | `ng<n>`         | word n-gram count, tokens joined with `_`       |
//! | `cg<n>`         | character n-gram count                          |
//! | `lex`           | lexicon aggregate, detail `<lexicon>:<stat>`    |
//! | `clus<k>`       | bag-of-clusters count, detail `<id>` or `oov`   |
//! | `clus<k>[<o>]`  | cluster of the token at offset `o` (tagging)    |
//! | `cap`           | capitalization / shape flag                     |
//! | `pos`, `gaz`    | external annotation columns                     |
//! | `posc`          | part-of-speech tag count (sentence level)       |

use std::collections::btree_map::{self, BTreeMap};
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::cluster::Lexicon;
use crate::error::{Error, Result};

/// Feature name to value map. Zero values are never stored, and iteration is
/// in byte order of the names, so serialized output is deterministic.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseFeatureVector {
    entries: BTreeMap<String, f64>,
}

impl SparseFeatureVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `value` to the entry for `name`, dropping it if the sum is zero.
    pub fn add(&mut self, name: impl Into<String>, value: f64) {
        if value == 0.0 {
            return;
        }
        match self.entries.entry(name.into()) {
            btree_map::Entry::Vacant(e) => {
                e.insert(value);
            }
            btree_map::Entry::Occupied(mut e) => {
                let sum = *e.get() + value;
                if sum == 0.0 {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        let name = name.into();
        if value == 0.0 {
            self.entries.remove(&name);
        } else {
            self.entries.insert(name, value);
        }
    }

    /// Value for `name`, zero when absent.
    pub fn get(&self, name: &str) -> f64 {
        self.entries.get(name).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Replaces every value with 1.
    pub fn binarize(&mut self) {
        self.entries.values_mut().for_each(|v| *v = 1.0);
    }

    pub fn retain_families<F: Fn(&str) -> bool>(&mut self, keep: F) {
        self.entries
            .retain(|name, _| FeatureName::parse(name).is_none_or(|n| keep(n.family)));
    }

    /// One-valued entries for each categorical feature name.
    pub fn from_categorical<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v = Self::new();
        for n in names {
            v.add(n, 1.0);
        }
        v
    }
}

impl<S: Into<String>> FromIterator<(S, f64)> for SparseFeatureVector {
    fn from_iter<I: IntoIterator<Item = (S, f64)>>(iter: I) -> Self {
        let mut v = Self::new();
        for (k, x) in iter {
            v.add(k, x);
        }
        v
    }
}

/// Parsed form of a namespaced feature name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureName<'a> {
    pub family: &'a str,
    /// The `k` of a cluster family.
    pub k: Option<usize>,
    /// The window offset of a per-token cluster family.
    pub offset: Option<i64>,
    pub detail: &'a str,
}

impl<'a> FeatureName<'a> {
    pub fn parse(name: &'a str) -> Option<Self> {
        let (family, detail) = name.split_once(':')?;
        if family.is_empty() || detail.is_empty() {
            return None;
        }
        let (k, offset) = match family.strip_prefix("clus") {
            Some(rest) => match rest.split_once('[') {
                Some((k, off)) => {
                    let off = off.strip_suffix(']')?;
                    (Some(k.parse().ok()?), Some(off.parse().ok()?))
                }
                None => (Some(rest.parse().ok()?), None),
            },
            None => (None, None),
        };
        Some(FeatureName {
            family,
            k,
            offset,
            detail,
        })
    }

    pub fn is_cluster(&self) -> bool {
        self.k.is_some()
    }
}

/// Counts of contiguous token n-grams for every `n` in `lo..=hi`.
pub fn ngram_features<S: AsRef<str>>(tokens: &[S], lo: usize, hi: usize) -> SparseFeatureVector {
    assert!(lo >= 1 && lo <= hi, "n-gram range must satisfy 1 <= lo <= hi");
    let mut v = SparseFeatureVector::new();
    for n in lo..=hi {
        for window in tokens.windows(n) {
            let joined = window.iter().map(AsRef::as_ref).collect::<Vec<_>>().join("_");
            v.add(format!("ng{}:{}", n, joined), 1.0);
        }
    }
    v
}

/// Counts of character n-grams of `text` (Unicode scalar values, spaces
/// included) for every `n` in `lo..=hi`.
pub fn char_ngram_features(text: &str, lo: usize, hi: usize) -> SparseFeatureVector {
    assert!(lo >= 1 && lo <= hi, "n-gram range must satisfy 1 <= lo <= hi");
    let chars: Vec<char> = text.chars().collect();
    let mut v = SparseFeatureVector::new();
    for n in lo..=hi {
        for window in chars.windows(n) {
            v.add(format!("cg{}:{}", n, window.iter().collect::<String>()), 1.0);
        }
    }
    v
}

#[derive(Clone, Debug, PartialEq)]
pub struct SentimentLexicon {
    pub name: String,
    polarity: HashMap<String, f64>,
}

impl SentimentLexicon {
    pub fn new(name: impl Into<String>, polarity: HashMap<String, f64>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(Error::Config("lexicon name must be a non-empty word".into()));
        }
        if let Some((w, _)) = polarity.iter().find(|(_, s)| !s.is_finite()) {
            return Err(Error::Input(format!("non-finite score for '{}'", w)));
        }
        Ok(SentimentLexicon { name, polarity })
    }

    pub fn score(&self, word: &str) -> Option<f64> {
        self.polarity.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.polarity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polarity.is_empty()
    }

    /// Reads `word<TAB>score` lines; `#` lines and blank lines are ignored.
    pub fn read_tsv<R: BufRead>(name: &str, reader: R) -> Result<Self> {
        let mut polarity = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, score) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(i + 1, "expected word<TAB>score"))?;
            let score: f64 = score
                .trim()
                .parse()
                .map_err(|_| Error::parse(i + 1, format!("bad score '{}'", score)))?;
            if !score.is_finite() {
                return Err(Error::parse(i + 1, "score is not finite"));
            }
            polarity.insert(word.to_owned(), score);
        }
        Self::new(name, polarity)
    }

    pub fn load(name: &str, path: impl AsRef<Path>) -> Result<Self> {
        Self::read_tsv(name, BufReader::new(File::open(path)?))
    }
}

/// Five aggregates per lexicon: positive and negative hit counts, score sum,
/// maximum score and the score of the last token found in the lexicon.
pub fn lexicon_features<S: AsRef<str>>(tokens: &[S], lexicon: &SentimentLexicon) -> SparseFeatureVector {
    let mut pos = 0.0;
    let mut neg = 0.0;
    let mut sum = 0.0;
    let mut max: Option<f64> = None;
    let mut last = 0.0;
    for t in tokens {
        if let Some(s) = lexicon.score(t.as_ref()) {
            if s > 0.0 {
                pos += 1.0;
            } else if s < 0.0 {
                neg += 1.0;
            }
            sum += s;
            max = Some(max.map_or(s, |m: f64| m.max(s)));
            last = s;
        }
    }
    let name = &lexicon.name;
    let mut v = SparseFeatureVector::new();
    v.set(format!("lex:{}:pos_count", name), pos);
    v.set(format!("lex:{}:neg_count", name), neg);
    v.set(format!("lex:{}:sum", name), sum);
    v.set(format!("lex:{}:max", name), max.unwrap_or(0.0));
    v.set(format!("lex:{}:last", name), last);
    v
}

pub fn cluster_family(k: usize) -> String {
    format!("clus{}", k)
}

fn cluster_value(lexicon: &Lexicon, word: &str) -> String {
    lexicon
        .assign(word)
        .map_or_else(|| "oov".to_owned(), |id| id.to_string())
}

/// Bag of clusters: one `clus<k>:<id>` count per token, `clus<k>:oov` for
/// words without a cluster.
pub fn cluster_bag_features<S: AsRef<str>>(tokens: &[S], lexicon: &Lexicon) -> SparseFeatureVector {
    let family = cluster_family(lexicon.k());
    let mut v = SparseFeatureVector::new();
    for t in tokens {
        v.add(format!("{}:{}", family, cluster_value(lexicon, t.as_ref())), 1.0);
    }
    v
}

/// Per-position cluster features over a `[-window, +window]` context.
/// Offsets that fall outside the sequence emit nothing.
pub fn cluster_window_features<S: AsRef<str>>(
    tokens: &[S],
    lexicon: &Lexicon,
    window: usize,
) -> Vec<Vec<String>> {
    let family = cluster_family(lexicon.k());
    let ids: Vec<String> = tokens.iter().map(|t| cluster_value(lexicon, t.as_ref())).collect();
    let w = window as i64;
    (0..tokens.len() as i64)
        .map(|i| {
            (-w..=w)
                .filter_map(|o| {
                    let j = i + o;
                    (j >= 0 && (j as usize) < ids.len())
                        .then(|| format!("{}[{}]:{}", family, o, ids[j as usize]))
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClusterFeatureMode {
    /// Sentence-level counts.
    Bag,
    /// Per-token categorical features with this context half-width.
    PerToken { window: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub enum ClusterFeatures {
    Bag(SparseFeatureVector),
    PerToken(Vec<Vec<String>>),
}

pub fn cluster_membership_features<S: AsRef<str>>(
    tokens: &[S],
    lexicon: &Lexicon,
    mode: ClusterFeatureMode,
) -> ClusterFeatures {
    match mode {
        ClusterFeatureMode::Bag => ClusterFeatures::Bag(cluster_bag_features(tokens, lexicon)),
        ClusterFeatureMode::PerToken { window } => {
            ClusterFeatures::PerToken(cluster_window_features(tokens, lexicon, window))
        }
    }
}

/// Shape flags per token: `cap:initial`, `cap:all_caps`, `cap:digit`, `cap:punct`.
pub fn capitalization_features<S: AsRef<str>>(tokens: &[S]) -> Vec<Vec<String>> {
    tokens.iter().map(|t| token_shape(t.as_ref())).collect()
}

fn token_shape(token: &str) -> Vec<String> {
    let mut out = Vec::new();
    if token.chars().next().is_some_and(char::is_uppercase) {
        out.push("cap:initial".to_owned());
    }
    let mut letters = token.chars().filter(|c| c.is_alphabetic()).peekable();
    if letters.peek().is_some() && letters.all(|c| !c.is_lowercase()) {
        out.push("cap:all_caps".to_owned());
    }
    if token.chars().any(|c| c.is_numeric()) {
        out.push("cap:digit".to_owned());
    }
    if !token.is_empty() && token.chars().all(|c| !c.is_alphanumeric()) {
        out.push("cap:punct".to_owned());
    }
    out
}

/// Key-wise sum of all vectors.
pub fn combine<'a, I>(vectors: I) -> SparseFeatureVector
where
    I: IntoIterator<Item = &'a SparseFeatureVector>,
{
    let mut out = SparseFeatureVector::new();
    for v in vectors {
        for (k, x) in v.iter() {
            out.add(k, x);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sfv(entries: &[(&str, f64)]) -> SparseFeatureVector {
        entries.iter().map(|&(k, v)| (k, v)).collect()
    }

    fn lexicon(entries: &[(&str, usize)], k: usize) -> Lexicon {
        Lexicon::new(k, entries.iter().map(|&(w, c)| (w.to_owned(), c)).collect()).unwrap()
    }

    #[test]
    fn ngrams() {
        assert_eq!(
            ngram_features(&["a", "b"], 1, 2),
            sfv(&[("ng1:a", 1.0), ("ng1:b", 1.0), ("ng2:a_b", 1.0)])
        );
        assert!(ngram_features::<&str>(&[], 1, 3).is_empty());
        assert_eq!(ngram_features(&["a", "a"], 1, 1), sfv(&[("ng1:a", 2.0)]));
    }

    #[test]
    fn char_ngrams() {
        assert_eq!(char_ngram_features("ab", 2, 2), sfv(&[("cg2:ab", 1.0)]));
        assert_eq!(char_ngram_features("aaa", 2, 2), sfv(&[("cg2:aa", 2.0)]));
        assert!(char_ngram_features("", 3, 5).is_empty());
        assert_eq!(char_ngram_features("é b", 3, 3), sfv(&[("cg3:é b", 1.0)]));
    }

    #[test]
    fn lexicon_aggregates() {
        let lex = SentimentLexicon::new(
            "L",
            [("good", 1.0), ("awful", -2.0), ("meh", 0.0)]
                .into_iter()
                .map(|(w, s)| (w.to_owned(), s))
                .collect(),
        )
        .unwrap();
        assert!(lexicon_features(&["the", "cat"], &lex).is_empty());
        assert_eq!(
            lexicon_features(&["good"], &lex),
            sfv(&[
                ("lex:L:pos_count", 1.0),
                ("lex:L:sum", 1.0),
                ("lex:L:max", 1.0),
                ("lex:L:last", 1.0)
            ])
        );
        let v = lexicon_features(&["good", "x", "awful"], &lex);
        assert_eq!(v.get("lex:L:sum"), -1.0);
        assert_eq!(v.get("lex:L:pos_count"), 1.0);
        assert_eq!(v.get("lex:L:neg_count"), 1.0);
        assert_eq!(v.get("lex:L:max"), 1.0);
        assert_eq!(v.get("lex:L:last"), -2.0);
        // A zero-scored hit resets `last`.
        assert_eq!(lexicon_features(&["awful", "meh"], &lex).get("lex:L:last"), 0.0);
    }

    #[test]
    fn lexicon_tsv() {
        let lex = SentimentLexicon::read_tsv("bing", "# comment\ngood\t1\nbad\t-1\n".as_bytes()).unwrap();
        assert_eq!(lex.score("bad"), Some(-1.0));
        assert!(matches!(
            SentimentLexicon::read_tsv("x", "good 1\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(SentimentLexicon::read_tsv("x", "good\tinf\n".as_bytes()).is_err());
    }

    #[test]
    fn cluster_bag() {
        let lex = lexicon(&[("good", 17)], 500);
        assert_eq!(cluster_bag_features(&["x", "y"], &lex), sfv(&[("clus500:oov", 2.0)]));
        assert_eq!(cluster_bag_features(&["good"], &lex), sfv(&[("clus500:17", 1.0)]));
    }

    #[test]
    fn cluster_window() {
        let lex = lexicon(&[("a", 0), ("b", 1), ("c", 2)], 3);
        let per = cluster_window_features(&["a", "b", "c"], &lex, 1);
        assert_eq!(per[1], vec!["clus3[-1]:0", "clus3[0]:1", "clus3[1]:2"]);
        assert_eq!(per[0], vec!["clus3[0]:0", "clus3[1]:1"]);
        for f in &per[1] {
            let n = FeatureName::parse(f).unwrap();
            assert_eq!(n.k, Some(3));
            assert!(n.offset.is_some());
        }
        match cluster_membership_features(&["q"], &lex, ClusterFeatureMode::PerToken { window: 2 }) {
            ClusterFeatures::PerToken(p) => assert_eq!(p, vec![vec!["clus3[0]:oov".to_owned()]]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn shapes() {
        let caps = capitalization_features(&["CLUB", "tonite", "90", "...", "Dj", "A1"]);
        assert_eq!(caps[0], vec!["cap:initial", "cap:all_caps"]);
        assert!(caps[1].is_empty());
        assert_eq!(caps[2], vec!["cap:digit"]);
        assert_eq!(caps[3], vec!["cap:punct"]);
        assert_eq!(caps[4], vec!["cap:initial"]);
        assert_eq!(caps[5], vec!["cap:initial", "cap:all_caps", "cap:digit"]);
    }

    #[test]
    fn combine_sums() {
        let v = sfv(&[("a", 1.0), ("b", 2.0)]);
        assert_eq!(combine([&v, &SparseFeatureVector::new()]), v);
        assert_eq!(combine([&sfv(&[("a", 1.0)]), &sfv(&[("a", 2.0)])]), sfv(&[("a", 3.0)]));
        assert!(combine([&sfv(&[("a", 1.0)]), &sfv(&[("a", -1.0)])]).is_empty());
    }

    #[test]
    fn feature_name_parsing() {
        let n = FeatureName::parse("clus500:17").unwrap();
        assert_eq!((n.family, n.k, n.offset, n.detail), ("clus500", Some(500), None, "17"));
        let n = FeatureName::parse("clus8[-2]:oov").unwrap();
        assert_eq!((n.k, n.offset), (Some(8), Some(-2)));
        let n = FeatureName::parse("lex:bing:sum").unwrap();
        assert_eq!((n.family, n.detail), ("lex", "bing:sum"));
        assert!(FeatureName::parse("nocolon").is_none());
        assert!(FeatureName::parse("clusX:1").is_none());
    }

    proptest! {
        #[test]
        fn combine_is_order_independent(
            a in prop::collection::btree_map("[a-c]{1,2}", -3i32..3, 0..6),
            b in prop::collection::btree_map("[a-c]{1,2}", -3i32..3, 0..6),
        ) {
            let va: SparseFeatureVector = a.iter().map(|(k, &v)| (k.clone(), v as f64)).collect();
            let vb: SparseFeatureVector = b.iter().map(|(k, &v)| (k.clone(), v as f64)).collect();
            let ab = combine([&va, &vb]);
            prop_assert_eq!(&ab, &combine([&vb, &va]));
            prop_assert!(ab.iter().all(|(_, v)| v != 0.0));
        }

        #[test]
        fn bag_counts_sum_to_length(tokens in prop::collection::vec("[a-e]", 0..20)) {
            let lex = lexicon(&[("a", 0), ("b", 1), ("c", 1)], 2);
            let v = cluster_bag_features(&tokens, &lex);
            let total: f64 = v.iter().map(|(_, x)| x).sum();
            prop_assert_eq!(total, tokens.len() as f64);
            for name in v.names() {
                prop_assert!(FeatureName::parse(name).unwrap().is_cluster());
            }
            prop_assert_eq!(v, cluster_bag_features(&tokens, &lex));
        }

        #[test]
        fn emitted_names_parse(tokens in prop::collection::vec("[a-zA-Z0-9:_]{1,5}", 0..8)) {
            let mut all = vec![ngram_features(&tokens, 1, 3), char_ngram_features(&tokens.join(" "), 3, 5)];
            let lex = SentimentLexicon::new("L", [("a".to_owned(), 1.0)].into_iter().collect()).unwrap();
            all.push(lexicon_features(&tokens, &lex));
            for v in &all {
                for name in v.names() {
                    prop_assert!(FeatureName::parse(name).is_some(), "unparseable {}", name);
                }
            }
            for list in capitalization_features(&tokens) {
                for name in list {
                    prop_assert!(FeatureName::parse(&name).is_some());
                }
            }
        }
    }
}
