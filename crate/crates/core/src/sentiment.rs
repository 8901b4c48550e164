//! Ordinal sentiment classification and macro-averaged MAE.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use log::warn;
use rayon::prelude::*;

use crate::cluster::Lexicon;
use crate::error::{Error, Result};
use crate::features::{self, SentimentLexicon, SparseFeatureVector};
use crate::linmodel::{self, LinearModel, TrainConfig, TrainReport};
use crate::report::{digest_bytes, RunReport};
use crate::textprep::{self, PreprocessRules};

pub const FIVE_POINT: [&str; 5] = ["VeryNegative", "Negative", "Neutral", "Positive", "VeryPositive"];

/// Ordered classes; the rank of a class is its position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrdinalScale {
    classes: Vec<String>,
}

impl OrdinalScale {
    pub fn new<I, S>(classes: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let classes: Vec<String> = classes.into_iter().map(Into::into).collect();
        if classes.len() < 2 {
            return Err(Error::Config("an ordinal scale needs at least two classes".into()));
        }
        for (i, c) in classes.iter().enumerate() {
            if c.is_empty() || c.contains(char::is_whitespace) {
                return Err(Error::Config("class names must be non-empty words".into()));
            }
            if classes[..i].contains(c) {
                return Err(Error::Config(format!("duplicate class '{}'", c)));
            }
        }
        Ok(OrdinalScale { classes })
    }

    pub fn five_point() -> Self {
        Self::new(FIVE_POINT).expect("valid scale")
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn rank(&self, class: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == class)
    }

    fn rank_or_err(&self, class: &str) -> Result<usize> {
        self.rank(class)
            .ok_or_else(|| Error::Input(format!("'{}' is not a class of the scale", class)))
    }
}

impl Default for OrdinalScale {
    fn default() -> Self {
        Self::five_point()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaeMacro {
    pub value: f64,
    /// Mean absolute rank error per scale class; `None` when the class has no
    /// gold items.
    pub per_class: Vec<Option<f64>>,
    /// Scale classes absent from the gold labels (excluded from the average).
    pub skipped: Vec<String>,
}

/// Macro-averaged mean absolute error with details. For each class present in
/// `gold`, the mean of `|rank(pred) - rank(gold)|` over its items; the result
/// is the unweighted mean over those classes.
pub fn mae_macro_detailed<S: AsRef<str>, T: AsRef<str>>(gold: &[S], pred: &[T], scale: &OrdinalScale) -> Result<MaeMacro> {
    if gold.len() != pred.len() {
        return Err(Error::Input(format!(
            "{} gold labels but {} predictions",
            gold.len(),
            pred.len()
        )));
    }
    if gold.is_empty() {
        return Err(Error::Input("cannot score an empty sample".into()));
    }
    let mut sums = vec![0.0; scale.len()];
    let mut counts = vec![0usize; scale.len()];
    for (g, p) in gold.iter().zip(pred) {
        let g = scale.rank_or_err(g.as_ref())?;
        let p = scale.rank_or_err(p.as_ref())?;
        sums[g] += g.abs_diff(p) as f64;
        counts[g] += 1;
    }
    let per_class: Vec<Option<f64>> = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &n)| (n > 0).then(|| s / n as f64))
        .collect();
    let skipped: Vec<String> = counts
        .iter()
        .zip(scale.classes())
        .filter(|(&n, _)| n == 0)
        .map(|(_, c)| c.clone())
        .collect();
    if !skipped.is_empty() {
        warn!("classes without gold items skipped in MAE^M: {}", skipped.join(", "));
    }
    let present: Vec<f64> = per_class.iter().flatten().copied().collect();
    Ok(MaeMacro {
        value: present.iter().sum::<f64>() / present.len() as f64,
        per_class,
        skipped,
    })
}

pub fn mae_macro<S: AsRef<str>, T: AsRef<str>>(gold: &[S], pred: &[T], scale: &OrdinalScale) -> Result<f64> {
    mae_macro_detailed(gold, pred, scale).map(|m| m.value)
}

/// One row of the sentiment corpus TSV `id<TAB>subject<TAB>label<TAB>text`.
/// An optional fifth column holds space-separated part-of-speech tags.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SentimentItem {
    pub id: String,
    pub subject: String,
    pub label: String,
    pub text: String,
    pub pos_tags: Vec<String>,
}

pub fn read_sentiment_tsv<R: BufRead>(reader: R) -> Result<Vec<SentimentItem>> {
    let mut items = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.splitn(5, '\t').collect();
        if cols.len() < 4 {
            return Err(Error::parse(i + 1, "expected id<TAB>subject<TAB>label<TAB>text"));
        }
        if cols[2].is_empty() {
            return Err(Error::parse(i + 1, "empty label"));
        }
        items.push(SentimentItem {
            id: cols[0].to_owned(),
            subject: cols[1].to_owned(),
            label: cols[2].to_owned(),
            text: cols[3].to_owned(),
            pos_tags: cols
                .get(4)
                .map(|p| p.split_whitespace().map(str::to_owned).collect())
                .unwrap_or_default(),
        });
    }
    Ok(items)
}

pub fn load_sentiment_tsv(path: impl AsRef<Path>) -> Result<Vec<SentimentItem>> {
    read_sentiment_tsv(BufReader::new(File::open(path)?))
}

/// Which feature families the sentence-level pipeline extracts.
#[derive(Clone, Debug, PartialEq)]
pub struct SentimentFeatureConfig {
    pub rules: PreprocessRules,
    pub word_ngrams: Option<(usize, usize)>,
    pub char_ngrams: Option<(usize, usize)>,
    pub lexicons: Vec<SentimentLexicon>,
    pub clusters: Option<Lexicon>,
    pub pos_counts: bool,
    /// Replace counts by presence indicators.
    pub binary: bool,
}

impl Default for SentimentFeatureConfig {
    fn default() -> Self {
        SentimentFeatureConfig {
            rules: PreprocessRules::sentiment(),
            word_ngrams: Some((1, 3)),
            char_ngrams: Some((3, 5)),
            lexicons: Vec::new(),
            clusters: None,
            pos_counts: true,
            binary: false,
        }
    }
}

fn check_range(name: &str, range: Option<(usize, usize)>) -> Result<()> {
    match range {
        Some((lo, hi)) if lo == 0 || lo > hi => Err(Error::Config(format!(
            "{} range {}..={} must satisfy 1 <= lo <= hi",
            name, lo, hi
        ))),
        _ => Ok(()),
    }
}

impl SentimentFeatureConfig {
    pub fn validate(&self) -> Result<()> {
        check_range("word n-gram", self.word_ngrams)?;
        check_range("char n-gram", self.char_ngrams)
    }

    pub fn featurize(&self, text: &str, pos_tags: &[String]) -> SparseFeatureVector {
        let prepared = textprep::preprocess(text, &self.rules);
        let tokens = textprep::tokenize(&prepared);
        let surfaces = textprep::surfaces(&tokens);
        let mut parts = Vec::new();
        if let Some((lo, hi)) = self.word_ngrams {
            parts.push(features::ngram_features(&surfaces, lo, hi));
        }
        if let Some((lo, hi)) = self.char_ngrams {
            parts.push(features::char_ngram_features(&prepared, lo, hi));
        }
        for lex in &self.lexicons {
            parts.push(features::lexicon_features(&surfaces, lex));
        }
        if let Some(clusters) = &self.clusters {
            parts.push(features::cluster_bag_features(&surfaces, clusters));
        }
        if self.pos_counts {
            parts.push(pos_tags.iter().map(|t| (format!("posc:{}", t), 1.0)).collect());
        }
        let mut v = features::combine(&parts);
        if self.binary {
            v.binarize();
        }
        v
    }

    /// Canonical description of the configuration, used for fingerprints.
    pub fn describe(&self) -> RunReport {
        let range = |r: Option<(usize, usize)>| r.map_or("off".to_owned(), |(a, b)| format!("{}-{}", a, b));
        let mut r = RunReport::new();
        r.set("features.lowercase", self.rules.lowercase);
        r.set("features.pad_punctuation", self.rules.pad_punctuation);
        r.set("features.url_placeholder", self.rules.url_placeholder());
        r.set("features.word_ngrams", range(self.word_ngrams));
        r.set("features.char_ngrams", range(self.char_ngrams));
        r.set(
            "features.lexicons",
            self.lexicons.iter().map(|l| l.name.as_str()).collect::<Vec<_>>().join(","),
        );
        match &self.clusters {
            Some(lex) => {
                r.set("features.clusters", format!("k={}", lex.k()));
                r.set("features.clusters_digest", lexicon_digest(lex));
            }
            None => r.set("features.clusters", "off"),
        }
        r.set("features.pos_counts", self.pos_counts);
        r.set("features.binary", self.binary);
        r
    }
}

pub fn lexicon_digest(lexicon: &Lexicon) -> String {
    let mut buf = Vec::new();
    lexicon.write_tsv(&mut buf, &[]).expect("writing to memory");
    digest_bytes(&buf)
}

pub fn describe_train_config(config: &TrainConfig) -> RunReport {
    let mut r = RunReport::new();
    r.set("train.l2", config.l2_strength);
    r.set("train.epochs", config.epochs);
    r.set("train.learning_rate", config.learning_rate);
    r.set("train.decay", config.decay);
    r.set("train.seed", config.seed);
    r.set("train.shuffle", config.shuffle);
    r
}

/// Featurizes items in parallel, preserving order.
pub fn featurize_items(items: &[SentimentItem], config: &SentimentFeatureConfig) -> Vec<SparseFeatureVector> {
    items.par_iter().map(|it| config.featurize(&it.text, &it.pos_tags)).collect()
}

/// Trains the classifier with classes in scale order.
pub fn train_classifier(
    train: &[SentimentItem],
    features: &SentimentFeatureConfig,
    config: &TrainConfig,
    scale: &OrdinalScale,
) -> Result<(LinearModel, TrainReport)> {
    features.validate()?;
    for it in train {
        scale.rank_or_err(&it.label)?;
    }
    let vectors = featurize_items(train, features);
    let dataset: Vec<(SparseFeatureVector, String)> = vectors
        .into_iter()
        .zip(train)
        .map(|(v, it)| (v, it.label.clone()))
        .collect();
    linmodel::train_with_classes(&dataset, scale.classes(), config)
}

#[derive(Clone, Debug)]
pub struct SentimentRun {
    pub model: LinearModel,
    pub train_report: TrainReport,
    /// `(item id, predicted label)` in test order.
    pub predictions: Vec<(String, String)>,
    pub mae: MaeMacro,
    pub report: RunReport,
}

/// Preprocess, featurize, train, predict and score.
pub fn run_sentiment_pipeline(
    train: &[SentimentItem],
    test: &[SentimentItem],
    features: &SentimentFeatureConfig,
    config: &TrainConfig,
    scale: &OrdinalScale,
) -> Result<SentimentRun> {
    let (model, train_report) = train_classifier(train, features, config, scale)?;
    let vectors = featurize_items(test, features);
    let predictions: Vec<(String, String)> = vectors
        .iter()
        .zip(test)
        .map(|(v, it)| (it.id.clone(), model.predict(v).to_owned()))
        .collect();
    let gold: Vec<&str> = test.iter().map(|it| it.label.as_str()).collect();
    let pred: Vec<&str> = predictions.iter().map(|(_, p)| p.as_str()).collect();
    let mae = mae_macro_detailed(&gold, &pred, scale)?;

    let mut config_desc = features.describe();
    config_desc.extend(&describe_train_config(config));
    config_desc.set("scale", scale.classes().join(","));
    let mut report = RunReport::new();
    report.set("task", "sent-class");
    report.set("config_fingerprint", config_desc.fingerprint());
    report.extend(&config_desc);
    report.set("n_train", train.len());
    report.set("n_test", test.len());
    report.set("n_features", model.num_features());
    report.set("final_objective", train_report.final_objective);
    report.set("mae_macro", mae.value);
    report.set("skipped_classes", mae.skipped.join(","));
    Ok(SentimentRun {
        model,
        train_report,
        predictions,
        mae,
        report,
    })
}

/// Items grouped by subject, in subject order.
pub fn group_by_subject(items: &[SentimentItem]) -> BTreeMap<&str, Vec<&SentimentItem>> {
    let mut groups: BTreeMap<&str, Vec<&SentimentItem>> = BTreeMap::new();
    for it in items {
        groups.entry(it.subject.as_str()).or_default().push(it);
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_cases() {
        let s = OrdinalScale::five_point();
        assert_eq!(mae_macro(&["Neutral", "Positive"], &["Neutral", "Positive"], &s).unwrap(), 0.0);
        let m = mae_macro_detailed(&["Neutral", "Neutral"], &["Positive", "Negative"], &s).unwrap();
        assert_eq!(m.value, 1.0);
        assert_eq!(m.skipped.len(), 4);
        assert_eq!(mae_macro(&["VeryNegative"], &["VeryPositive"], &s).unwrap(), 4.0);
        // Imbalance: 3 correct majority items do not dilute the minority error.
        let g = ["Neutral", "Neutral", "Neutral", "Positive"];
        let p = ["Neutral", "Neutral", "Neutral", "VeryNegative"];
        assert_eq!(mae_macro(&g, &p, &s).unwrap(), 1.5);
    }

    #[test]
    fn errors() {
        let s = OrdinalScale::five_point();
        assert!(mae_macro::<&str, &str>(&[], &[], &s).is_err());
        assert!(mae_macro(&["Neutral"], &["Neutral", "Neutral"], &s).is_err());
        assert!(mae_macro(&["Meh"], &["Neutral"], &s).is_err());
        assert!(OrdinalScale::new(["a"]).is_err());
        assert!(OrdinalScale::new(["a", "a"]).is_err());
    }

    #[test]
    fn corpus_parsing() {
        let text = "1\tiphone\tPositive\tlove it !\n2\tiphone\tNegative\tmeh\tNN\n";
        let items = read_sentiment_tsv(text.as_bytes()).unwrap();
        assert_eq!(items.len(), 2);
        assert_eq!(items[1].pos_tags, vec!["NN"]);
        assert!(matches!(
            read_sentiment_tsv("1\tx\tPositive\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn featurize_families() {
        let lex = Lexicon::new(3, [("love".to_owned(), 2)].into_iter().collect()).unwrap();
        let cfg = SentimentFeatureConfig {
            clusters: Some(lex),
            ..SentimentFeatureConfig::default()
        };
        let v = cfg.featurize("I LOVE it http://x.y", &["PRP".into()]);
        assert_eq!(v.get("ng1:love"), 1.0);
        assert_eq!(v.get("ng1:<url>"), 1.0);
        assert_eq!(v.get("clus3:2"), 1.0);
        assert_eq!(v.get("clus3:oov"), 3.0);
        assert_eq!(v.get("posc:PRP"), 1.0);
        assert!(v.get("cg3:lov") > 0.0);

        let without = SentimentFeatureConfig {
            clusters: None,
            ..cfg.clone()
        }
        .featurize("I LOVE it http://x.y", &["PRP".into()]);
        let mut stripped = v.clone();
        stripped.retain_families(|f| !f.starts_with("clus"));
        assert_eq!(stripped, without);
        assert_ne!(cfg.describe().fingerprint(), SentimentFeatureConfig::default().describe().fingerprint());
    }

    #[test]
    fn memorizes_separable_data() {
        let items: Vec<SentimentItem> = FIVE_POINT
            .iter()
            .enumerate()
            .flat_map(|(r, label)| {
                (0..4).map(move |j| SentimentItem {
                    id: format!("{}-{}", r, j),
                    subject: "s".into(),
                    label: (*label).to_owned(),
                    text: format!("marker{} filler{}", r, j),
                    pos_tags: Vec::new(),
                })
            })
            .collect();
        let run = run_sentiment_pipeline(
            &items,
            &items,
            &SentimentFeatureConfig::default(),
            &TrainConfig::default(),
            &OrdinalScale::five_point(),
        )
        .unwrap();
        assert_eq!(run.mae.value, 0.0);
        assert_eq!(run.report.get("mae_macro"), Some("0"));
        assert_eq!(run.predictions.len(), items.len());
    }
}
