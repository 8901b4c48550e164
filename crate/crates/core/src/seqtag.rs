//! BIO entity tagging.
//!
//! The tagger is a greedy left-to-right classifier: each position is labeled
//! by a [`LinearModel`] over that position's features plus the tag assigned to
//! the previous position. Training conditions on the gold previous tag,
//! decoding on the predicted one.
//!
//! Decoding of tag sequences follows the CoNLL convention: an `I-t` that does
//! not continue a `t` entity opens a new one. The tagger applies the same
//! repair to its own output, so every tag sequence it emits is well formed.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use crate::cluster::Lexicon;
use crate::error::{Error, Result};
use crate::features::{self, SparseFeatureVector};
use crate::linmodel::{self, LinearModel, TrainConfig, TrainReport};
use crate::textprep::Token;

/// Entity type used when only entity boundaries matter.
pub const GENERIC_TYPE: &str = "entity";

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BioTag {
    O,
    B(String),
    I(String),
}

impl BioTag {
    pub fn entity_type(&self) -> Option<&str> {
        match self {
            BioTag::O => None,
            BioTag::B(t) | BioTag::I(t) => Some(t),
        }
    }

    /// The same tag with its type replaced by [`GENERIC_TYPE`].
    pub fn generic(&self) -> BioTag {
        match self {
            BioTag::O => BioTag::O,
            BioTag::B(_) => BioTag::B(GENERIC_TYPE.to_owned()),
            BioTag::I(_) => BioTag::I(GENERIC_TYPE.to_owned()),
        }
    }
}

impl fmt::Display for BioTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BioTag::O => f.write_str("O"),
            BioTag::B(t) => write!(f, "B-{}", t),
            BioTag::I(t) => write!(f, "I-{}", t),
        }
    }
}

impl FromStr for BioTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "O" {
            return Ok(BioTag::O);
        }
        match s.split_once('-') {
            Some(("B", t)) if !t.is_empty() => Ok(BioTag::B(t.to_owned())),
            Some(("I", t)) if !t.is_empty() => Ok(BioTag::I(t.to_owned())),
            _ => Err(Error::Input(format!("'{}' is not a BIO tag", s))),
        }
    }
}

/// Entity types and the labels derived from them: `O`, then `B-t`, `I-t` per type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TagScheme {
    entity_types: Vec<String>,
    labels: Vec<BioTag>,
}

impl TagScheme {
    pub fn new<I, S>(entity_types: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let entity_types: Vec<String> = entity_types.into_iter().map(Into::into).collect();
        let unique: BTreeSet<&String> = entity_types.iter().collect();
        if unique.len() != entity_types.len() {
            return Err(Error::Config("duplicate entity types".into()));
        }
        if entity_types
            .iter()
            .any(|t| t.is_empty() || t.contains(char::is_whitespace))
        {
            return Err(Error::Config("entity types must be non-empty words".into()));
        }
        let mut labels = vec![BioTag::O];
        for t in &entity_types {
            labels.push(BioTag::B(t.clone()));
            labels.push(BioTag::I(t.clone()));
        }
        Ok(TagScheme {
            entity_types,
            labels,
        })
    }

    /// Single generic type: labels `O`, `B-entity`, `I-entity`.
    pub fn segmentation() -> Self {
        Self::new([GENERIC_TYPE]).expect("valid scheme")
    }

    /// Scheme over the sorted set of types found in `sequences`.
    pub fn infer(sequences: &[TaggedSequence]) -> Self {
        let types: BTreeSet<&str> = sequences
            .iter()
            .flat_map(|s| s.tags.iter().filter_map(BioTag::entity_type))
            .collect();
        Self::new(types).expect("types from parsed tags are valid")
    }

    pub fn entity_types(&self) -> &[String] {
        &self.entity_types
    }

    pub fn labels(&self) -> &[BioTag] {
        &self.labels
    }

    pub fn contains(&self, tag: &BioTag) -> bool {
        self.labels.contains(tag)
    }
}

/// Optional per-token annotation columns.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Annotation {
    pub pos: Option<String>,
    pub gazetteer: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaggedSequence {
    pub tokens: Vec<Token>,
    pub tags: Vec<BioTag>,
    /// Empty, or one entry per token.
    pub annotations: Vec<Annotation>,
}

impl TaggedSequence {
    pub fn new(tokens: Vec<Token>, tags: Vec<BioTag>) -> Result<Self> {
        Self::with_annotations(tokens, tags, Vec::new())
    }

    pub fn with_annotations(tokens: Vec<Token>, tags: Vec<BioTag>, annotations: Vec<Annotation>) -> Result<Self> {
        if tokens.len() != tags.len() {
            return Err(Error::Input(format!(
                "{} tokens but {} tags",
                tokens.len(),
                tags.len()
            )));
        }
        if !annotations.is_empty() && annotations.len() != tokens.len() {
            return Err(Error::Input("annotations must align with tokens".into()));
        }
        Ok(TaggedSequence {
            tokens,
            tags,
            annotations,
        })
    }

    /// Builds a sequence from surfaces and tag strings.
    pub fn from_strs(surfaces: &[&str], tags: &[&str]) -> Result<Self> {
        let tokens = surfaces.iter().enumerate().map(|(i, s)| Token::new(*s, i)).collect();
        let tags = tags.iter().map(|t| t.parse()).collect::<Result<Vec<_>>>()?;
        Self::new(tokens, tags)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn spans(&self) -> Vec<EntitySpan> {
        decode_bio(&self.tags)
    }

    /// Copy with every entity type collapsed to [`GENERIC_TYPE`].
    pub fn generic(&self) -> Self {
        TaggedSequence {
            tags: self.tags.iter().map(BioTag::generic).collect(),
            ..self.clone()
        }
    }

    fn annotation(&self, i: usize) -> Option<&Annotation> {
        self.annotations.get(i)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntitySpan {
    pub start: usize,
    /// Exclusive.
    pub end: usize,
    pub entity_type: String,
}

impl EntitySpan {
    pub fn new(start: usize, end: usize, entity_type: impl Into<String>) -> Self {
        EntitySpan {
            start,
            end,
            entity_type: entity_type.into(),
        }
    }
}

/// Maximal `B-t I-t*` runs become spans; an orphan `I-t` opens a new span.
pub fn decode_bio(tags: &[BioTag]) -> Vec<EntitySpan> {
    let mut spans = Vec::new();
    let mut open: Option<(usize, &str)> = None;
    for (i, tag) in tags.iter().enumerate() {
        match tag {
            BioTag::O => {
                if let Some((s, t)) = open.take() {
                    spans.push(EntitySpan::new(s, i, t));
                }
            }
            BioTag::B(t) => {
                if let Some((s, ot)) = open.take() {
                    spans.push(EntitySpan::new(s, i, ot));
                }
                open = Some((i, t));
            }
            BioTag::I(t) => match open {
                Some((_, ot)) if ot == t => {}
                _ => {
                    if let Some((s, ot)) = open.take() {
                        spans.push(EntitySpan::new(s, i, ot));
                    }
                    open = Some((i, t));
                }
            },
        }
    }
    if let Some((s, t)) = open {
        spans.push(EntitySpan::new(s, tags.len(), t));
    }
    spans
}

/// Tags for `length` tokens carrying `spans`. Spans may be given in any order
/// but must not overlap.
pub fn encode_bio(spans: &[EntitySpan], length: usize, scheme: &TagScheme) -> Result<Vec<BioTag>> {
    let mut sorted: Vec<&EntitySpan> = spans.iter().collect();
    sorted.sort();
    let mut tags = vec![BioTag::O; length];
    let mut covered_to = 0;
    for span in sorted {
        if span.start >= span.end || span.end > length {
            return Err(Error::Input(format!(
                "span {}..{} is empty or exceeds length {}",
                span.start, span.end, length
            )));
        }
        if span.start < covered_to {
            return Err(Error::Input(format!("span {}..{} overlaps a previous span", span.start, span.end)));
        }
        if !scheme.entity_types.contains(&span.entity_type) {
            return Err(Error::Input(format!("unknown entity type '{}'", span.entity_type)));
        }
        tags[span.start] = BioTag::B(span.entity_type.clone());
        for tag in &mut tags[span.start + 1..span.end] {
            *tag = BioTag::I(span.entity_type.clone());
        }
        covered_to = span.end;
    }
    Ok(tags)
}

/// Replaces an `I-t` that cannot continue `prev` with `B-t`.
pub fn repair_transition(prev: Option<&BioTag>, tag: BioTag) -> BioTag {
    match tag {
        BioTag::I(t) => match prev {
            Some(BioTag::B(p)) | Some(BioTag::I(p)) if *p == t => BioTag::I(t),
            _ => BioTag::B(t),
        },
        other => other,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct F1Score {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub predicted: usize,
    pub gold: usize,
}

/// Exact-match entity scoring: a predicted span is correct iff a gold span
/// has the same start, end and type. Empty denominators give 0.
pub fn entity_f1(gold: &[TaggedSequence], pred: &[TaggedSequence]) -> Result<F1Score> {
    if gold.len() != pred.len() {
        return Err(Error::Input(format!(
            "{} gold sequences but {} predicted",
            gold.len(),
            pred.len()
        )));
    }
    let (mut tp, mut n_pred, mut n_gold) = (0, 0, 0);
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.len() != p.len() {
            return Err(Error::Input(format!("sequence {} has mismatched lengths", i)));
        }
        let gs: BTreeSet<EntitySpan> = g.spans().into_iter().collect();
        let ps: BTreeSet<EntitySpan> = p.spans().into_iter().collect();
        tp += gs.intersection(&ps).count();
        n_pred += ps.len();
        n_gold += gs.len();
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, n_pred);
    let recall = ratio(tp, n_gold);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(F1Score {
        precision,
        recall,
        f1,
        true_positives: tp,
        predicted: n_pred,
        gold: n_gold,
    })
}

/// Feature families of the tagger.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaggerFeatureConfig {
    /// Half-width of the lowercased word window; `None` disables word features.
    pub word_window: Option<usize>,
    pub capitalization: bool,
    /// Half-width of the cluster window; only used when a lexicon is supplied.
    pub cluster_window: usize,
    pub annotations: bool,
    pub history: bool,
}

impl Default for TaggerFeatureConfig {
    fn default() -> Self {
        TaggerFeatureConfig {
            word_window: Some(2),
            capitalization: true,
            cluster_window: 2,
            annotations: true,
            history: true,
        }
    }
}

impl TaggerFeatureConfig {
    fn describe(&self) -> Vec<String> {
        vec![
            format!(
                "word_window={}",
                self.word_window.map_or("none".to_owned(), |w| w.to_string())
            ),
            format!("capitalization={}", self.capitalization),
            format!("cluster_window={}", self.cluster_window),
            format!("annotations={}", self.annotations),
            format!("history={}", self.history),
        ]
    }
}

const BOS: &str = "<s>";
const EOS: &str = "</s>";

/// Position features that do not depend on the tag history.
fn static_features(
    tokens: &[Token],
    annotations: &[Annotation],
    config: &TaggerFeatureConfig,
    lexicon: Option<&Lexicon>,
) -> Vec<Vec<String>> {
    let n = tokens.len();
    let lower: Vec<String> = tokens.iter().map(|t| t.surface.to_lowercase()).collect();
    let word = |j: i64| -> &str {
        if j < 0 {
            BOS
        } else if j as usize >= n {
            EOS
        } else {
            &lower[j as usize]
        }
    };
    let surfaces: Vec<&str> = tokens.iter().map(|t| t.surface.as_str()).collect();
    let caps = config
        .capitalization
        .then(|| features::capitalization_features(&surfaces));
    let clusters = lexicon.map(|lex| {
        // Embedding vocabularies are often lowercased; fall back to that form.
        let folded: Vec<String> = surfaces
            .iter()
            .map(|s| match lex.assign(s) {
                Some(_) => (*s).to_owned(),
                None => s.to_lowercase(),
            })
            .collect();
        features::cluster_window_features(&folded, lex, config.cluster_window)
    });

    (0..n)
        .map(|i| {
            let mut out = Vec::new();
            if let Some(w) = config.word_window {
                let (i, w) = (i as i64, w as i64);
                for o in -w..=w {
                    out.push(format!("w[{}]:{}", o, word(i + o)));
                }
                out.push(format!("bg[-1]:{}_{}", word(i - 1), word(i)));
                out.push(format!("bg[1]:{}_{}", word(i), word(i + 1)));
            }
            if let Some(caps) = &caps {
                out.extend(caps[i].iter().cloned());
            }
            if let Some(clusters) = &clusters {
                out.extend(clusters[i].iter().cloned());
            }
            if config.annotations {
                if let Some(a) = annotations.get(i) {
                    if let Some(pos) = &a.pos {
                        out.push(format!("pos:{}", pos));
                    }
                    for g in &a.gazetteer {
                        out.push(format!("gaz:{}", g));
                    }
                }
            }
            out
        })
        .collect()
}

fn position_vector(static_feats: &[String], prev: Option<&BioTag>, history: bool) -> SparseFeatureVector {
    let mut v = SparseFeatureVector::from_categorical(static_feats.iter().cloned());
    if history {
        match prev {
            Some(t) => v.add(format!("prev:{}", t), 1.0),
            None => v.add(format!("prev:{}", BOS), 1.0),
        }
    }
    v
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaggerModel {
    scheme: TagScheme,
    features: TaggerFeatureConfig,
    lexicon: Option<Lexicon>,
    model: LinearModel,
}

/// Trains the greedy tagger. Every tag in `sequences` must belong to `scheme`.
pub fn train_tagger(
    sequences: &[TaggedSequence],
    scheme: &TagScheme,
    features: &TaggerFeatureConfig,
    lexicon: Option<&Lexicon>,
    config: &TrainConfig,
) -> Result<(TaggerModel, TrainReport)> {
    if sequences.iter().all(TaggedSequence::is_empty) {
        return Err(Error::Input("no tokens to train on".into()));
    }
    let mut dataset = Vec::new();
    for seq in sequences {
        if let Some(bad) = seq.tags.iter().find(|t| !scheme.contains(t)) {
            return Err(Error::Input(format!("tag '{}' is not in the scheme", bad)));
        }
        let statics = static_features(&seq.tokens, &seq.annotations, features, lexicon);
        for (i, feats) in statics.iter().enumerate() {
            let prev = i.checked_sub(1).map(|j| &seq.tags[j]);
            dataset.push((position_vector(feats, prev, features.history), seq.tags[i].to_string()));
        }
    }
    let classes: Vec<String> = scheme.labels.iter().map(ToString::to_string).collect();
    let distinct: BTreeSet<&str> = dataset.iter().map(|(_, l)| l.as_str()).collect();
    let (model, report) = if distinct.len() < 2 {
        // A corpus with a single label yields a model that always predicts it.
        let mut model = LinearModel::zeros(classes.clone(), Vec::new())?;
        let only = classes
            .iter()
            .position(|c| distinct.contains(c.as_str()))
            .expect("label comes from the scheme");
        let mut params = model.parameters();
        params[only] = 1.0;
        model.set_parameters(&params)?;
        let objective = model.objective(&dataset, config.l2_strength)?;
        (
            model,
            TrainReport {
                objective_trace: Vec::new(),
                final_objective: objective,
            },
        )
    } else {
        linmodel::train_with_classes(&dataset, &classes, config)?
    };
    Ok((
        TaggerModel {
            scheme: scheme.clone(),
            features: features.clone(),
            lexicon: lexicon.cloned(),
            model,
        },
        report,
    ))
}

impl TaggerModel {
    pub fn scheme(&self) -> &TagScheme {
        &self.scheme
    }

    pub fn linear_model(&self) -> &LinearModel {
        &self.model
    }

    pub fn tag(&self, tokens: &[Token]) -> TaggedSequence {
        self.tag_annotated(tokens, &[])
    }

    /// Greedy decoding; `annotations` is empty or aligned with `tokens`.
    pub fn tag_annotated(&self, tokens: &[Token], annotations: &[Annotation]) -> TaggedSequence {
        let statics = static_features(tokens, annotations, &self.features, self.lexicon.as_ref());
        let mut tags: Vec<BioTag> = Vec::with_capacity(tokens.len());
        for feats in &statics {
            let v = position_vector(feats, tags.last(), self.features.history);
            let label = self.scheme.labels[self.model.predict_index(&v)].clone();
            tags.push(repair_transition(tags.last(), label));
        }
        TaggedSequence {
            tokens: tokens.to_vec(),
            tags,
            annotations: annotations.to_vec(),
        }
    }

    /// Tags every sequence of `corpus`, keeping its tokens and annotations.
    pub fn tag_corpus(&self, corpus: &[TaggedSequence]) -> Vec<TaggedSequence> {
        use rayon::prelude::*;
        corpus
            .par_iter()
            .map(|s| self.tag_annotated(&s.tokens, &s.annotations))
            .collect()
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "#tagger\tv1")?;
        writeln!(w, "types\t{}", self.scheme.entity_types.join("\t"))?;
        for line in self.features.describe() {
            writeln!(w, "feature\t{}", line)?;
        }
        writeln!(
            w,
            "clusters\t{}",
            self.lexicon.as_ref().map_or("none".to_owned(), |l| format!("k={}", l.k()))
        )?;
        self.model.write_tsv(w)
    }
}

fn absent(field: &str) -> bool {
    matches!(field, "" | "_" | "-")
}

/// Reads CoNLL-style TSV: `surface<TAB>tag[<TAB>pos][<TAB>gazetteer-flags]`,
/// blank lines between sequences. Gazetteer flags are comma separated; `_`,
/// `-` or an empty field mean no annotation.
pub fn read_conll<R: BufRead>(reader: R) -> Result<Vec<TaggedSequence>> {
    let mut out = Vec::new();
    let mut tokens = Vec::new();
    let mut tags = Vec::new();
    let mut annotations = Vec::new();
    let mut annotated = false;
    let mut flush = |tokens: &mut Vec<Token>, tags: &mut Vec<BioTag>, ann: &mut Vec<Annotation>, annotated: &mut bool| -> Result<()> {
        if !tokens.is_empty() {
            let ann = if *annotated { std::mem::take(ann) } else { ann.clear(); Vec::new() };
            out.push(TaggedSequence::with_annotations(std::mem::take(tokens), std::mem::take(tags), ann)?);
        }
        *annotated = false;
        Ok(())
    };
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut tokens, &mut tags, &mut annotations, &mut annotated)?;
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 2 || cols.len() > 4 {
            return Err(Error::parse(i + 1, "expected 2 to 4 tab-separated columns"));
        }
        if cols[0].is_empty() || cols[0].contains(char::is_whitespace) {
            return Err(Error::parse(i + 1, "token surface must be a non-empty word"));
        }
        let tag: BioTag = cols[1]
            .parse()
            .map_err(|_| Error::parse(i + 1, format!("bad BIO tag '{}'", cols[1])))?;
        let pos = cols.get(2).filter(|p| !absent(p)).map(|p| (*p).to_owned());
        let gazetteer = cols
            .get(3)
            .filter(|g| !absent(g))
            .map(|g| g.split(',').filter(|f| !f.is_empty()).map(str::to_owned).collect())
            .unwrap_or_default();
        annotated |= cols.len() > 2;
        tokens.push(Token::new(cols[0], tokens.len()));
        tags.push(tag);
        annotations.push(Annotation { pos, gazetteer });
    }
    flush(&mut tokens, &mut tags, &mut annotations, &mut annotated)?;
    Ok(out)
}

pub fn load_conll(path: impl AsRef<Path>) -> Result<Vec<TaggedSequence>> {
    read_conll(BufReader::new(File::open(path)?))
}

pub fn write_conll<W: Write>(mut w: W, corpus: &[TaggedSequence]) -> Result<()> {
    for (k, seq) in corpus.iter().enumerate() {
        if k > 0 {
            writeln!(w)?;
        }
        for (i, (tok, tag)) in seq.tokens.iter().zip(&seq.tags).enumerate() {
            write!(w, "{}\t{}", tok.surface, tag)?;
            if let Some(a) = seq.annotation(i) {
                let pos = a.pos.as_deref().unwrap_or("_");
                let gaz = if a.gazetteer.is_empty() { "_".to_owned() } else { a.gazetteer.join(",") };
                write!(w, "\t{}\t{}", pos, gaz)?;
            }
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tags(s: &[&str]) -> Vec<BioTag> {
        s.iter().map(|t| t.parse().unwrap()).collect()
    }

    #[test]
    fn tag_parsing() {
        assert_eq!("O".parse::<BioTag>().unwrap(), BioTag::O);
        assert_eq!("B-person".parse::<BioTag>().unwrap(), BioTag::B("person".into()));
        assert_eq!("I-geo-loc".parse::<BioTag>().unwrap(), BioTag::I("geo-loc".into()));
        assert!("X-y".parse::<BioTag>().is_err());
        assert!("B-".parse::<BioTag>().is_err());
        assert_eq!(BioTag::I("x".into()).to_string(), "I-x");
    }

    #[test]
    fn scheme_labels() {
        let s = TagScheme::new(["person", "facility"]).unwrap();
        assert_eq!(
            s.labels().iter().map(ToString::to_string).collect::<Vec<_>>(),
            vec!["O", "B-person", "I-person", "B-facility", "I-facility"]
        );
        assert!(TagScheme::new(["a", "a"]).is_err());
        assert_eq!(TagScheme::segmentation().labels().len(), 3);
    }

    #[test]
    fn decode_cases() {
        let seq = TaggedSequence::from_strs(&["CLUB", "BLU", "tonite"], &["B-facility", "I-facility", "O"]).unwrap();
        assert_eq!(seq.spans(), vec![EntitySpan::new(0, 2, "facility")]);
        assert!(decode_bio(&tags(&["O", "O"])).is_empty());
        assert_eq!(decode_bio(&tags(&["O", "I-person", "I-person"])), vec![EntitySpan::new(1, 3, "person")]);
        assert_eq!(
            decode_bio(&tags(&["B-a", "I-b", "B-a", "B-a"])),
            vec![
                EntitySpan::new(0, 1, "a"),
                EntitySpan::new(1, 2, "b"),
                EntitySpan::new(2, 3, "a"),
                EntitySpan::new(3, 4, "a")
            ]
        );
    }

    #[test]
    fn encode_cases() {
        let s = TagScheme::new(["t"]).unwrap();
        assert_eq!(encode_bio(&[], 3, &s).unwrap(), vec![BioTag::O; 3]);
        let adjacent = vec![EntitySpan::new(0, 1, "t"), EntitySpan::new(1, 2, "t")];
        let enc = encode_bio(&adjacent, 2, &s).unwrap();
        assert_eq!(enc, tags(&["B-t", "B-t"]));
        assert_eq!(decode_bio(&enc), adjacent);
        assert!(encode_bio(&[EntitySpan::new(0, 2, "t"), EntitySpan::new(1, 3, "t")], 3, &s).is_err());
        assert!(encode_bio(&[EntitySpan::new(0, 4, "t")], 3, &s).is_err());
        assert!(encode_bio(&[EntitySpan::new(1, 1, "t")], 3, &s).is_err());
        assert!(encode_bio(&[EntitySpan::new(0, 1, "u")], 3, &s).is_err());
    }

    #[test]
    fn f1_cases() {
        let gold = TaggedSequence::from_strs(&["a", "b", "c", "d"], &["B-x", "O", "B-y", "I-y"]).unwrap();
        let pred = TaggedSequence::from_strs(&["a", "b", "c", "d"], &["B-x", "O", "B-y", "O"]).unwrap();
        let s = entity_f1(std::slice::from_ref(&gold), &[pred]).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (0.5, 0.5, 0.5));
        let s = entity_f1(std::slice::from_ref(&gold), std::slice::from_ref(&gold)).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
        let none = TaggedSequence::from_strs(&["a", "b", "c", "d"], &["O"; 4]).unwrap();
        let s = entity_f1(std::slice::from_ref(&gold), &[none]).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
        assert!(entity_f1(std::slice::from_ref(&gold), &[]).is_err());
        let short = TaggedSequence::from_strs(&["a"], &["O"]).unwrap();
        assert!(entity_f1(&[gold], &[short]).is_err());
    }

    #[test]
    fn repair() {
        let t = |s: &str| s.parse::<BioTag>().unwrap();
        assert_eq!(repair_transition(None, t("I-a")), t("B-a"));
        assert_eq!(repair_transition(Some(&t("O")), t("I-a")), t("B-a"));
        assert_eq!(repair_transition(Some(&t("B-b")), t("I-a")), t("B-a"));
        assert_eq!(repair_transition(Some(&t("I-a")), t("I-a")), t("I-a"));
        assert_eq!(repair_transition(Some(&t("O")), t("O")), t("O"));
    }

    #[test]
    fn conll_round_trip() {
        let text = "CLUB\tB-facility\tNNP\t_\nBLU\tI-facility\tNNP\tvenue,place\ntonite\tO\tNN\t_\n\ndj\tB-musicartist\nfinese\tI-musicartist\n";
        let corpus = read_conll(text.as_bytes()).unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus[0].annotations[1].gazetteer, vec!["venue", "place"]);
        assert_eq!(corpus[0].annotations[0].pos.as_deref(), Some("NNP"));
        assert!(corpus[1].annotations.is_empty());
        let mut buf = Vec::new();
        write_conll(&mut buf, &corpus).unwrap();
        assert_eq!(read_conll(&buf[..]).unwrap(), corpus);
        assert!(matches!(read_conll("a\n".as_bytes()), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(read_conll("a\tQ\n".as_bytes()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn single_sequence_smoke() {
        let seq = TaggedSequence::from_strs(&["CLUB", "BLU", "tonite"], &["B-facility", "I-facility", "O"]).unwrap();
        let scheme = TagScheme::infer(std::slice::from_ref(&seq));
        let (model, _) = train_tagger(
            std::slice::from_ref(&seq),
            &scheme,
            &TaggerFeatureConfig::default(),
            None,
            &TrainConfig::default(),
        )
        .unwrap();
        let out = model.tag(&seq.tokens);
        assert_eq!(out.len(), 3);
        assert!(out.tags.iter().all(|t| scheme.contains(t)));
        assert!(model.tag(&[]).is_empty());
        let mut buf = Vec::new();
        model.write_tsv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("#tagger\tv1\ntypes\tfacility\n"));
    }

    #[test]
    fn all_outside_corpus() {
        let seq = TaggedSequence::from_strs(&["a", "b"], &["O", "O"]).unwrap();
        let (model, _) = train_tagger(
            std::slice::from_ref(&seq),
            &TagScheme::segmentation(),
            &TaggerFeatureConfig::default(),
            None,
            &TrainConfig::default(),
        )
        .unwrap();
        assert_eq!(model.tag(&seq.tokens).tags, vec![BioTag::O, BioTag::O]);
    }

    fn span_sets() -> impl Strategy<Value = (usize, Vec<EntitySpan>)> {
        (1usize..30, prop::collection::vec((0usize..3, 1usize..4, 0usize..3), 0..8)).prop_map(|(len, raw)| {
            let mut spans = Vec::new();
            let mut cursor = 0;
            for (gap, width, ty) in raw {
                let start = cursor + gap;
                let end = start + width;
                if end > len {
                    break;
                }
                spans.push(EntitySpan::new(start, end, ["a", "b", "c"][ty]));
                cursor = end;
            }
            (len, spans)
        })
    }

    proptest! {
        #[test]
        fn encode_decode_round_trip((len, spans) in span_sets()) {
            let scheme = TagScheme::new(["a", "b", "c"]).unwrap();
            let tags = encode_bio(&spans, len, &scheme).unwrap();
            prop_assert_eq!(decode_bio(&tags), spans.clone());
            prop_assert_eq!(encode_bio(&decode_bio(&tags), len, &scheme).unwrap(), tags);
        }

        #[test]
        fn f1_symmetry_and_type_erasure(
            (len, g) in span_sets(),
            (len2, p) in span_sets(),
        ) {
            let scheme = TagScheme::new(["a", "b", "c"]).unwrap();
            let n = len.max(len2);
            let toks: Vec<Token> = (0..n).map(|i| Token::new("w", i)).collect();
            let gold = TaggedSequence::new(toks.clone(), encode_bio(&g, n, &scheme).unwrap()).unwrap();
            let pred = TaggedSequence::new(toks, encode_bio(&p, n, &scheme).unwrap()).unwrap();
            let gp = entity_f1(std::slice::from_ref(&gold), std::slice::from_ref(&pred)).unwrap();
            let pg = entity_f1(std::slice::from_ref(&pred), std::slice::from_ref(&gold)).unwrap();
            prop_assert_eq!(gp.precision, pg.recall);
            prop_assert_eq!(gp.recall, pg.precision);
            let seg = entity_f1(&[gold.generic()], &[pred.generic()]).unwrap();
            prop_assert!(seg.f1 >= gp.f1);
        }

        #[test]
        fn decode_never_panics(raw in prop::collection::vec(0usize..5, 0..20)) {
            let all = ["O", "B-a", "I-a", "B-b", "I-b"];
            let t: Vec<BioTag> = raw.iter().map(|&i| all[i].parse().unwrap()).collect();
            for s in decode_bio(&t) {
                prop_assert!(s.start < s.end && s.end <= t.len());
            }
        }
    }
}
