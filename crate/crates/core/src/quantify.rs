//! Classify-and-count quantification and the Earth Mover's Distance between
//! ordinal prevalence vectors.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::SparseFeatureVector;
use crate::linmodel::{LinearModel, TrainConfig};
use crate::report::RunReport;
use crate::sentiment::{self, OrdinalScale, SentimentFeatureConfig, SentimentItem};

/// Tolerance on the sum of a prevalence vector.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Relative class frequencies over an ordinal scale.
#[derive(Clone, Debug, PartialEq)]
pub struct PrevalenceVector {
    scale: OrdinalScale,
    values: Vec<f64>,
}

impl PrevalenceVector {
    pub fn new(scale: &OrdinalScale, values: Vec<f64>) -> Result<Self> {
        if values.len() != scale.len() {
            return Err(Error::Input(format!(
                "{} prevalences for a {}-class scale",
                values.len(),
                scale.len()
            )));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Input("prevalences must be finite and non-negative".into()));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::Input(format!("prevalences sum to {}, not 1", sum)));
        }
        Ok(PrevalenceVector {
            scale: scale.clone(),
            values,
        })
    }

    pub fn from_counts(scale: &OrdinalScale, counts: &[f64]) -> Result<Self> {
        let total: f64 = counts.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Input("prevalence of an empty set is undefined".into()));
        }
        Self::new(scale, counts.iter().map(|c| c / total).collect())
    }

    /// Empirical prevalence of `labels`.
    pub fn from_labels<S: AsRef<str>>(scale: &OrdinalScale, labels: &[S]) -> Result<Self> {
        let mut counts = vec![0.0; scale.len()];
        for l in labels {
            let r = scale
                .rank(l.as_ref())
                .ok_or_else(|| Error::Input(format!("'{}' is not a class of the scale", l.as_ref())))?;
            counts[r] += 1.0;
        }
        Self::from_counts(scale, &counts)
    }

    pub fn scale(&self) -> &OrdinalScale {
        &self.scale
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The same distribution with the class order reversed.
    pub fn reversed(&self) -> Self {
        let mut classes = self.scale.classes().to_vec();
        classes.reverse();
        PrevalenceVector {
            scale: OrdinalScale::new(classes).expect("reversal of a valid scale"),
            values: self.values.iter().rev().copied().collect(),
        }
    }
}

/// `sum_{j < |C|} |P_hat(j) - P(j)|` over cumulative prevalences, i.e. the
/// transport cost with unit distance between consecutive classes.
pub fn emd(p: &PrevalenceVector, q: &PrevalenceVector) -> Result<f64> {
    if p.scale != q.scale {
        return Err(Error::Input("prevalence vectors are over different scales".into()));
    }
    let mut cp = 0.0;
    let mut cq = 0.0;
    let mut total = 0.0;
    let last = p.values.len() - 1;
    for (a, b) in p.values[..last].iter().zip(&q.values[..last]) {
        cp += a;
        cq += b;
        total += (cp - cq).abs();
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CountMode {
    /// Count argmax predictions.
    #[default]
    Hard,
    /// Sum predicted class probabilities.
    Probabilistic,
}

/// Maps model class indices to scale ranks.
fn class_ranks(model: &LinearModel, scale: &OrdinalScale) -> Result<Vec<usize>> {
    model
        .classes()
        .iter()
        .map(|c| {
            scale
                .rank(c)
                .ok_or_else(|| Error::Input(format!("model class '{}' is not on the scale", c)))
        })
        .collect()
}

pub fn classify_and_count(
    model: &LinearModel,
    items: &[SparseFeatureVector],
    scale: &OrdinalScale,
    mode: CountMode,
) -> Result<PrevalenceVector> {
    if items.is_empty() {
        return Err(Error::Input("prevalence of an empty item set is undefined".into()));
    }
    let ranks = class_ranks(model, scale)?;
    let mut counts = vec![0.0; scale.len()];
    for v in items {
        match mode {
            CountMode::Hard => counts[ranks[model.predict_index(v)]] += 1.0,
            CountMode::Probabilistic => {
                for (c, p) in model.predict_proba(v).into_iter().enumerate() {
                    counts[ranks[c]] += p;
                }
            }
        }
    }
    PrevalenceVector::from_counts(scale, &counts)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubjectQuantification {
    pub subject: String,
    pub items: usize,
    pub predicted: PrevalenceVector,
    pub gold: PrevalenceVector,
    pub emd: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantificationReport {
    /// Sorted by subject.
    pub subjects: Vec<SubjectQuantification>,
    /// Arithmetic mean of the per-subject EMD.
    pub mean_emd: f64,
}

impl QuantificationReport {
    /// TSV `subject<TAB>p1..p|C|<TAB>emd` with a header row.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        if let Some(first) = self.subjects.first() {
            let classes = first.predicted.scale().classes().join("\t");
            writeln!(w, "subject\t{}\temd", classes)?;
        }
        for s in &self.subjects {
            let values: Vec<String> = s.predicted.values().iter().map(f64::to_string).collect();
            writeln!(w, "{}\t{}\t{}", s.subject, values.join("\t"), s.emd)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-subject classify-and-count against gold labels. `items` are
/// `(subject, features, gold label)`.
pub fn quantify_by_subject(
    model: &LinearModel,
    items: &[(String, SparseFeatureVector, String)],
    scale: &OrdinalScale,
    mode: CountMode,
) -> Result<QuantificationReport> {
    if items.is_empty() {
        return Err(Error::Input("no items to quantify".into()));
    }
    let mut groups: std::collections::BTreeMap<&str, Vec<usize>> = Default::default();
    for (i, (subject, _, _)) in items.iter().enumerate() {
        groups.entry(subject.as_str()).or_default().push(i);
    }
    let subjects = groups
        .into_par_iter()
        .map(|(subject, idx)| {
            let vectors: Vec<SparseFeatureVector> = idx.iter().map(|&i| items[i].1.clone()).collect();
            let labels: Vec<&str> = idx.iter().map(|&i| items[i].2.as_str()).collect();
            let predicted = classify_and_count(model, &vectors, scale, mode)?;
            let gold = PrevalenceVector::from_labels(scale, &labels)?;
            let emd = emd(&gold, &predicted)?;
            Ok(SubjectQuantification {
                subject: subject.to_owned(),
                items: idx.len(),
                predicted,
                gold,
                emd,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mean_emd = subjects.iter().map(|s| s.emd).sum::<f64>() / subjects.len() as f64;
    Ok(QuantificationReport { subjects, mean_emd })
}

#[derive(Clone, Debug)]
pub struct QuantificationRun {
    pub model: LinearModel,
    pub quantification: QuantificationReport,
    pub report: RunReport,
}

/// Trains the sentiment classifier on `train`, then quantifies each subject
/// of `test`.
pub fn run_quantification_pipeline(
    train: &[SentimentItem],
    test: &[SentimentItem],
    features: &SentimentFeatureConfig,
    config: &TrainConfig,
    scale: &OrdinalScale,
    mode: CountMode,
) -> Result<QuantificationRun> {
    let (model, train_report) = sentiment::train_classifier(train, features, config, scale)?;
    let vectors = sentiment::featurize_items(test, features);
    let items: Vec<(String, SparseFeatureVector, String)> = test
        .iter()
        .zip(vectors)
        .map(|(it, v)| (it.subject.clone(), v, it.label.clone()))
        .collect();
    let quantification = quantify_by_subject(&model, &items, scale, mode)?;

    let mut config_desc = features.describe();
    config_desc.extend(&sentiment::describe_train_config(config));
    config_desc.set("scale", scale.classes().join(","));
    config_desc.set("count_mode", format!("{:?}", mode).to_lowercase());
    let mut report = RunReport::new();
    report.set("task", "sent-quant");
    report.set("config_fingerprint", config_desc.fingerprint());
    report.extend(&config_desc);
    report.set("n_train", train.len());
    report.set("n_test", test.len());
    report.set("n_subjects", quantification.subjects.len());
    report.set("final_objective", train_report.final_objective);
    report.set("mean_emd", quantification.mean_emd);
    Ok(QuantificationRun {
        model,
        quantification,
        report,
    })
}
