//! Multinomial logistic regression over sparse features, trained by SGD.
//!
//! The objective is the summed cross-entropy plus an L2 penalty on the
//! weights (biases are not penalized):
//!
//! ```text
//! F(W, b) = sum_i -log softmax(W x_i + b)[y_i] + (l2 / 2) * ||W||^2
//! ```
//!
//! Each SGD step uses the per-example share `CE_i + (l2 / 2N) ||W||^2`. The
//! shrinkage part is applied through a global weight scale so that an update
//! only touches the columns of the example's non-zero features. The learning
//! rate at epoch `e` (0-based) is `learning_rate / (1 + decay * e)`.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::SparseFeatureVector;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub l2_strength: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub decay: f64,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            l2_strength: 1.0,
            epochs: 50,
            learning_rate: 0.1,
            decay: 0.1,
            seed: 0,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.l2_strength >= 0.0) || !self.l2_strength.is_finite() {
            return Err(Error::Config("l2_strength must be finite and non-negative".into()));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !(self.decay >= 0.0) || !self.decay.is_finite() {
            return Err(Error::Config("decay must be non-negative".into()));
        }
        Ok(())
    }

    pub fn rate_at(&self, epoch: usize) -> f64 {
        self.learning_rate / (1.0 + self.decay * epoch as f64)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    classes: Vec<String>,
    feature_names: Vec<String>,
    feature_index: HashMap<String, usize>,
    /// Feature-major: the weight of feature `f` for class `c` is `weights[f * C + c]`.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

/// A training set encoded against a frozen feature index.
struct Encoded {
    rows: Vec<Vec<(usize, f64)>>,
    labels: Vec<usize>,
}

impl LinearModel {
    /// All-zero model over the given classes and features.
    pub fn zeros(classes: Vec<String>, feature_names: Vec<String>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::Input("a model needs at least one class".into()));
        }
        let feature_index: HashMap<String, usize> = feature_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        if feature_index.len() != feature_names.len() {
            return Err(Error::Input("duplicate feature names".into()));
        }
        let c = classes.len();
        Ok(LinearModel {
            weights: vec![0.0; feature_names.len() * c],
            bias: vec![0.0; c],
            classes,
            feature_names,
            feature_index,
        })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == label)
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn num_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn weight(&self, feature: &str, class: usize) -> Option<f64> {
        self.feature_index
            .get(feature)
            .map(|&f| self.weights[f * self.classes.len() + class])
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Flat parameter vector: all weights (feature-major) followed by biases.
    pub fn parameters(&self) -> Vec<f64> {
        self.weights.iter().chain(&self.bias).copied().collect()
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.weights.len() + self.bias.len() {
            return Err(Error::Input("parameter vector has the wrong length".into()));
        }
        let (w, b) = params.split_at(self.weights.len());
        self.weights.copy_from_slice(w);
        self.bias.copy_from_slice(b);
        Ok(())
    }

    fn encode(&self, v: &SparseFeatureVector) -> Vec<(usize, f64)> {
        v.iter()
            .filter_map(|(name, x)| self.feature_index.get(name).map(|&f| (f, x)))
            .collect()
    }

    fn scores_encoded(&self, row: &[(usize, f64)], scale: f64) -> Vec<f64> {
        let c = self.classes.len();
        let mut scores = self.bias.clone();
        for &(f, x) in row {
            let w = &self.weights[f * c..(f + 1) * c];
            for (s, wv) in scores.iter_mut().zip(w) {
                *s += scale * wv * x;
            }
        }
        scores
    }

    /// Unnormalized per-class scores; features unknown to the model are ignored.
    pub fn scores(&self, v: &SparseFeatureVector) -> Vec<f64> {
        self.scores_encoded(&self.encode(v), 1.0)
    }

    pub fn predict_proba(&self, v: &SparseFeatureVector) -> Vec<f64> {
        softmax(&self.scores(v))
    }

    /// Index into [`LinearModel::classes`] of the most probable class; ties
    /// go to the earliest class.
    pub fn predict_index(&self, v: &SparseFeatureVector) -> usize {
        argmax(&self.predict_proba(v))
    }

    pub fn predict(&self, v: &SparseFeatureVector) -> &str {
        &self.classes[self.predict_index(v)]
    }

    fn encode_dataset(&self, dataset: &[(SparseFeatureVector, String)]) -> Result<Encoded> {
        let mut rows = Vec::with_capacity(dataset.len());
        let mut labels = Vec::with_capacity(dataset.len());
        for (v, label) in dataset {
            let y = self
                .class_index(label)
                .ok_or_else(|| Error::Input(format!("label '{}' is not a model class", label)))?;
            rows.push(self.encode(v));
            labels.push(y);
        }
        Ok(Encoded { rows, labels })
    }

    fn objective_encoded(&self, data: &Encoded, l2: f64) -> f64 {
        let mut total = 0.0;
        for (row, &y) in data.rows.iter().zip(&data.labels) {
            let s = self.scores_encoded(row, 1.0);
            total += log_sum_exp(&s) - s[y];
        }
        total + 0.5 * l2 * self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    /// Regularized objective on `dataset`.
    pub fn objective(&self, dataset: &[(SparseFeatureVector, String)], l2: f64) -> Result<f64> {
        Ok(self.objective_encoded(&self.encode_dataset(dataset)?, l2))
    }

    /// Analytic gradient of [`LinearModel::objective`], laid out like
    /// [`LinearModel::parameters`].
    pub fn gradient(&self, dataset: &[(SparseFeatureVector, String)], l2: f64) -> Result<Vec<f64>> {
        let data = self.encode_dataset(dataset)?;
        let c = self.classes.len();
        let nw = self.weights.len();
        let mut grad = vec![0.0; nw + c];
        for (row, &y) in data.rows.iter().zip(&data.labels) {
            let residual = residuals(&self.scores_encoded(row, 1.0), y);
            for &(f, x) in row {
                for (g, r) in grad[f * c..(f + 1) * c].iter_mut().zip(&residual) {
                    *g += r * x;
                }
            }
            for (g, r) in grad[nw..].iter_mut().zip(&residual) {
                *g += r;
            }
        }
        for (g, w) in grad[..nw].iter_mut().zip(&self.weights) {
            *g += l2 * w;
        }
        Ok(grad)
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "#linmodel\tv1")?;
        writeln!(w, "[classes]\t{}", self.classes.len())?;
        for c in &self.classes {
            writeln!(w, "{}", escape(c))?;
        }
        writeln!(w, "[bias]")?;
        writeln!(w, "{}", join_floats(&self.bias))?;
        writeln!(w, "[weights]\t{}", self.feature_names.len())?;
        let c = self.classes.len();
        for (f, name) in self.feature_names.iter().enumerate() {
            writeln!(w, "{}\t{}", escape(name), join_floats(&self.weights[f * c..(f + 1) * c]))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate().map(|(i, l)| l.map(|l| (i + 1, l)));
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some(r) => Ok(r?),
                None => Err(Error::Input(format!("unexpected end of model file, expected {}", what))),
            }
        };
        let (n, header) = next("header")?;
        if header != "#linmodel\tv1" {
            return Err(Error::parse(n, "not a v1 linear model file"));
        }
        let n_classes = section(next("[classes]")?, "[classes]")?;
        let mut classes = Vec::with_capacity(n_classes);
        for _ in 0..n_classes {
            classes.push(unescape(&next("class name")?.1));
        }
        let (n, b) = next("[bias]")?;
        if b != "[bias]" {
            return Err(Error::parse(n, "expected [bias]"));
        }
        let (n, b) = next("bias values")?;
        let bias = parse_floats(n, &b, n_classes)?;
        let n_features = section(next("[weights]")?, "[weights]")?;
        let mut names = Vec::with_capacity(n_features);
        let mut weights = Vec::with_capacity(n_features * n_classes);
        for _ in 0..n_features {
            let (n, line) = next("weight row")?;
            let (name, values) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(n, "expected name<TAB>weights"))?;
            names.push(unescape(name));
            weights.extend(parse_floats(n, values, n_classes)?);
        }
        let mut model = LinearModel::zeros(classes, names)?;
        model.weights = weights;
        model.bias = bias;
        Ok(model)
    }
}

fn section((n, line): (usize, String), name: &str) -> Result<usize> {
    line.strip_prefix(name)
        .and_then(|rest| rest.strip_prefix('\t'))
        .and_then(|count| count.parse().ok())
        .ok_or_else(|| Error::parse(n, format!("expected {}<TAB>count", name)))
}

fn join_floats(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("\t")
}

fn parse_floats(line: usize, text: &str, expected: usize) -> Result<Vec<f64>> {
    let values = text
        .split('\t')
        .map(|t| t.parse::<f64>().map_err(|_| Error::parse(line, format!("bad number '{}'", t))))
        .collect::<Result<Vec<_>>>()?;
    if values.len() != expected || values.iter().any(|v| !v.is_finite()) {
        return Err(Error::parse(line, format!("expected {} finite values", expected)));
    }
    Ok(values)
}

pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub(crate) fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(ch) = chars.next() {
        if ch == '\\' {
            match chars.next() {
                Some('t') => out.push('\t'),
                Some('n') => out.push('\n'),
                Some('r') => out.push('\r'),
                Some(other) => out.push(other),
                None => out.push('\\'),
            }
        } else {
            out.push(ch);
        }
    }
    out
}

fn log_sum_exp(scores: &[f64]) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln()
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

/// First index of the maximum.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// `softmax(scores) - onehot(y)`, the gradient of the cross-entropy w.r.t. the scores.
fn residuals(scores: &[f64], y: usize) -> Vec<f64> {
    let mut p = softmax(scores);
    p[y] -= 1.0;
    p
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    /// Objective after each epoch.
    pub objective_trace: Vec<f64>,
    pub final_objective: f64,
}

/// Trains with classes in sorted order.
pub fn train(dataset: &[(SparseFeatureVector, String)], config: &TrainConfig) -> Result<(LinearModel, TrainReport)> {
    let classes: BTreeSet<&str> = dataset.iter().map(|(_, l)| l.as_str()).collect();
    let classes: Vec<String> = classes.into_iter().map(str::to_owned).collect();
    train_with_classes(dataset, &classes, config)
}

/// Trains with an explicit class order, which also fixes the tie-breaking
/// order of [`LinearModel::predict`]. `classes` may list labels absent from
/// the data, but the data must contain at least two distinct labels.
pub fn train_with_classes(
    dataset: &[(SparseFeatureVector, String)],
    classes: &[String],
    config: &TrainConfig,
) -> Result<(LinearModel, TrainReport)> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Input("cannot train on an empty dataset".into()));
    }
    let distinct: BTreeSet<&str> = dataset.iter().map(|(_, l)| l.as_str()).collect();
    if distinct.len() < 2 {
        return Err(Error::Input("training data must contain at least two distinct labels".into()));
    }
    let features: BTreeSet<&str> = dataset.iter().flat_map(|(v, _)| v.names()).collect();
    let mut model = LinearModel::zeros(
        classes.to_vec(),
        features.into_iter().map(str::to_owned).collect(),
    )?;
    if model.classes.iter().collect::<BTreeSet<_>>().len() != model.classes.len() {
        return Err(Error::Input("duplicate class names".into()));
    }
    let data = model.encode_dataset(dataset)?;
    if data.rows.iter().flatten().any(|(_, x)| !x.is_finite()) {
        return Err(Error::Input("feature values must be finite".into()));
    }

    let n = data.rows.len();
    let c = model.classes.len();
    let l2 = config.l2_strength;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut scale = 1.0;
    let mut trace = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let eta = config.rate_at(epoch);
        let shrink = 1.0 - eta * l2 / n as f64;
        if !(shrink > 0.0) {
            return Err(Error::Config(format!(
                "learning rate {} is too large for l2 strength {} with {} examples",
                eta, l2, n
            )));
        }
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        for &i in &order {
            let row = &data.rows[i];
            let residual = residuals(&model.scores_encoded(row, scale), data.labels[i]);
            scale *= shrink;
            let step = eta / scale;
            for &(f, x) in row {
                for (w, r) in model.weights[f * c..(f + 1) * c].iter_mut().zip(&residual) {
                    *w -= step * r * x;
                }
            }
            for (b, r) in model.bias.iter_mut().zip(&residual) {
                *b -= eta * r;
            }
            if scale < 1e-9 {
                model.weights.iter_mut().for_each(|w| *w *= scale);
                scale = 1.0;
            }
        }
        if scale != 1.0 {
            model.weights.iter_mut().for_each(|w| *w *= scale);
            scale = 1.0;
        }
        trace.push(model.objective_encoded(&data, l2));
    }

    let final_objective = match trace.last() {
        Some(&v) => v,
        None => model.objective_encoded(&data, l2),
    };
    Ok((
        model,
        TrainReport {
            objective_trace: trace,
            final_objective,
        },
    ))
}

/// Largest coordinate-wise relative error between the analytic gradient of the
/// regularized objective and central finite differences with step `epsilon`.
///
/// The relative error of a coordinate is `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn gradient_check(
    model: &LinearModel,
    dataset: &[(SparseFeatureVector, String)],
    l2: f64,
    epsilon: f64,
) -> Result<f64> {
    let analytic = model.gradient(dataset, l2)?;
    let data = model.encode_dataset(dataset)?;
    let base = model.parameters();
    let mut probe = model.clone();
    let mut params = base.clone();
    let mut worst: f64 = 0.0;
    for (j, &a) in analytic.iter().enumerate() {
        params[j] = base[j] + epsilon;
        probe.set_parameters(&params)?;
        let plus = probe.objective_encoded(&data, l2);
        params[j] = base[j] - epsilon;
        probe.set_parameters(&params)?;
        let minus = probe.objective_encoded(&data, l2);
        params[j] = base[j];
        let numeric = (plus - minus) / (2.0 * epsilon);
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(err);
    }
    Ok(worst)
}
