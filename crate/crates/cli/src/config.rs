//! Flat `key=value` run configuration: file values, overridden by flags, then
//! resolved and validated into a [`RunConfig`].

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use wordclust::quantify::CountMode;
use wordclust::TrainConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    NerSeg,
    NerClass,
    SentClass,
    SentQuant,
}

impl FromStr for Task {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ner-seg" => Ok(Task::NerSeg),
            "ner-class" => Ok(Task::NerClass),
            "sent-class" => Ok(Task::SentClass),
            "sent-quant" => Ok(Task::SentQuant),
            _ => bail!("unknown task '{}' (expected ner-seg, ner-class, sent-class or sent-quant)", s),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::NerSeg => "ner-seg",
            Task::NerClass => "ner-class",
            Task::SentClass => "sent-class",
            Task::SentQuant => "sent-quant",
        })
    }
}

/// Every key a config file may set, with its default (`None` = required or
/// unset).
pub const KEYS: &[(&str, Option<&str>)] = &[
    ("task", None),
    ("train", None),
    ("test", None),
    ("vectors", None),
    ("k", Some("100,250,500,1000,2000")),
    ("clusters", Some("true")),
    ("cluster-seed", Some("0")),
    ("restarts", Some("10")),
    ("max-iterations", Some("300")),
    ("tolerance", Some("0")),
    ("normalize", Some("false")),
    ("word-ngrams", Some("1-3")),
    ("char-ngrams", Some("3-5")),
    ("lexicons", Some("")),
    ("pos-counts", Some("true")),
    ("binary", Some("false")),
    ("capitalization", Some("true")),
    ("word-window", Some("2")),
    ("cluster-window", Some("2")),
    ("annotations", Some("true")),
    ("history", Some("true")),
    ("l2", Some("1")),
    ("epochs", Some("50")),
    ("learning-rate", Some("0.1")),
    ("decay", Some("0.1")),
    ("train-seed", Some("0")),
    ("shuffle", Some("true")),
    ("count-mode", Some("hard")),
    ("scale", Some("VeryNegative,Negative,Neutral,Positive,VeryPositive")),
];

fn known(key: &str) -> bool {
    KEYS.iter().any(|(k, _)| *k == key)
}

/// Parses a config file: one `key=value` per line, `#` comments, blank lines
/// ignored.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected key=value", i + 1))?;
        let k = k.trim();
        if !known(k) {
            bail!("config line {}: unknown key '{}'", i + 1, k);
        }
        map.insert(k.to_owned(), v.trim().to_owned());
    }
    Ok(map)
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse_config_text(&text).with_context(|| format!("in config {}", path.display()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub train: PathBuf,
    pub test: PathBuf,
    pub vectors: Option<PathBuf>,
    pub k: Vec<usize>,
    pub clusters: bool,
    pub cluster_seed: u64,
    pub restarts: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub normalize: bool,
    pub word_ngrams: Option<(usize, usize)>,
    pub char_ngrams: Option<(usize, usize)>,
    pub lexicons: Vec<(String, PathBuf)>,
    pub pos_counts: bool,
    pub binary: bool,
    pub capitalization: bool,
    pub word_window: Option<usize>,
    pub cluster_window: usize,
    pub annotations: bool,
    pub history: bool,
    pub train_config: TrainConfig,
    pub count_mode: CountMode,
    pub scale: Vec<String>,
    /// Every key with its resolved textual value, in key order.
    pub resolved: BTreeMap<String, String>,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| anyhow!("{}: cannot parse '{}'", key, value))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => bail!("{}: expected true or false, got '{}'", key, value),
    }
}

/// `lo-hi`, a single `n`, or `off`.
fn parse_range(key: &str, value: &str) -> Result<Option<(usize, usize)>> {
    if value == "off" || value == "none" {
        return Ok(None);
    }
    let (lo, hi) = match value.split_once('-') {
        Some((a, b)) => (parse::<usize>(key, a)?, parse::<usize>(key, b)?),
        None => {
            let n = parse::<usize>(key, value)?;
            (n, n)
        }
    };
    if lo == 0 || lo > hi {
        bail!("{}: range '{}' must satisfy 1 <= lo <= hi", key, value);
    }
    Ok(Some((lo, hi)))
}

fn parse_list(value: &str) -> Vec<&str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

impl RunConfig {
    /// Resolves file values overlaid with flag values against the defaults.
    pub fn resolve(file: BTreeMap<String, String>, flags: BTreeMap<String, String>) -> Result<Self> {
        let mut values: BTreeMap<String, String> = KEYS
            .iter()
            .filter_map(|(k, d)| d.map(|d| ((*k).to_owned(), d.to_owned())))
            .collect();
        for (k, v) in file.into_iter().chain(flags) {
            if !known(&k) {
                bail!("unknown configuration key '{}'", k);
            }
            values.insert(k, v);
        }
        let get = |key: &str| values.get(key).map(String::as_str);
        let required = |key: &str| -> Result<&str> {
            get(key)
                .filter(|v| !v.is_empty())
                .ok_or_else(|| anyhow!("missing required setting '{}'", key))
        };

        let task: Task = required("task")?.parse()?;
        let k: Vec<usize> = parse_list(required("k")?)
            .into_iter()
            .map(|s| parse::<usize>("k", s))
            .collect::<Result<_>>()?;
        if k.contains(&0) {
            bail!("k: cluster counts must be positive");
        }
        let mut k = k;
        k.sort_unstable();
        k.dedup();
        let clusters = parse_bool("clusters", required("clusters")?)?;
        let vectors = get("vectors").filter(|v| !v.is_empty()).map(PathBuf::from);
        if clusters && !k.is_empty() && vectors.is_none() {
            bail!("missing required setting 'vectors' (set clusters=false to run without cluster features)");
        }
        let lexicons = parse_list(get("lexicons").unwrap_or(""))
            .into_iter()
            .map(|entry| {
                let (name, path) = entry
                    .split_once(':')
                    .ok_or_else(|| anyhow!("lexicons: expected name:path, got '{}'", entry))?;
                if name.is_empty() || path.is_empty() {
                    bail!("lexicons: expected name:path, got '{}'", entry);
                }
                Ok((name.to_owned(), PathBuf::from(path)))
            })
            .collect::<Result<Vec<_>>>()?;
        let word_window = match required("word-window")? {
            "off" | "none" => None,
            v => Some(parse::<usize>("word-window", v)?),
        };
        let count_mode = match required("count-mode")? {
            "hard" => CountMode::Hard,
            "probabilistic" => CountMode::Probabilistic,
            v => bail!("count-mode: expected hard or probabilistic, got '{}'", v),
        };
        let scale: Vec<String> = parse_list(required("scale")?).into_iter().map(str::to_owned).collect();
        let train_config = TrainConfig {
            l2_strength: parse("l2", required("l2")?)?,
            epochs: parse("epochs", required("epochs")?)?,
            learning_rate: parse("learning-rate", required("learning-rate")?)?,
            decay: parse("decay", required("decay")?)?,
            seed: parse("train-seed", required("train-seed")?)?,
            shuffle: parse_bool("shuffle", required("shuffle")?)?,
        };
        train_config.validate()?;

        let config = RunConfig {
            task,
            train: PathBuf::from(required("train")?),
            test: PathBuf::from(required("test")?),
            vectors,
            k,
            clusters,
            cluster_seed: parse("cluster-seed", required("cluster-seed")?)?,
            restarts: parse("restarts", required("restarts")?)?,
            max_iterations: parse("max-iterations", required("max-iterations")?)?,
            tolerance: parse("tolerance", required("tolerance")?)?,
            normalize: parse_bool("normalize", required("normalize")?)?,
            word_ngrams: parse_range("word-ngrams", required("word-ngrams")?)?,
            char_ngrams: parse_range("char-ngrams", required("char-ngrams")?)?,
            lexicons,
            pos_counts: parse_bool("pos-counts", required("pos-counts")?)?,
            binary: parse_bool("binary", required("binary")?)?,
            capitalization: parse_bool("capitalization", required("capitalization")?)?,
            word_window,
            cluster_window: parse("cluster-window", required("cluster-window")?)?,
            annotations: parse_bool("annotations", required("annotations")?)?,
            history: parse_bool("history", required("history")?)?,
            train_config,
            count_mode,
            scale,
            resolved: BTreeMap::new(),
        };
        if config.restarts == 0 {
            bail!("restarts must be at least 1");
        }
        if !(config.tolerance >= 0.0) {
            bail!("tolerance must be non-negative");
        }
        let mut config = config;
        config.resolved = values;
        config.resolved.insert("k".into(), config.k.iter().map(usize::to_string).collect::<Vec<_>>().join(","));
        Ok(config)
    }

    /// Cluster counts that get a table row, ascending.
    pub fn cluster_rows(&self) -> &[usize] {
        if self.clusters {
            &self.k
        } else {
            &[]
        }
    }
}
