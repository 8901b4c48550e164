//! Command implementations.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::info;
use rayon::prelude::*;
use wordclust::cluster::{self, ClusterConfig, ClusterModel};
use wordclust::embedio::{self, EmbeddingTable};
use wordclust::features::SentimentLexicon;
use wordclust::quantify;
use wordclust::report::{digest_file, RunReport};
use wordclust::sentiment::{self, OrdinalScale, SentimentFeatureConfig, SentimentItem};
use wordclust::seqtag::{self, TagScheme, TaggedSequence, TaggerFeatureConfig};
use wordclust::{Lexicon, PreprocessRules};

use crate::config::{RunConfig, Task};

pub struct ClusterArgs {
    pub vectors: PathBuf,
    pub dim: Option<usize>,
    pub normalize: bool,
    pub config: ClusterConfig,
    pub out: PathBuf,
}

fn load_table(path: &Path, dim: Option<usize>, normalize: bool) -> Result<EmbeddingTable> {
    let table = embedio::load_vectors(path, dim).with_context(|| format!("loading vectors {}", path.display()))?;
    info!("loaded {} vectors of dimension {}", table.len(), table.dim());
    Ok(if normalize { table.l2_normalized() } else { table })
}

fn check_k(k: usize, table: &EmbeddingTable) -> Result<()> {
    if k > table.len() {
        bail!(
            "k = {} exceeds the vocabulary size ({} words); k must be at most the number of vectors",
            k,
            table.len()
        );
    }
    Ok(())
}

/// Fits one clustering and writes its lexicon; returns the printed summary.
pub fn cmd_cluster<W: Write>(args: &ClusterArgs, mut out: W) -> Result<()> {
    let table = load_table(&args.vectors, args.dim, args.normalize)?;
    check_k(args.config.k, &table)?;
    let model = cluster::fit_with_restarts(&table, &args.config)?;
    writeln!(out, "restart\tseed\tinertia\titerations")?;
    for (i, r) in model.restarts.iter().enumerate() {
        writeln!(out, "{}\t{}\t{}\t{}", i, r.seed, r.inertia, r.iterations)?;
    }
    model
        .export_lexicon(&args.out)
        .with_context(|| format!("writing lexicon {}", args.out.display()))?;
    writeln!(
        out,
        "k={} inertia={} iterations={} words={} lexicon={}",
        model.k(),
        model.inertia,
        model.iterations,
        model.lexicon().len(),
        args.out.display()
    )?;
    Ok(())
}

/// One row of the result table.
struct Row {
    k: Option<usize>,
    inertia: Option<f64>,
    metrics: Vec<(&'static str, f64)>,
    files: Vec<(String, Vec<u8>)>,
}

impl Row {
    fn tag(&self) -> String {
        self.k.map_or("none".to_owned(), |k| format!("k{}", k))
    }
}

enum Data {
    Ner {
        train: Vec<TaggedSequence>,
        test: Vec<TaggedSequence>,
        scheme: TagScheme,
    },
    Sentiment {
        train: Vec<SentimentItem>,
        test: Vec<SentimentItem>,
        scale: OrdinalScale,
        lexicons: Vec<SentimentLexicon>,
    },
}

fn load_data(config: &RunConfig) -> Result<Data> {
    match config.task {
        Task::NerSeg | Task::NerClass => {
            let load = |p: &Path| seqtag::load_conll(p).with_context(|| format!("reading {}", p.display()));
            let (mut train, mut test) = (load(&config.train)?, load(&config.test)?);
            let scheme = if config.task == Task::NerSeg {
                train = train.iter().map(TaggedSequence::generic).collect();
                test = test.iter().map(TaggedSequence::generic).collect();
                TagScheme::segmentation()
            } else {
                TagScheme::infer(&train)
            };
            Ok(Data::Ner { train, test, scheme })
        }
        Task::SentClass | Task::SentQuant => {
            let load = |p: &Path| sentiment::load_sentiment_tsv(p).with_context(|| format!("reading {}", p.display()));
            let lexicons = config
                .lexicons
                .iter()
                .map(|(name, path)| {
                    SentimentLexicon::load(name, path).with_context(|| format!("reading lexicon {}", path.display()))
                })
                .collect::<Result<_>>()?;
            Ok(Data::Sentiment {
                train: load(&config.train)?,
                test: load(&config.test)?,
                scale: OrdinalScale::new(config.scale.iter())?,
                lexicons,
            })
        }
    }
}

fn to_bytes(f: impl FnOnce(&mut Vec<u8>) -> wordclust::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

/// Metric values and named output files of one row.
type RowOutput = (Vec<(&'static str, f64)>, Vec<(String, Vec<u8>)>);

fn run_row(config: &RunConfig, data: &Data, lexicon: Option<&Lexicon>) -> Result<RowOutput> {
    match data {
        Data::Ner { train, test, scheme } => {
            let features = TaggerFeatureConfig {
                word_window: config.word_window,
                capitalization: config.capitalization,
                cluster_window: config.cluster_window,
                annotations: config.annotations,
                history: config.history,
            };
            let (model, report) = seqtag::train_tagger(train, scheme, &features, lexicon, &config.train_config)?;
            let predicted = model.tag_corpus(test);
            let score = seqtag::entity_f1(test, &predicted)?;
            let mut run = RunReport::new();
            run.set("task", config.task);
            run.set("n_train", train.len());
            run.set("n_test", test.len());
            run.set("n_features", model.linear_model().num_features());
            run.set("final_objective", report.final_objective);
            run.set("true_positives", score.true_positives);
            run.set("predicted", score.predicted);
            run.set("gold", score.gold);
            run.set("f1", score.f1);
            Ok((
                vec![("f1", score.f1), ("precision", score.precision), ("recall", score.recall)],
                vec![
                    ("model".into(), to_bytes(|b| model.write_tsv(b))?),
                    ("predictions".into(), to_bytes(|b| seqtag::write_conll(b, &predicted))?),
                    ("run".into(), to_bytes(|b| run.write(b))?),
                ],
            ))
        }
        Data::Sentiment {
            train,
            test,
            scale,
            lexicons,
        } => {
            let features = SentimentFeatureConfig {
                rules: PreprocessRules::sentiment(),
                word_ngrams: config.word_ngrams,
                char_ngrams: config.char_ngrams,
                lexicons: lexicons.clone(),
                clusters: lexicon.cloned(),
                pos_counts: config.pos_counts,
                binary: config.binary,
            };
            if config.task == Task::SentClass {
                let run = sentiment::run_sentiment_pipeline(train, test, &features, &config.train_config, scale)?;
                let mut preds = Vec::new();
                for (id, label) in &run.predictions {
                    writeln!(preds, "{}\t{}", id, label)?;
                }
                Ok((
                    vec![("mae_macro", run.mae.value)],
                    vec![
                        ("model".into(), to_bytes(|b| run.model.write_tsv(b))?),
                        ("predictions".into(), preds),
                        ("run".into(), to_bytes(|b| run.report.write(b))?),
                    ],
                ))
            } else {
                let run = quantify::run_quantification_pipeline(
                    train,
                    test,
                    &features,
                    &config.train_config,
                    scale,
                    config.count_mode,
                )?;
                Ok((
                    vec![("mean_emd", run.quantification.mean_emd)],
                    vec![
                        ("model".into(), to_bytes(|b| run.model.write_tsv(b))?),
                        ("quant".into(), to_bytes(|b| run.quantification.write_tsv(b))?),
                        ("run".into(), to_bytes(|b| run.report.write(b))?),
                    ],
                ))
            }
        }
    }
}

fn cluster_for(config: &RunConfig, table: &EmbeddingTable, k: usize) -> Result<ClusterModel> {
    check_k(k, table)?;
    let cc = ClusterConfig {
        k,
        max_iterations: config.max_iterations,
        restarts: config.restarts,
        seed: config.cluster_seed,
        tolerance: config.tolerance,
    };
    Ok(cluster::fit_with_restarts(table, &cc)?)
}

fn execute_row(config: &RunConfig, data: &Data, table: Option<&EmbeddingTable>, k: Option<usize>) -> Result<Row> {
    let mut files = Vec::new();
    let (lexicon, inertia) = match k {
        Some(k) => {
            let table = table.expect("vectors are loaded when cluster rows exist");
            let model = cluster_for(config, table, k)?;
            info!("k={} inertia={}", k, model.inertia);
            files.push((format!("lexicon_k{}.tsv", k), to_bytes(|b| model.write_lexicon(b))?));
            (Some(model.lexicon().clone()), Some(model.inertia))
        }
        None => (None, None),
    };
    let (metrics, outputs) = run_row(config, data, lexicon.as_ref())?;
    let mut row = Row {
        k,
        inertia,
        metrics,
        files,
    };
    let tag = row.tag();
    for (kind, bytes) in outputs {
        let ext = if kind == "run" { "txt" } else { "tsv" };
        row.files.push((format!("{}_{}.{}", kind, tag, ext), bytes));
    }
    Ok(row)
}

fn input_digests(config: &RunConfig) -> Result<RunReport> {
    let mut r = RunReport::new();
    let mut add = |name: String, path: &Path| -> Result<()> {
        r.set(format!("input.{}.sha256", name), digest_file(path).with_context(|| format!("hashing {}", path.display()))?);
        Ok(())
    };
    add("train".into(), &config.train)?;
    add("test".into(), &config.test)?;
    if let Some(v) = &config.vectors {
        if !config.cluster_rows().is_empty() {
            add("vectors".into(), v)?;
        }
    }
    for (name, path) in &config.lexicons {
        add(format!("lexicon.{}", name), path)?;
    }
    Ok(r)
}

/// Runs the no-cluster row and one row per k, writes every artifact and the
/// report into `out_dir`, and prints a summary table to `out`.
pub fn cmd_run<W: Write>(config: &RunConfig, out_dir: &Path, mut out: W) -> Result<PathBuf> {
    let digests = input_digests(config)?;
    let data = load_data(config)?;
    let table = match (&config.vectors, config.cluster_rows().is_empty()) {
        (Some(path), false) => Some(load_table(path, None, config.normalize)?),
        _ => None,
    };
    if let Some(t) = &table {
        for &k in config.cluster_rows() {
            check_k(k, t)?;
        }
    }

    let mut specs: Vec<Option<usize>> = vec![None];
    specs.extend(config.cluster_rows().iter().copied().map(Some));
    let rows = specs
        .par_iter()
        .map(|&k| execute_row(config, &data, table.as_ref(), k))
        .collect::<Result<Vec<_>>>()?;

    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    for row in &rows {
        for (name, bytes) in &row.files {
            let path = out_dir.join(name);
            fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        }
    }

    let metric_names: Vec<&str> = rows[0].metrics.iter().map(|(n, _)| *n).collect();
    let mut report = Vec::new();
    writeln!(report, "# task={}", config.task)?;
    for (k, v) in &config.resolved {
        writeln!(report, "# config.{}={}", k, v)?;
    }
    for (k, v) in digests.entries() {
        writeln!(report, "# {}={}", k, v)?;
    }
    writeln!(report, "clusters\tinertia\t{}", metric_names.join("\t"))?;
    for row in &rows {
        let values: Vec<String> = row.metrics.iter().map(|(_, v)| v.to_string()).collect();
        writeln!(
            report,
            "{}\t{}\t{}",
            row.k.map_or("none".to_owned(), |k| k.to_string()),
            row.inertia.map_or("-".to_owned(), |i| i.to_string()),
            values.join("\t")
        )?;
    }
    let report_path = out_dir.join("report.tsv");
    fs::write(&report_path, &report).with_context(|| format!("writing {}", report_path.display()))?;

    writeln!(out, "task: {}", config.task)?;
    writeln!(out, "{:>10}  {:>14}  {}", "clusters", "inertia", metric_names.iter().map(|m| format!("{:>10}", m)).collect::<Vec<_>>().join("  "))?;
    for row in &rows {
        writeln!(
            out,
            "{:>10}  {:>14}  {}",
            row.k.map_or("none".to_owned(), |k| k.to_string()),
            row.inertia.map_or("-".to_owned(), |i| format!("{:.4}", i)),
            row.metrics.iter().map(|(_, v)| format!("{:>10.4}", v)).collect::<Vec<_>>().join("  ")
        )?;
    }
    writeln!(out, "report: {}", report_path.display())?;
    Ok(report_path)
}
