mod config;
mod run;

use std::collections::BTreeMap;
use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wordclust::cluster::ClusterConfig;

use crate::config::RunConfig;

const EMBEDDING_ADVICE: &str = "\
Embeddings: low-dimensional skip-gram style vectors trained on in-domain text, \
clustered with a large k (hundreds to thousands of clusters), make the most \
useful cluster features. Vectors are read in word2vec text format.";

#[derive(Parser)]
#[command(name = "wordclust", version, about = "Word-embedding clusters as features for tweet NER and sentiment", after_help = EMBEDDING_ADVICE)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster word vectors with k-means and export the word-to-cluster lexicon.
    #[command(after_help = EMBEDDING_ADVICE)]
    Cluster(ClusterCmd),
    /// Run an experiment: one row without clusters, then one row per k.
    #[command(after_help = EMBEDDING_ADVICE)]
    Run(RunCmd),
}

#[derive(Args)]
struct ClusterCmd {
    /// Word vectors in word2vec text format.
    #[arg(long)]
    vectors: PathBuf,
    /// Number of clusters.
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 300)]
    max_iterations: usize,
    /// Also stop when no centroid moves more than this (0 disables).
    #[arg(long, default_value_t = 0.0)]
    tolerance: f64,
    /// Expected vector dimension.
    #[arg(long)]
    dim: Option<usize>,
    /// L2-normalize vectors before clustering.
    #[arg(long)]
    normalize: bool,
    /// Lexicon output file.
    #[arg(long)]
    out: PathBuf,
}

/// Every setting may also come from `--config`; flags win.
#[derive(Args)]
struct RunCmd {
    /// Flat key=value file using the long flag names as keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for the report, lexicons, models and predictions.
    #[arg(long)]
    out: PathBuf,
    /// ner-seg, ner-class, sent-class or sent-quant.
    #[arg(long)]
    task: Option<String>,
    /// Training corpus (CoNLL for NER tasks, TSV for sentiment tasks).
    #[arg(long)]
    train: Option<String>,
    /// Test corpus, same format as --train.
    #[arg(long)]
    test: Option<String>,
    /// Word vectors in word2vec text format.
    #[arg(long)]
    vectors: Option<String>,
    /// Comma-separated cluster counts [default: 100,250,500,1000,2000].
    #[arg(long)]
    k: Option<String>,
    /// Set to false to run only the no-cluster row.
    #[arg(long)]
    clusters: Option<String>,
    #[arg(long)]
    cluster_seed: Option<String>,
    #[arg(long)]
    restarts: Option<String>,
    #[arg(long)]
    max_iterations: Option<String>,
    #[arg(long)]
    tolerance: Option<String>,
    #[arg(long)]
    normalize: Option<String>,
    /// Word n-gram range, e.g. 1-3, or off.
    #[arg(long)]
    word_ngrams: Option<String>,
    /// Character n-gram range, e.g. 3-5, or off.
    #[arg(long)]
    char_ngrams: Option<String>,
    /// Comma-separated name:path sentiment lexicons.
    #[arg(long)]
    lexicons: Option<String>,
    #[arg(long)]
    pos_counts: Option<String>,
    #[arg(long)]
    binary: Option<String>,
    #[arg(long)]
    capitalization: Option<String>,
    /// Tagger word window half-width, or off.
    #[arg(long)]
    word_window: Option<String>,
    #[arg(long)]
    cluster_window: Option<String>,
    #[arg(long)]
    annotations: Option<String>,
    #[arg(long)]
    history: Option<String>,
    #[arg(long)]
    l2: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    learning_rate: Option<String>,
    #[arg(long)]
    decay: Option<String>,
    #[arg(long)]
    train_seed: Option<String>,
    #[arg(long)]
    shuffle: Option<String>,
    /// hard or probabilistic classify-and-count.
    #[arg(long)]
    count_mode: Option<String>,
    /// Comma-separated ordinal classes, lowest first.
    #[arg(long)]
    scale: Option<String>,
}

impl RunCmd {
    fn flags(&self) -> BTreeMap<String, String> {
        let pairs: [(&str, &Option<String>); 29] = [
            ("task", &self.task),
            ("train", &self.train),
            ("test", &self.test),
            ("vectors", &self.vectors),
            ("k", &self.k),
            ("clusters", &self.clusters),
            ("cluster-seed", &self.cluster_seed),
            ("restarts", &self.restarts),
            ("max-iterations", &self.max_iterations),
            ("tolerance", &self.tolerance),
            ("normalize", &self.normalize),
            ("word-ngrams", &self.word_ngrams),
            ("char-ngrams", &self.char_ngrams),
            ("lexicons", &self.lexicons),
            ("pos-counts", &self.pos_counts),
            ("binary", &self.binary),
            ("capitalization", &self.capitalization),
            ("word-window", &self.word_window),
            ("cluster-window", &self.cluster_window),
            ("annotations", &self.annotations),
            ("history", &self.history),
            ("l2", &self.l2),
            ("epochs", &self.epochs),
            ("learning-rate", &self.learning_rate),
            ("decay", &self.decay),
            ("train-seed", &self.train_seed),
            ("shuffle", &self.shuffle),
            ("count-mode", &self.count_mode),
            ("scale", &self.scale),
        ];
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_owned(), v.clone())))
            .collect()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match &cli.command {
        Command::Cluster(c) => {
            let args = run::ClusterArgs {
                vectors: c.vectors.clone(),
                dim: c.dim,
                normalize: c.normalize,
                config: ClusterConfig {
                    k: c.k,
                    max_iterations: c.max_iterations,
                    restarts: c.restarts,
                    seed: c.seed,
                    tolerance: c.tolerance,
                },
                out: c.out.clone(),
            };
            run::cmd_cluster(&args, io::stdout().lock())
        }
        Command::Run(r) => (|| {
            let file = match &r.config {
                Some(path) => config::read_config_file(path)?,
                None => BTreeMap::new(),
            };
            let config = RunConfig::resolve(file, r.flags())?;
            run::cmd_run(&config, &r.out, io::stdout().lock()).map(|_| ())
        })(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::FAILURE
        }
    }
}
