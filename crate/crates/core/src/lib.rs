//! # wordclust
//!
//! Cluster pre-trained word embeddings with restarted k-means++ and use the
//! resulting cluster ids as discrete features next to sparse n-gram,
//! character n-gram, lexicon and capitalization features.
//!
//! Three tasks are wired end to end:
//!
//! - BIO named-entity tagging ([`seqtag`]), scored by exact-match entity F1,
//! - five-point ordinal sentiment classification ([`sentiment`]), scored by
//!   macro-averaged mean absolute error,
//! - classify-and-count sentiment quantification ([`quantify`]), scored by
//!   Earth Mover's Distance over ordered prevalence vectors.
//!
//! The learner for the sentence-level tasks and the per-position classifier of
//! the tagger is the multinomial logistic regression in [`linmodel`].
//!
//! ```
//! use wordclust::{textprep, features};
//!
//! let rules = textprep::PreprocessRules::sentiment();
//! let text = textprep::preprocess("Not GOOD at all!", &rules);
//! let tokens = textprep::tokenize(&text);
//! let surfaces: Vec<&str> = tokens.iter().map(|t| t.surface.as_str()).collect();
//! let v = features::ngram_features(&surfaces, 1, 2);
//! assert_eq!(v.get("ng2:not_good"), 1.0);
//! ```

pub mod cluster;
pub mod embedio;
mod error;
pub mod features;
pub mod linmodel;
pub mod quantify;
pub mod report;
pub mod sentiment;
pub mod seqtag;
pub mod textprep;

pub use cluster::{ClusterConfig, ClusterModel, Lexicon};
pub use embedio::EmbeddingTable;
pub use error::{Error, Result};
pub use features::{SentimentLexicon, SparseFeatureVector};
pub use linmodel::{LinearModel, TrainConfig};
pub use quantify::PrevalenceVector;
pub use sentiment::OrdinalScale;
pub use seqtag::{BioTag, EntitySpan, TagScheme, TaggedSequence, TaggerModel};
pub use textprep::{PreprocessRules, Token};
