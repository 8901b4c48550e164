//! Reader and writer for word vectors in the common text format.
//!
//! Each line holds a word followed by its components, separated by spaces:
//!
//! *word component_1 component_2 ... component_D*
//!
//! A leading `N D` shape line (as written by word2vec) is tolerated and
//! skipped. Vectors are kept exactly as read; no normalization happens on load.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use log::warn;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vocab: Vec<String>,
    vectors: Vec<f64>,
    word_index: HashMap<String, usize>,
    duplicates: usize,
}

impl EmbeddingTable {
    /// Builds a table from in-memory rows. Duplicate words keep their first row.
    pub fn from_rows<I, S>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut builder = Builder::new(None);
        for (i, (word, vector)) in rows.into_iter().enumerate() {
            builder.push(i + 1, word.into(), vector)?;
        }
        builder.finish()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    /// Row-major `len() x dim()` matrix.
    pub fn vectors(&self) -> &[f64] {
        &self.vectors
    }

    /// Number of duplicate lines that were dropped while loading.
    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.word_index.get(word).copied()
    }

    pub fn row(&self, index: usize) -> &[f64] {
        &self.vectors[index * self.dim..(index + 1) * self.dim]
    }

    pub fn lookup(&self, word: &str) -> Option<&[f64]> {
        self.index_of(word).map(|i| self.row(i))
    }

    /// Returns a copy with every row scaled to unit Euclidean length.
    /// Zero rows are left unchanged.
    pub fn l2_normalized(&self) -> Self {
        let mut out = self.clone();
        for row in out.vectors.chunks_mut(self.dim) {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|v| *v /= norm);
            }
        }
        out
    }

    /// Writes the table in the same text format [`read_vectors`] accepts.
    /// Components use the shortest representation that parses back exactly.
    pub fn write_text<W: Write>(&self, mut writer: W) -> Result<()> {
        for (i, word) in self.vocab.iter().enumerate() {
            write!(writer, "{}", word)?;
            for v in self.row(i) {
                write!(writer, " {}", v)?;
            }
            writeln!(writer)?;
        }
        Ok(())
    }
}

struct Builder {
    dim: Option<usize>,
    vocab: Vec<String>,
    vectors: Vec<f64>,
    word_index: HashMap<String, usize>,
    duplicates: usize,
}

impl Builder {
    fn new(dim: Option<usize>) -> Self {
        Builder {
            dim,
            vocab: Vec::new(),
            vectors: Vec::new(),
            word_index: HashMap::new(),
            duplicates: 0,
        }
    }

    fn push(&mut self, line: usize, word: String, vector: Vec<f64>) -> Result<()> {
        if word.is_empty() || word.chars().any(char::is_whitespace) {
            return Err(Error::parse(line, "word must be non-empty and contain no whitespace"));
        }
        if vector.is_empty() {
            return Err(Error::parse(line, format!("no vector components for '{}'", word)));
        }
        let dim = *self.dim.get_or_insert(vector.len());
        if vector.len() != dim {
            return Err(Error::parse(
                line,
                format!("expected {} components, found {}", dim, vector.len()),
            ));
        }
        if let Some(pos) = vector.iter().position(|v| !v.is_finite()) {
            return Err(Error::parse(line, format!("component {} is not finite", pos + 1)));
        }
        if self.word_index.contains_key(&word) {
            self.duplicates += 1;
            return Ok(());
        }
        self.word_index.insert(word.clone(), self.vocab.len());
        self.vocab.push(word);
        self.vectors.extend(vector);
        Ok(())
    }

    fn finish(self) -> Result<EmbeddingTable> {
        let dim = match self.dim {
            Some(dim) if !self.vocab.is_empty() => dim,
            _ => return Err(Error::Input("no word vectors found".into())),
        };
        if self.duplicates > 0 {
            warn!("{} duplicate words ignored (first occurrence kept)", self.duplicates);
        }
        Ok(EmbeddingTable {
            dim,
            vocab: self.vocab,
            vectors: self.vectors,
            word_index: self.word_index,
            duplicates: self.duplicates,
        })
    }
}

fn fields(line: &str) -> impl Iterator<Item = &str> {
    line.split(' ').filter(|f| !f.is_empty())
}

fn shape_header(line: &str, expected_dim: Option<usize>) -> Option<(usize, usize)> {
    let mut parts = fields(line);
    let n = parts.next()?.parse::<usize>().ok()?;
    let d = parts.next()?.parse::<usize>().ok()?;
    if parts.next().is_some() {
        return None;
    }
    // With one-dimensional vectors a data line such as "5 3" is also two integers.
    if expected_dim == Some(1) {
        return None;
    }
    Some((n, d))
}

/// Reads vectors from any buffered reader. Lines are streamed; blank lines are
/// skipped.
pub fn read_vectors<R: BufRead>(reader: R, expected_dim: Option<usize>) -> Result<EmbeddingTable> {
    let mut builder = Builder::new(expected_dim);
    let mut seen_data = false;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n', ' ']);
        if line.is_empty() {
            continue;
        }
        if !seen_data {
            seen_data = true;
            if let Some((_, d)) = shape_header(line, expected_dim) {
                match builder.dim {
                    Some(expected) if expected != d => {
                        return Err(Error::parse(
                            lineno,
                            format!("header declares {} dimensions, expected {}", d, expected),
                        ))
                    }
                    _ => builder.dim = Some(d),
                }
                continue;
            }
        }
        let mut parts = fields(line);
        let word = parts.next().expect("non-empty line has a field").to_owned();
        let vector = parts
            .map(|p| {
                p.parse::<f64>()
                    .map_err(|_| Error::parse(lineno, format!("non-numeric component '{}'", p)))
            })
            .collect::<Result<Vec<_>>>()?;
        builder.push(lineno, word, vector)?;
    }
    builder.finish()
}

pub fn load_vectors(path: impl AsRef<Path>, expected_dim: Option<usize>) -> Result<EmbeddingTable> {
    let file = File::open(path)?;
    read_vectors(BufReader::new(file), expected_dim)
}
