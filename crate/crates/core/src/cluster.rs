//! k-means over embedding rows: k-means++ seeding, Lloyd iterations and
//! selection of the lowest-inertia run among several seeded restarts.
//!
//! Points are row-major `&[f64]` slices of width `dim`. Distances are squared
//! Euclidean, nearest-centroid ties go to the lowest cluster id, and a cluster
//! left empty by an assignment step is re-seeded with the point farthest from
//! its own centroid, so a fit always reports exactly `k` non-empty clusters.
//!
//! Restart `i` draws from its own ChaCha8 stream seeded with `seed + i`, so
//! results do not depend on how restarts are scheduled across threads.
//! Determinism is defined with respect to the row order of the input: the
//! same rows in the same order with the same seed give bit-identical models.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::embedio::EmbeddingTable;
use crate::error::{Error, Result};

/// Default k sweep used by the experiment runner.
pub const DEFAULT_K_GRID: [usize; 5] = [100, 250, 500, 1000, 2000];

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterConfig {
    pub k: usize,
    /// Upper bound on Lloyd iterations; runs stop earlier once the assignment
    /// is stable.
    pub max_iterations: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Stop when no centroid moves further than this. `0.0` disables the check.
    pub tolerance: f64,
}

impl ClusterConfig {
    pub fn new(k: usize) -> Self {
        ClusterConfig {
            k,
            max_iterations: 300,
            restarts: 10,
            seed: 0,
            tolerance: 0.0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn validate(&self, n_points: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be positive".into()));
        }
        if self.k > n_points {
            return Err(Error::Config(format!(
                "k = {} exceeds the number of points ({})",
                self.k, n_points
            )));
        }
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be positive".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::Config("tolerance must be non-negative".into()));
        }
        Ok(())
    }
}

/// RNG stream for restart `index`.
pub fn restart_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(index as u64))
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_points(points: &[f64], dim: usize) -> Result<usize> {
    if dim == 0 || !points.len().is_multiple_of(dim) {
        return Err(Error::Input(format!(
            "point buffer of length {} is not a multiple of dimension {}",
            points.len(),
            dim
        )));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("points contain non-finite values".into()));
    }
    Ok(points.len() / dim)
}

/// Chooses `k` seed rows by k-means++ and returns their indices in draw order.
///
/// The first index is uniform over all rows; each later one is drawn with
/// probability proportional to the squared distance to the nearest row chosen
/// so far. Fails if `k` exceeds the number of rows or the number of distinct
/// rows.
pub fn kmeanspp_indices<R: Rng + ?Sized>(
    points: &[f64],
    dim: usize,
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let n = check_points(points, dim)?;
    if k == 0 || k > n {
        return Err(Error::Config(format!(
            "k = {} must be between 1 and the number of points ({})",
            k, n
        )));
    }
    let row = |i: usize| &points[i * dim..(i + 1) * dim];

    let first = rng.gen_range(0..n);
    let mut chosen = Vec::with_capacity(k);
    chosen.push(first);
    let mut nearest: Vec<f64> = (0..n).map(|i| sq_dist(row(i), row(first))).collect();

    while chosen.len() < k {
        let total: f64 = nearest.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Config(format!(
                "only {} distinct points available for k = {}",
                chosen.len(),
                k
            )));
        }
        let target = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &w) in nearest.iter().enumerate() {
            if w > 0.0 {
                acc += w;
                pick = Some(i);
                if target < acc {
                    break;
                }
            }
        }
        let pick = pick.expect("positive total implies a positive weight");
        chosen.push(pick);
        let c = row(pick);
        for (i, d) in nearest.iter_mut().enumerate() {
            let nd = sq_dist(row(i), c);
            if nd < *d {
                *d = nd;
            }
        }
    }
    Ok(chosen)
}

/// k-means++ seeding; returns the `k x dim` centroid matrix, row-major.
pub fn kmeanspp_init<R: Rng + ?Sized>(
    points: &[f64],
    dim: usize,
    k: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let idx = kmeanspp_indices(points, dim, k, rng)?;
    Ok(idx
        .iter()
        .flat_map(|&i| points[i * dim..(i + 1) * dim].iter().copied())
        .collect())
}

/// Outcome of one Lloyd run.
#[derive(Clone, Debug, PartialEq)]
pub struct LloydFit {
    pub centroids: Vec<f64>,
    pub assignment: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
    /// Inertia after the initial assignment and after every iteration.
    pub inertia_trace: Vec<f64>,
}

/// Sum of squared distances of each point to its assigned centroid.
pub fn inertia(points: &[f64], dim: usize, centroids: &[f64], assignment: &[usize]) -> f64 {
    points
        .chunks(dim)
        .zip(assignment)
        .map(|(p, &c)| sq_dist(p, &centroids[c * dim..(c + 1) * dim]))
        .sum()
}

fn assign(points: &[f64], dim: usize, centroids: &[f64]) -> (Vec<usize>, Vec<f64>) {
    points
        .par_chunks(dim)
        .map(|p| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, centroid) in centroids.chunks(dim).enumerate() {
                let d = sq_dist(p, centroid);
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            (best, best_d)
        })
        .unzip()
}

/// Moves the farthest point of a multi-member cluster into each empty cluster.
fn repair_empty(
    points: &[f64],
    dim: usize,
    centroids: &mut [f64],
    assignment: &mut [usize],
    dists: &mut [f64],
) {
    let k = centroids.len() / dim;
    let mut counts = vec![0usize; k];
    for &a in assignment.iter() {
        counts[a] += 1;
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let mut donor: Option<usize> = None;
        for i in 0..assignment.len() {
            if counts[assignment[i]] > 1 && donor.is_none_or(|d| dists[i] > dists[d]) {
                donor = Some(i);
            }
        }
        let Some(i) = donor.filter(|&i| dists[i] > 0.0) else {
            break;
        };
        counts[assignment[i]] -= 1;
        counts[empty] = 1;
        assignment[i] = empty;
        dists[i] = 0.0;
        centroids[empty * dim..(empty + 1) * dim].copy_from_slice(&points[i * dim..(i + 1) * dim]);
    }
}

fn update_centroids(points: &[f64], dim: usize, assignment: &[usize], centroids: &mut [f64]) -> f64 {
    let k = centroids.len() / dim;
    let mut sums = vec![0.0; k * dim];
    let mut counts = vec![0usize; k];
    for (p, &a) in points.chunks(dim).zip(assignment) {
        counts[a] += 1;
        for (s, v) in sums[a * dim..(a + 1) * dim].iter_mut().zip(p) {
            *s += v;
        }
    }
    let mut max_shift: f64 = 0.0;
    for c in 0..k {
        if counts[c] == 0 {
            continue;
        }
        let old = &mut centroids[c * dim..(c + 1) * dim];
        let mut shift = 0.0;
        for (o, s) in old.iter_mut().zip(&sums[c * dim..(c + 1) * dim]) {
            let new = s / counts[c] as f64;
            shift += (new - *o) * (new - *o);
            *o = new;
        }
        max_shift = max_shift.max(shift.sqrt());
    }
    max_shift
}

/// Lloyd iterations from the given initial centroids.
///
/// Stops when the assignment no longer changes, when every centroid moved by
/// at most `tolerance` (only if `tolerance > 0`), or after `max_iterations`.
/// The reported inertia is computed from the returned centroids and
/// assignment.
pub fn lloyd_fit(
    points: &[f64],
    dim: usize,
    init: &[f64],
    max_iterations: usize,
    tolerance: f64,
) -> Result<LloydFit> {
    check_points(points, dim)?;
    if init.is_empty() || !init.len().is_multiple_of(dim) {
        return Err(Error::Input("initial centroids do not match the point dimension".into()));
    }
    let mut centroids = init.to_vec();
    let (mut assignment, mut dists) = assign(points, dim, &centroids);
    repair_empty(points, dim, &mut centroids, &mut assignment, &mut dists);
    let mut trace = vec![dists.iter().sum::<f64>()];

    let mut iterations = 0;
    while iterations < max_iterations {
        iterations += 1;
        let shift = update_centroids(points, dim, &assignment, &mut centroids);
        let (mut next, mut next_dists) = assign(points, dim, &centroids);
        repair_empty(points, dim, &mut centroids, &mut next, &mut next_dists);
        trace.push(next_dists.iter().sum::<f64>());
        let stable = next == assignment;
        assignment = next;
        dists = next_dists;
        if stable || (tolerance > 0.0 && shift <= tolerance) {
            break;
        }
    }

    Ok(LloydFit {
        inertia: dists.iter().sum(),
        centroids,
        assignment,
        iterations,
        inertia_trace: trace,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RestartSummary {
    pub seed: u64,
    pub inertia: f64,
    pub iterations: usize,
}

/// Runs `config.restarts` seeded k-means++ + Lloyd fits and keeps the one with
/// the lowest inertia (ties go to the earliest restart).
pub fn fit_points(points: &[f64], dim: usize, config: &ClusterConfig) -> Result<(LloydFit, Vec<RestartSummary>)> {
    let n = check_points(points, dim)?;
    config.validate(n)?;
    let runs = (0..config.restarts)
        .into_par_iter()
        .map(|i| {
            let mut rng = restart_rng(config.seed, i);
            let init = kmeanspp_init(points, dim, config.k, &mut rng)?;
            lloyd_fit(points, dim, &init, config.max_iterations, config.tolerance)
        })
        .collect::<Result<Vec<_>>>()?;

    let summaries = runs
        .iter()
        .enumerate()
        .map(|(i, r)| RestartSummary {
            seed: config.seed.wrapping_add(i as u64),
            inertia: r.inertia,
            iterations: r.iterations,
        })
        .collect();
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.inertia < runs[best].inertia {
            best = i;
        }
    }
    let fit = runs.into_iter().nth(best).expect("at least one restart");
    Ok((fit, summaries))
}

/// Word to cluster-id map, the part of a fitted model that feature
/// extraction needs. Can be exported to and imported from TSV.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lexicon {
    k: usize,
    map: HashMap<String, usize>,
}

impl Lexicon {
    pub fn new(k: usize, map: HashMap<String, usize>) -> Result<Self> {
        if let Some((w, &id)) = map.iter().find(|(_, &id)| id >= k) {
            return Err(Error::Input(format!("word '{}' has cluster id {} >= k = {}", w, id, k)));
        }
        Ok(Lexicon { k, map })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn assign(&self, word: &str) -> Option<usize> {
        self.map.get(word).copied()
    }

    /// Exact lookup, falling back to the lowercased word.
    pub fn assign_folded(&self, word: &str) -> Option<usize> {
        self.assign(word).or_else(|| {
            let lower = word.to_lowercase();
            if lower != word {
                self.assign(&lower)
            } else {
                None
            }
        })
    }

    pub fn as_map(&self) -> &HashMap<String, usize> {
        &self.map
    }

    /// Entries sorted by cluster id, then word.
    pub fn sorted_entries(&self) -> Vec<(&str, usize)> {
        let mut entries: Vec<(&str, usize)> = self.map.iter().map(|(w, &c)| (w.as_str(), c)).collect();
        entries.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(b.0)));
        entries
    }

    /// Writes `word<TAB>cluster_id` lines after an optional comment header.
    pub fn write_tsv<W: Write>(&self, mut writer: W, header: &[String]) -> Result<()> {
        for line in header {
            writeln!(writer, "# {}", line)?;
        }
        for (word, id) in self.sorted_entries() {
            writeln!(writer, "{}\t{}", word, id)?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Parses the TSV written by [`Lexicon::write_tsv`]. A `k=<n>` entry in a
    /// `#` header line bounds the ids; otherwise `k` is one past the largest id.
    pub fn read_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut declared_k = None;
        let mut map = HashMap::new();
        let mut max_id = None;
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line?;
            let line = line.trim_end_matches('\r');
            if let Some(comment) = line.strip_prefix('#') {
                for kv in comment.split_whitespace() {
                    if let Some(v) = kv.strip_prefix("k=") {
                        let k = v
                            .parse::<usize>()
                            .map_err(|_| Error::parse(lineno, format!("bad k in header: '{}'", v)))?;
                        declared_k = Some(k);
                    }
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let (word, id) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(lineno, "expected word<TAB>cluster_id"))?;
            if word.is_empty() {
                return Err(Error::parse(lineno, "empty word"));
            }
            let id: usize = id
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad cluster id '{}'", id)))?;
            if let Some(k) = declared_k {
                if id >= k {
                    return Err(Error::parse(lineno, format!("cluster id {} >= k = {}", id, k)));
                }
            }
            if map.insert(word.to_owned(), id).is_some() {
                return Err(Error::parse(lineno, format!("duplicate word '{}'", word)));
            }
            max_id = max_id.max(Some(id));
        }
        let k = declared_k.unwrap_or_else(|| max_id.map_or(0, |m| m + 1));
        Ok(Lexicon { k, map })
    }
}

pub fn import_lexicon(path: impl AsRef<Path>) -> Result<Lexicon> {
    Lexicon::read_tsv(BufReader::new(File::open(path)?))
}

/// The selected clustering of an embedding table.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterModel {
    pub config: ClusterConfig,
    pub dim: usize,
    /// Row-major `k x dim`.
    pub centroids: Vec<f64>,
    /// Cluster id per table row, in vocabulary order.
    pub labels: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
    pub restarts: Vec<RestartSummary>,
    lexicon: Lexicon,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn assign_word(&self, word: &str) -> Option<usize> {
        self.lexicon.assign(word)
    }

    pub fn header(&self) -> Vec<String> {
        vec![
            format!("k={} seed={} restarts={}", self.config.k, self.config.seed, self.config.restarts),
            format!("inertia={}", self.inertia),
        ]
    }

    pub fn write_lexicon<W: Write>(&self, writer: W) -> Result<()> {
        self.lexicon.write_tsv(writer, &self.header())
    }

    pub fn export_lexicon(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_lexicon(BufWriter::new(File::create(path)?))
    }
}

/// Clusters every row of `table`.
pub fn fit_with_restarts(table: &EmbeddingTable, config: &ClusterConfig) -> Result<ClusterModel> {
    let (fit, restarts) = fit_points(table.vectors(), table.dim(), config)?;
    let map = table
        .vocab()
        .iter()
        .cloned()
        .zip(fit.assignment.iter().copied())
        .collect();
    Ok(ClusterModel {
        config: config.clone(),
        dim: table.dim(),
        lexicon: Lexicon { k: config.k, map },
        centroids: fit.centroids,
        labels: fit.assignment,
        inertia: fit.inertia,
        iterations: fit.iterations,
        restarts,
    })
}
