//! Brute-force reference implementations used only by test suites.
//!
//! Nothing here calls into `wordclust`; each routine recomputes its answer
//! from first principles so that agreement is evidence of correctness.

use std::collections::BTreeMap;
use std::fmt;

pub mod fixtures;

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Largest point set `brute_force_kmeans` will enumerate.
pub const MAX_KMEANS_POINTS: usize = 12;
/// Largest scale the transport oracle accepts.
pub const MAX_CLASSES: usize = 7;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleError(pub String);

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for OracleError {}

fn err<T>(msg: impl Into<String>) -> Result<T, OracleError> {
    Err(OracleError(msg.into()))
}

/// Minimum cost of moving mass `p` onto mass `q` along a line of bins with
/// unit spacing. Mass is shipped greedily left to right, which is optimal in
/// one dimension because the monotone coupling never crosses.
pub fn brute_force_transport(p: &[f64], q: &[f64]) -> Result<f64, OracleError> {
    if p.len() != q.len() {
        return err("vectors differ in length");
    }
    if p.is_empty() || p.len() > MAX_CLASSES {
        return err(format!("scale size must be 1..={}", MAX_CLASSES));
    }
    let mut supply: Vec<f64> = p.to_vec();
    let mut demand: Vec<f64> = q.to_vec();
    let (mut i, mut j) = (0, 0);
    let mut cost = 0.0;
    while i < supply.len() && j < demand.len() {
        let moved = supply[i].min(demand[j]);
        cost += moved * (i as f64 - j as f64).abs();
        supply[i] -= moved;
        demand[j] -= moved;
        if supply[i] <= 0.0 {
            i += 1;
        }
        if demand[j] <= 0.0 {
            j += 1;
        }
    }
    Ok(cost)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for d in 0..a.len() {
        s += (a[d] - b[d]) * (a[d] - b[d]);
    }
    s
}

/// Sum of squared distances from every point to the mean of its block.
pub fn partition_inertia(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    let dim = points[0].len();
    let blocks = labels.iter().max().map_or(0, |m| m + 1);
    let mut means = vec![vec![0.0; dim]; blocks];
    let mut sizes = vec![0usize; blocks];
    for (p, &l) in points.iter().zip(labels) {
        sizes[l] += 1;
        for d in 0..dim {
            means[l][d] += p[d];
        }
    }
    for (mean, &size) in means.iter_mut().zip(&sizes) {
        for x in mean.iter_mut() {
            *x /= size.max(1) as f64;
        }
    }
    let mut total = 0.0;
    for (p, &l) in points.iter().zip(labels) {
        total += squared_distance(p, &means[l]);
    }
    total
}

/// Enumerates every partition of `points` into at most `k` blocks (as
/// restricted growth strings) and returns the one of least inertia. Ties keep
/// the first partition in enumeration order.
pub fn brute_force_kmeans(points: &[Vec<f64>], k: usize) -> Result<(Vec<usize>, f64), OracleError> {
    let n = points.len();
    if n == 0 || n > MAX_KMEANS_POINTS {
        return err(format!("brute force needs 1..={} points, got {}", MAX_KMEANS_POINTS, n));
    }
    if k == 0 || k > n {
        return err(format!("k={} invalid for {} points", k, n));
    }
    let mut labels = vec![0usize; n];
    let mut best: Option<(Vec<usize>, f64)> = None;
    enumerate(points, k, 1, 1, &mut labels, &mut best);
    Ok(best.expect("at least one partition"))
}

fn enumerate(
    points: &[Vec<f64>],
    k: usize,
    pos: usize,
    used: usize,
    labels: &mut Vec<usize>,
    best: &mut Option<(Vec<usize>, f64)>,
) {
    if pos == points.len() {
        let inertia = partition_inertia(points, labels);
        if best.as_ref().is_none_or(|(_, b)| inertia < *b) {
            *best = Some((labels.clone(), inertia));
        }
        return;
    }
    for l in 0..used.min(k - 1) + 1 {
        labels[pos] = l;
        let next = if l == used { used + 1 } else { used };
        enumerate(points, k, pos + 1, next, labels, best);
    }
}

/// Central finite-difference gradient of `f` at `x`.
pub fn central_difference<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], epsilon: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + epsilon;
            let up = f(&probe);
            probe[i] = x[i] - epsilon;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * epsilon)
        })
        .collect()
}

/// Largest `|a - n| / max(|a|, |n|, floor)` over all coordinates.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Upper-tail p-value of Pearson's chi-square statistic for observed counts
/// against category probabilities. Categories of zero probability must have
/// zero observations and are dropped from the degrees of freedom.
pub fn chi_square_p_value(observed: &[u64], probabilities: &[f64]) -> Result<f64, OracleError> {
    if observed.len() != probabilities.len() {
        return err("observed and expected differ in length");
    }
    let total: u64 = observed.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&o, &p) in observed.iter().zip(probabilities) {
        if p == 0.0 {
            if o != 0 {
                return Ok(0.0);
            }
            continue;
        }
        let e = p * total as f64;
        stat += (o as f64 - e).powi(2) / e;
        cells += 1;
    }
    if cells < 2 {
        return err("need at least two categories of positive probability");
    }
    let dist = ChiSquared::new((cells - 1) as f64).map_err(|e| OracleError(e.to_string()))?;
    Ok(1.0 - dist.cdf(stat))
}

/// Joint law of the first two k-means++ picks: first uniform, second drawn
/// with probability proportional to squared distance from the first. Entry
/// `[i][j]` is `P(first = i, second = j)`.
pub fn kmeanspp_pair_law(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut law = vec![vec![0.0; n]; n];
    for i in 0..n {
        let d: Vec<f64> = points.iter().map(|p| squared_distance(p, &points[i])).collect();
        let total: f64 = d.iter().sum();
        for j in 0..n {
            law[i][j] = d[j] / total / n as f64;
        }
    }
    law
}

/// Mean absolute rank error over all items.
pub fn micro_mae(gold: &[usize], predicted: &[usize]) -> f64 {
    let mut total = 0.0;
    for (g, p) in gold.iter().zip(predicted) {
        total += (*g as f64 - *p as f64).abs();
    }
    total / gold.len() as f64
}

/// Macro-averaged MAE written directly from the definition: the mean over
/// classes present in `gold` of the mean absolute error on that class.
pub fn macro_mae(gold: &[usize], predicted: &[usize], classes: usize) -> f64 {
    let mut sums = vec![0.0; classes];
    let mut counts = vec![0usize; classes];
    for (g, p) in gold.iter().zip(predicted) {
        sums[*g] += (*g as f64 - *p as f64).abs();
        counts[*g] += 1;
    }
    let present: Vec<f64> = (0..classes)
        .filter(|&c| counts[c] > 0)
        .map(|c| sums[c] / counts[c] as f64)
        .collect();
    present.iter().sum::<f64>() / present.len() as f64
}

/// Lowest macro MAE any constant predictor achieves on `gold`.
pub fn best_constant_macro_mae(gold: &[usize], classes: usize) -> f64 {
    (0..classes)
        .map(|c| macro_mae(gold, &vec![c; gold.len()], classes))
        .fold(f64::INFINITY, f64::min)
}

/// One row of an oracle fixture file.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCase {
    pub name: String,
    pub oracle: String,
    pub input: BTreeMap<String, String>,
    pub expected: String,
    pub description: String,
}

impl OracleCase {
    pub fn field(&self, key: &str) -> Result<&str, OracleError> {
        self.input
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| OracleError(format!("case {}: no input field '{}'", self.name, key)))
    }

    /// Comma-separated reals.
    pub fn vector(&self, key: &str) -> Result<Vec<f64>, OracleError> {
        parse_reals(self.field(key)?)
    }

    /// Points as `x,y|x,y|...`.
    pub fn points(&self, key: &str) -> Result<Vec<Vec<f64>>, OracleError> {
        self.field(key)?.split('|').map(parse_reals).collect()
    }

    pub fn integer(&self, key: &str) -> Result<usize, OracleError> {
        self.field(key)?
            .parse()
            .map_err(|_| OracleError(format!("case {}: '{}' is not an integer", self.name, key)))
    }

    pub fn expected_real(&self) -> Result<f64, OracleError> {
        self.expected
            .parse()
            .map_err(|_| OracleError(format!("case {}: expected value is not a number", self.name)))
    }

    /// Evaluates the named oracle on the case input, rendered as the fixture
    /// would store it.
    pub fn evaluate(&self) -> Result<String, OracleError> {
        match self.oracle.as_str() {
            "brute_force_transport" => {
                let c = brute_force_transport(&self.vector("p")?, &self.vector("q")?)?;
                Ok(c.to_string())
            }
            "brute_force_kmeans" => {
                let (_, inertia) = brute_force_kmeans(&self.points("points")?, self.integer("k")?)?;
                Ok(inertia.to_string())
            }
            "brute_force_kmeans_partition" => {
                let (labels, _) = brute_force_kmeans(&self.points("points")?, self.integer("k")?)?;
                Ok(labels.iter().map(usize::to_string).collect::<Vec<_>>().join(","))
            }
            other => err(format!("case {}: unknown oracle '{}'", self.name, other)),
        }
    }
}

fn parse_reals(s: &str) -> Result<Vec<f64>, OracleError> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| OracleError(format!("bad number '{}'", x))))
        .collect()
}

/// Parses `name<TAB>oracle<TAB>input<TAB>expected<TAB>description` rows.
/// `input` is `key=value;key=value`. Lines starting with `#` are comments.
pub fn parse_cases(text: &str) -> Result<Vec<OracleCase>, OracleError> {
    let mut cases = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 5 {
            return err(format!("line {}: expected 5 columns, found {}", n + 1, cols.len()));
        }
        let mut input = BTreeMap::new();
        for kv in cols[2].split(';') {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| OracleError(format!("line {}: bad input field '{}'", n + 1, kv)))?;
            input.insert(k.trim().to_owned(), v.trim().to_owned());
        }
        cases.push(OracleCase {
            name: cols[0].to_owned(),
            oracle: cols[1].to_owned(),
            input,
            expected: cols[3].to_owned(),
            description: cols[4].to_owned(),
        });
    }
    Ok(cases)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transport_examples() {
        let u = [0.2; 5];
        assert_eq!(brute_force_transport(&u, &u).unwrap(), 0.0);
        let a = [1.0, 0.0, 0.0, 0.0, 0.0];
        let b = [0.0, 0.0, 0.0, 0.0, 1.0];
        assert_eq!(brute_force_transport(&a, &b).unwrap(), 4.0);
        assert_eq!(brute_force_transport(&b, &a).unwrap(), 4.0);
        assert_eq!(brute_force_transport(&[0.5, 0.5], &[0.0, 1.0]).unwrap(), 0.5);
        assert!(brute_force_transport(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn kmeans_examples() {
        let pts = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![10.0, 10.0], vec![10.0, 11.0]];
        let (labels, inertia) = brute_force_kmeans(&pts, 2).unwrap();
        assert_eq!(labels, vec![0, 0, 1, 1]);
        assert_eq!(inertia, 1.0);
        assert_eq!(brute_force_kmeans(&pts, 4).unwrap().1, 0.0);
        // k = 1: sum of squared deviations from the grand mean (5, 5.5).
        let var: f64 = pts.iter().map(|p| (p[0] - 5.0).powi(2) + (p[1] - 5.5).powi(2)).sum();
        assert_eq!(brute_force_kmeans(&pts, 1).unwrap().1, var);
        assert!(brute_force_kmeans(&vec![vec![0.0]; 13], 2).is_err());
    }

    #[test]
    fn partition_count() {
        // Partitions of 5 items into at most 2 blocks: S(5,1) + S(5,2) = 1 + 15.
        fn count(n: usize, k: usize, pos: usize, used: usize) -> usize {
            if pos == n {
                return 1;
            }
            (0..used.min(k - 1) + 1)
                .map(|l| count(n, k, pos + 1, if l == used { used + 1 } else { used }))
                .sum()
        }
        assert_eq!(count(5, 2, 1, 1), 16);
        assert_eq!(count(4, 4, 1, 1), 15);
    }

    #[test]
    fn finite_differences() {
        let g = central_difference(|x| x[0] * x[0] + 3.0 * x[1], &[2.0, -1.0], 1e-5);
        assert!((g[0] - 4.0).abs() < 1e-8 && (g[1] - 3.0).abs() < 1e-8);
    }

    #[test]
    fn chi_square() {
        let p = chi_square_p_value(&[250, 250, 250, 250], &[0.25; 4]).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        let p = chi_square_p_value(&[1000, 0, 0, 0], &[0.25; 4]).unwrap();
        assert!(p < 1e-12);
        assert_eq!(chi_square_p_value(&[5, 0], &[1.0, 0.0]), err("need at least two categories of positive probability"));
        assert_eq!(chi_square_p_value(&[5, 1], &[1.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn mae_forms() {
        assert_eq!(micro_mae(&[0, 1, 2], &[0, 1, 2]), 0.0);
        assert_eq!(macro_mae(&[0, 0, 0, 1], &[1, 1, 1, 1], 2), 0.5);
        assert_eq!(micro_mae(&[0, 0, 0, 1], &[1, 1, 1, 1]), 0.75);
    }

    #[test]
    fn parse_fixture_rows() {
        let text = "# comment\nx\tbrute_force_transport\tp=1,0;q=0,1\t1\tswap\n";
        let cases = parse_cases(text).unwrap();
        assert_eq!(cases.len(), 1);
        assert_eq!(cases[0].evaluate().unwrap(), "1");
        assert!(parse_cases("a\tb\n").is_err());
    }
}
