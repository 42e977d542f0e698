//! Brute-force occurrence counts over all labeled trees of a given size.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::Rat;
use crate::pattern::{Kind, Pattern};
use crate::series::{BivariateSeries, UCoef};
use crate::trees::{decode_edges, labeled_tree_count, prufer_from_index, LabeledTree, TreeError, DEFAULT_ENUM_CAP};

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("could not build a thread pool: {0}")]
    Threads(String),
}

/// Search plan for embeddings of a pattern: nodes in BFS order from an
/// anchor, each with its parent position and required degree.
#[derive(Debug, Clone)]
pub struct Matcher {
    order: Vec<usize>,
    parent: Vec<usize>,
    degree: Vec<Option<usize>>,
    automorphisms: u64,
}

impl Matcher {
    pub fn new(p: &Pattern) -> Self {
        let adj = p.adjacency();
        // anchor: internal node of largest degree, the rarest image
        let anchor = p.internal_nodes().into_iter().max_by_key(|&v| (p.degree(v), std::cmp::Reverse(v))).unwrap_or(1);
        let mut order = vec![anchor];
        let mut parent = vec![usize::MAX];
        let mut seen = vec![false; p.size() + 1];
        seen[anchor] = true;
        let mut i = 0;
        while i < order.len() {
            let v = order[i];
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    order.push(w);
                    parent.push(i);
                }
            }
            i += 1;
        }
        let degree = order.iter().map(|&v| (p.kind(v) == Kind::Internal).then(|| p.degree(v))).collect();
        let mut m = Matcher { order, parent, degree, automorphisms: 1 };
        let mut padj = adj.to_vec();
        for a in &mut padj {
            a.sort_unstable();
        }
        m.automorphisms = m.embeddings(&padj);
        m
    }

    pub fn automorphisms(&self) -> u64 {
        self.automorphisms
    }

    /// Injective adjacency-preserving maps with exact degrees on internal
    /// nodes; `adj` is indexed by label, index 0 unused.
    pub fn embeddings(&self, adj: &[Vec<usize>]) -> u64 {
        let k = self.order.len();
        let mut image = vec![0usize; k];
        let mut used = vec![false; adj.len()];
        let mut total = 0u64;
        for v in 1..adj.len() {
            if self.degree[0].is_some_and(|d| adj[v].len() != d) {
                continue;
            }
            image[0] = v;
            used[v] = true;
            total += self.extend(adj, 1, &mut image, &mut used);
            used[v] = false;
        }
        total
    }

    fn extend(&self, adj: &[Vec<usize>], i: usize, image: &mut [usize], used: &mut [bool]) -> u64 {
        if i == self.order.len() {
            return 1;
        }
        let base = image[self.parent[i]];
        let mut total = 0;
        for &w in &adj[base] {
            if used[w] || self.degree[i].is_some_and(|d| adj[w].len() != d) {
                continue;
            }
            image[i] = w;
            used[w] = true;
            total += self.extend(adj, i + 1, image, used);
            used[w] = false;
        }
        total
    }

    /// Occurrences as node subsets: embeddings over automorphisms.
    pub fn count(&self, adj: &[Vec<usize>]) -> u64 {
        let e = self.embeddings(adj);
        assert_eq!(e % self.automorphisms, 0, "embedding count {e} not divisible by |Aut| = {}", self.automorphisms);
        e / self.automorphisms
    }
}

/// Number of occurrences of `m` in `t`.
pub fn count_occurrences(t: &LabeledTree, m: &Pattern) -> u64 {
    Matcher::new(m).count(&t.adjacency())
}

/// Histogram `m ↦ number of trees of size n with exactly m occurrences`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OccurrenceDistribution {
    pub n: usize,
    pub counts: BTreeMap<u64, u64>,
}

impl OccurrenceDistribution {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn mean(&self) -> Rat {
        let s: u64 = self.counts.iter().map(|(m, c)| m * c).sum();
        Rat::new(s.into(), self.total().into())
    }

    pub fn variance(&self) -> Rat {
        let tot = BigInt::from(self.total());
        let s2: BigInt = self.counts.iter().map(|(m, c)| BigInt::from(*m) * BigInt::from(*m) * BigInt::from(*c)).sum();
        let mean = self.mean();
        Rat::new(s2, tot) - &mean * &mean
    }
}

fn merge(mut a: BTreeMap<u64, u64>, b: BTreeMap<u64, u64>) -> BTreeMap<u64, u64> {
    for (k, v) in b {
        *a.entry(k).or_insert(0) += v;
    }
    a
}

const CHUNK: u64 = 4096;

fn histogram(n: usize, m: &Pattern) -> BTreeMap<u64, u64> {
    let matcher = Matcher::new(m);
    if n == 1 {
        let adj = vec![Vec::new(), Vec::new()];
        return BTreeMap::from([(matcher.count(&adj), 1)]);
    }
    let total = labeled_tree_count(n);
    let chunks = total.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut hist = BTreeMap::new();
            let mut seq = Vec::new();
            let mut deg = vec![0usize; n + 1];
            let mut adj: Vec<Vec<usize>> = vec![Vec::with_capacity(n); n + 1];
            for idx in c * CHUNK..((c + 1) * CHUNK).min(total) {
                prufer_from_index(n, idx, &mut seq);
                for a in &mut adj {
                    a.clear();
                }
                decode_edges(&seq, n, &mut deg, |u, v| {
                    adj[u].push(v);
                    adj[v].push(u);
                });
                *hist.entry(matcher.count(&adj)).or_insert(0) += 1;
            }
            hist
        })
        .reduce(BTreeMap::new, merge)
}

fn run_with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, OracleError> {
    match threads {
        None => Ok(f()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(k).build().map_err(|e| OracleError::Threads(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Exact histogram over all `n^(n-2)` labeled trees of size `n`.
pub fn distribution(n: usize, m: &Pattern, cap: usize, threads: Option<usize>) -> Result<OccurrenceDistribution, OracleError> {
    if n > cap {
        return Err(TreeError::CapExceeded { n, cap }.into());
    }
    if n == 0 {
        return Err(TreeError::TooSmall { n, min: 1 }.into());
    }
    let counts = run_with_threads(threads, || histogram(n, m))?;
    Ok(OccurrenceDistribution { n, counts })
}

pub fn distribution_default(n: usize, m: &Pattern) -> Result<OccurrenceDistribution, OracleError> {
    distribution(n, m, DEFAULT_ENUM_CAP, None)
}

/// Histogram over rooted trees: every tree once per choice of root, with
/// the occurrence count of the unrooted tree.
pub fn rooted_distribution(n: usize, m: &Pattern, cap: usize, threads: Option<usize>) -> Result<OccurrenceDistribution, OracleError> {
    let d = distribution(n, m, cap, threads)?;
    Ok(OccurrenceDistribution { n, counts: d.counts.into_iter().map(|(k, v)| (k, v * n as u64)).collect() })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub m: u64,
    pub series: String,
    pub oracle: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CompareReport {
    pub n: usize,
    pub equal: bool,
    pub first_mismatch: Option<Mismatch>,
}

/// Coefficient-wise comparison of `n! [x^n] t(x, u)` (full mode) with a
/// histogram.
pub fn compare(series_t: &BivariateSeries, dist: &OccurrenceDistribution) -> CompareReport {
    let n = dist.n;
    let poly: Vec<BigInt> = match series_t.coeffs.get(n) {
        Some(UCoef::Poly(p)) => p.clone(),
        _ => {
            return CompareReport {
                n,
                equal: false,
                first_mismatch: Some(Mismatch { m: 0, series: "unavailable".into(), oracle: dist.counts.get(&0).copied().unwrap_or(0).to_string() }),
            }
        }
    };
    let top = (poly.len() as u64).max(dist.counts.keys().next_back().map_or(0, |&k| k + 1));
    for m in 0..top {
        let s = poly.get(m as usize).cloned().unwrap_or_default();
        let o = BigInt::from(dist.counts.get(&m).copied().unwrap_or(0));
        if s != o {
            return CompareReport { n, equal: false, first_mismatch: Some(Mismatch { m, series: s.to_string(), oracle: o.to_string() }) };
        }
    }
    CompareReport { n, equal: true, first_mismatch: None }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchors() {
        let edge = Pattern::named("edge").unwrap();
        let path = LabeledTree::parse("3; 1-2, 2-3").unwrap();
        assert_eq!(count_occurrences(&path, &edge), 2);
        assert_eq!(count_occurrences(&path, &Pattern::named("star:2").unwrap()), 1);
        assert_eq!(count_occurrences(&path, &Pattern::named("node").unwrap()), 3);
    }

    #[test]
    fn edge_histograms() {
        let edge = Pattern::named("edge").unwrap();
        assert_eq!(distribution_default(4, &edge).unwrap().counts, BTreeMap::from([(3, 16)]));
        assert_eq!(rooted_distribution(3, &edge, 9, None).unwrap().counts, BTreeMap::from([(2, 9)]));
    }

    #[test]
    fn too_small() {
        let d = distribution_default(5, &Pattern::named("paper:fig1").unwrap()).unwrap();
        assert_eq!(d.counts, BTreeMap::from([(0, 125)]));
        assert!(distribution(10, &Pattern::named("edge").unwrap(), 9, None).is_err());
    }

    #[test]
    fn fig1_automorphisms() {
        // swaps of the two leaf pairs at both ends and the end-to-end flip
        assert_eq!(Matcher::new(&Pattern::named("paper:fig1").unwrap()).automorphisms(), 8);
    }
}
