//! Input patterns, their planted and rooted variants and the degree profile.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::trees::{planted_from_adjacency, PlantedTree};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PatternError {
    #[error("empty pattern")]
    Empty,
    #[error("not a tree: {0}")]
    NotATree(String),
    #[error("kind conflict at node {node}: {reason}")]
    KindConflict { node: i64, reason: String },
    #[error("malformed pattern document: {0}")]
    Malformed(String),
    #[error("unknown named pattern {0:?}")]
    UnknownName(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Internal,
    External,
}

/// A finite tree whose non-leaves are internal (degree-constrained) and whose
/// leaves are external (unconstrained).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    name: String,
    /// Original node ids; position `i` is internal node `i + 1`.
    ids: Vec<i64>,
    /// Edges over internal indices `1..=k`.
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
}

#[derive(Debug, Deserialize)]
struct PatternDoc {
    nodes: Vec<i64>,
    edges: Vec<[i64; 2]>,
    #[serde(default)]
    kinds: BTreeMap<String, Kind>,
}

/// Degree data of the planted patterns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DegreeProfile {
    /// Out-degrees of internal nodes in planted patterns.
    pub d: BTreeSet<usize>,
    /// Degrees of internal pattern nodes, `D + 1`.
    pub dbar: BTreeSet<usize>,
    /// Largest planted-pattern height.
    pub h: usize,
}

impl Pattern {
    /// Build from node ids and edges, checking the tree property and any
    /// explicit kinds.
    pub fn new(
        name: impl Into<String>,
        nodes: &[i64],
        edges: &[(i64, i64)],
        kinds: &BTreeMap<i64, Kind>,
    ) -> Result<Self, PatternError> {
        if nodes.is_empty() {
            return Err(PatternError::Empty);
        }
        let mut index = BTreeMap::new();
        for (i, &id) in nodes.iter().enumerate() {
            if index.insert(id, i + 1).is_some() {
                return Err(PatternError::Malformed(format!("duplicate node {id}")));
            }
        }
        let k = nodes.len();
        if edges.len() + 1 != k {
            return Err(PatternError::NotATree(format!("{} edges for {} nodes", edges.len(), k)));
        }
        let mut adj = vec![Vec::new(); k + 1];
        let mut local = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            let lookup = |x: i64| index.get(&x).copied().ok_or_else(|| PatternError::Malformed(format!("edge mentions unknown node {x}")));
            let (a, b) = (lookup(u)?, lookup(v)?);
            if a == b {
                return Err(PatternError::NotATree(format!("self loop at {u}")));
            }
            adj[a].push(b);
            adj[b].push(a);
            local.push((a.min(b), a.max(b)));
        }
        // connected with k-1 edges means acyclic
        let mut seen = vec![false; k + 1];
        let mut stack = vec![1];
        seen[1] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        if seen[1..].iter().any(|s| !s) {
            return Err(PatternError::NotATree("disconnected".into()));
        }
        for (&id, &kind) in kinds {
            let i = *index.get(&id).ok_or_else(|| PatternError::Malformed(format!("kind for unknown node {id}")))?;
            let leaf = adj[i].len() <= 1;
            match (kind, leaf) {
                (Kind::Internal, true) => {
                    return Err(PatternError::KindConflict { node: id, reason: "a leaf cannot be internal".into() })
                }
                (Kind::External, false) => {
                    return Err(PatternError::KindConflict { node: id, reason: "a non-leaf cannot be external".into() })
                }
                _ => {}
            }
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        local.sort_unstable();
        Ok(Pattern { name: name.into(), ids: nodes.to_vec(), edges: local, adj })
    }

    /// Parse the JSON pattern document.
    pub fn parse(doc: &str) -> Result<Self, PatternError> {
        let d: PatternDoc = serde_json::from_str(doc).map_err(|e| PatternError::Malformed(e.to_string()))?;
        let mut kinds = BTreeMap::new();
        for (k, v) in d.kinds {
            let id: i64 = k.trim().parse().map_err(|_| PatternError::Malformed(format!("bad kind key {k:?}")))?;
            kinds.insert(id, v);
        }
        let edges: Vec<(i64, i64)> = d.edges.iter().map(|e| (e[0], e[1])).collect();
        Pattern::new("custom", &d.nodes, &edges, &kinds)
    }

    /// Built-in patterns: `node`, `edge`, `star:k`, `paper:fig1`, `paper:fig7`.
    pub fn named(name: &str) -> Result<Self, PatternError> {
        let none = BTreeMap::new();
        let seq = |k: i64| (1..=k).collect::<Vec<_>>();
        match name {
            "node" => Pattern::new(name, &[1], &[], &none),
            "edge" => Pattern::new(name, &[1, 2], &[(1, 2)], &none),
            "paper:fig1" => {
                // path u-v-w of degree-3 nodes; u and w carry two leaves, v one
                let edges = [(1, 2), (2, 3), (1, 4), (1, 5), (2, 6), (3, 7), (3, 8)];
                Pattern::new(name, &seq(8), &edges, &none)
            }
            "paper:fig7" => {
                // centre 1 (degree 3) joined to 2 (degree 4), 3 (degree 5) and a leaf
                let edges = [(1, 2), (1, 3), (1, 4), (2, 5), (2, 6), (2, 7), (3, 8), (3, 9), (3, 10), (3, 11)];
                Pattern::new(name, &seq(11), &edges, &none)
            }
            _ => {
                let k: i64 = name
                    .strip_prefix("star:")
                    .and_then(|k| k.parse().ok())
                    .filter(|&k| k >= 1)
                    .ok_or_else(|| PatternError::UnknownName(name.into()))?;
                let edges: Vec<(i64, i64)> = (2..=k + 1).map(|v| (1, v)).collect();
                Pattern::new(name, &seq(k + 1), &edges, &none)
            }
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn size(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[i64] {
        &self.ids
    }

    /// Edges over node indices `1..=size`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Neighbour lists over node indices `1..=size` (index 0 unused).
    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adj
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn kind(&self, v: usize) -> Kind {
        if self.adj[v].len() >= 2 {
            Kind::Internal
        } else {
            Kind::External
        }
    }

    pub fn internal_nodes(&self) -> Vec<usize> {
        (1..=self.size()).filter(|&v| self.kind(v) == Kind::Internal).collect()
    }

    /// One planted pattern per internal node adjacent to an external node,
    /// planted at such a neighbour; deduplicated and sorted.
    pub fn planted_patterns(&self) -> Vec<PlantedTree> {
        let mut out = BTreeSet::new();
        for y in self.internal_nodes() {
            if let Some(&z) = self.adj[y].iter().find(|&&z| self.kind(z) == Kind::External) {
                out.insert(planted_from_adjacency(&self.adj, y, z));
            }
        }
        out.into_iter().collect()
    }

    /// One rooted pattern per internal node, deduplicated and sorted.
    pub fn rooted_patterns(&self) -> Vec<PlantedTree> {
        let set: BTreeSet<_> = self.internal_nodes().into_iter().map(|y| planted_from_adjacency(&self.adj, y, 0)).collect();
        set.into_iter().collect()
    }

    /// The whole pattern rooted at node `v`.
    pub fn rooted_at(&self, v: usize) -> PlantedTree {
        planted_from_adjacency(&self.adj, v, 0)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "nodes": self.ids,
            "edges": self.edges.iter().map(|&(u, v)| [self.ids[u - 1], self.ids[v - 1]]).collect::<Vec<_>>(),
        })
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} nodes)", self.name, self.size())
    }
}

/// `D`, `D̄` and `h` from a nonempty set of planted patterns.
pub fn degree_profile(planted: &[PlantedTree]) -> DegreeProfile {
    let mut d = BTreeSet::new();
    for p in planted {
        p.internal_out_degrees(&mut d);
    }
    let dbar = d.iter().map(|x| x + 1).collect();
    let h = planted.iter().map(PlantedTree::height).max().unwrap_or(0);
    DegreeProfile { d, dbar, h }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::general_to_planar;

    #[test]
    fn star_patterns() {
        for k in 2..6 {
            let p = Pattern::named(&format!("star:{k}")).unwrap();
            let pp = p.planted_patterns();
            assert_eq!(pp, vec![PlantedTree::star(k - 1)]);
            assert_eq!(p.rooted_patterns(), vec![PlantedTree::star(k)]);
            let dp = degree_profile(&pp);
            assert_eq!(dp.d, BTreeSet::from([k - 1]));
            assert_eq!(dp.h, 1);
        }
    }

    #[test]
    fn edge_kinds_inferred() {
        let p = Pattern::parse(r#"{"nodes":[1,2],"edges":[[1,2]]}"#).unwrap();
        assert!(p.internal_nodes().is_empty());
        assert_eq!(p.kind(1), Kind::External);
    }

    #[test]
    fn kind_conflicts() {
        let doc = r#"{"nodes":[1,2,3],"edges":[[1,2],[2,3]],"kinds":{"1":"internal"}}"#;
        assert!(matches!(Pattern::parse(doc), Err(PatternError::KindConflict { node: 1, .. })));
        let doc = r#"{"nodes":[1,2,3],"edges":[[1,2],[2,3]],"kinds":{"2":"external"}}"#;
        assert!(matches!(Pattern::parse(doc), Err(PatternError::KindConflict { node: 2, .. })));
        let ok = r#"{"nodes":[1,2,3],"edges":[[1,2],[2,3]],"kinds":{"2":"internal","3":"external"}}"#;
        assert_eq!(Pattern::parse(ok).unwrap().rooted_patterns().len(), 1);
        assert!(matches!(Pattern::parse(r#"{"nodes":[],"edges":[]}"#), Err(PatternError::Empty)));
        assert!(Pattern::parse(r#"{"nodes":[1,2,3],"edges":[[1,2]]}"#).is_err());
    }

    #[test]
    fn fig1_profile() {
        let p = Pattern::named("paper:fig1").unwrap();
        let pp = p.planted_patterns();
        assert_eq!(pp.len(), 2);
        assert_eq!(p.rooted_patterns().len(), 2);
        let dp = degree_profile(&pp);
        assert_eq!(dp.d, BTreeSet::from([2]));
        assert_eq!(dp.h, 3);
    }

    #[test]
    fn fig7_planted_embeddings() {
        let p = Pattern::named("paper:fig7").unwrap();
        let pp = p.planted_patterns();
        let mut counts: Vec<usize> = pp.iter().map(|t| general_to_planar(t).len()).collect();
        counts.sort();
        assert_eq!(counts, vec![2, 6, 8]);
        assert_eq!(degree_profile(&pp).d, BTreeSet::from([2, 3, 4]));
    }
}
