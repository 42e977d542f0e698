//! Labeled trees, planted (rooted, unordered) trees, planar trees, canonical
//! codes and Prüfer enumeration.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::One;

/// Default cap on the size of exhaustively enumerated labeled trees.
pub const DEFAULT_ENUM_CAP: usize = 9;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TreeError {
    #[error("Prüfer sequence for n={n} must have length {expected}, got {got}")]
    PruferLength { n: usize, expected: usize, got: usize },
    #[error("label {label} out of range 1..={n}")]
    LabelRange { label: usize, n: usize },
    #[error("n={n} exceeds the enumeration cap {cap}")]
    CapExceeded { n: usize, cap: usize },
    #[error("tree size must be at least {min}, got {n}")]
    TooSmall { n: usize, min: usize },
    #[error("not a tree: {0}")]
    NotATree(String),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Unrooted tree on labels `1..=n`; edges stored as `(min, max)` pairs, sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabeledTree {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl LabeledTree {
    /// Validates connectivity, acyclicity and the label range.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self, TreeError> {
        if n == 0 {
            return Err(TreeError::TooSmall { n, min: 1 });
        }
        if edges.len() + 1 != n {
            return Err(TreeError::NotATree(format!("{} edges for {} nodes", edges.len(), n)));
        }
        let mut uf: Vec<usize> = (0..=n).collect();
        fn find(uf: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while uf[r] != r {
                r = uf[r];
            }
            let mut x = x;
            while uf[x] != r {
                let nx = uf[x];
                uf[x] = r;
                x = nx;
            }
            r
        }
        let mut norm = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            for w in [u, v] {
                if w == 0 || w > n {
                    return Err(TreeError::LabelRange { label: w, n });
                }
            }
            let (a, b) = (find(&mut uf, u), find(&mut uf, v));
            if a == b {
                return Err(TreeError::NotATree(format!("edge {u}-{v} closes a cycle")));
            }
            uf[a] = b;
            norm.push((u.min(v), u.max(v)));
        }
        norm.sort_unstable();
        Ok(LabeledTree { n, edges: norm })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Neighbour lists indexed by label (index 0 unused).
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n + 1];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }

    pub fn degree(&self, label: usize) -> usize {
        self.edges.iter().filter(|&&(u, v)| u == label || v == label).count()
    }

    /// The planted tree obtained by rooting at `root`.
    pub fn planted_at(&self, root: usize) -> PlantedTree {
        let adj = self.adjacency();
        planted_from_adjacency(&adj, root, 0)
    }

    /// Parse `n; u-v, u-v, ...`.
    pub fn parse(s: &str) -> Result<Self, TreeError> {
        let (n, rest) = s.split_once(';').unwrap_or((s, ""));
        let n: usize = n.trim().parse().map_err(|_| TreeError::Parse(format!("bad size in {s:?}")))?;
        let mut edges = Vec::new();
        for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (u, v) = part
                .split_once('-')
                .ok_or_else(|| TreeError::Parse(format!("bad edge {part:?}")))?;
            let u: usize = u.trim().parse().map_err(|_| TreeError::Parse(format!("bad edge {part:?}")))?;
            let v: usize = v.trim().parse().map_err(|_| TreeError::Parse(format!("bad edge {part:?}")))?;
            edges.push((u, v));
        }
        LabeledTree::new(n, &edges)
    }
}

impl fmt::Display for LabeledTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};", self.n)?;
        for (i, (u, v)) in self.edges.iter().enumerate() {
            write!(f, "{}{}-{}", if i == 0 { " " } else { ", " }, u, v)?;
        }
        Ok(())
    }
}

/// Planted tree hanging below `v`, coming from `parent` (0 for none).
pub fn planted_from_adjacency(adj: &[Vec<usize>], v: usize, parent: usize) -> PlantedTree {
    let kids = adj[v]
        .iter()
        .filter(|&&w| w != parent)
        .map(|&w| planted_from_adjacency(adj, w, v))
        .collect();
    PlantedTree::node(kids)
}

/// Decode a Prüfer sequence (labels 1-based) into a tree on `n ≥ 2` nodes.
pub fn prufer_decode(seq: &[usize], n: usize) -> Result<LabeledTree, TreeError> {
    if n < 2 {
        return Err(TreeError::TooSmall { n, min: 2 });
    }
    if seq.len() != n - 2 {
        return Err(TreeError::PruferLength { n, expected: n - 2, got: seq.len() });
    }
    if let Some(&bad) = seq.iter().find(|&&x| x == 0 || x > n) {
        return Err(TreeError::LabelRange { label: bad, n });
    }
    let mut edges = Vec::with_capacity(n - 1);
    decode_edges(seq, n, &mut vec![0; n + 1], |u, v| edges.push((u, v)));
    LabeledTree::new(n, &edges)
}

/// Linear-time Prüfer decoding reporting each edge; `degree` is scratch space
/// of length `n + 1`. Inputs are assumed valid.
pub fn decode_edges(seq: &[usize], n: usize, degree: &mut [usize], mut edge: impl FnMut(usize, usize)) {
    degree[1..=n].fill(1);
    for &x in seq {
        degree[x] += 1;
    }
    let mut ptr = 1;
    while degree[ptr] != 1 {
        ptr += 1;
    }
    let mut leaf = ptr;
    for &x in seq {
        edge(leaf, x);
        degree[leaf] = 0;
        degree[x] -= 1;
        if degree[x] == 1 && x < ptr {
            leaf = x;
        } else {
            ptr += 1;
            while degree[ptr] != 1 {
                ptr += 1;
            }
            leaf = ptr;
        }
    }
    edge(leaf, n);
}

/// Prüfer sequence of a tree with at least two nodes.
pub fn prufer_encode(t: &LabeledTree) -> Vec<usize> {
    let n = t.n();
    let adj = t.adjacency();
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut removed = vec![false; n + 1];
    let mut seq = Vec::with_capacity(n.saturating_sub(2));
    for _ in 0..n.saturating_sub(2) {
        let leaf = (1..=n).find(|&v| !removed[v] && degree[v] == 1).expect("a tree has leaves");
        let nb = adj[leaf].iter().copied().find(|&w| !removed[w]).expect("leaf has a neighbour");
        seq.push(nb);
        removed[leaf] = true;
        degree[nb] -= 1;
    }
    seq
}

/// `n^(n-2)` for `n ≥ 2` (1 for n = 1).
pub fn labeled_tree_count(n: usize) -> u64 {
    if n <= 2 {
        1
    } else {
        (n as u64).pow(n as u32 - 2)
    }
}

/// The Prüfer sequence with lexicographic rank `index`.
pub fn prufer_from_index(n: usize, index: u64, out: &mut Vec<usize>) {
    out.clear();
    out.resize(n.saturating_sub(2), 1);
    let mut idx = index;
    for slot in out.iter_mut().rev() {
        *slot = (idx % n as u64) as usize + 1;
        idx /= n as u64;
    }
}

/// All labeled trees of size `n` in lexicographic Prüfer order.
pub fn enumerate_labeled_trees(n: usize, cap: usize) -> Result<impl Iterator<Item = LabeledTree>, TreeError> {
    if n > cap {
        return Err(TreeError::CapExceeded { n, cap });
    }
    if n < 2 {
        return Err(TreeError::TooSmall { n, min: 2 });
    }
    let total = labeled_tree_count(n);
    let mut seq = Vec::new();
    Ok((0..total).map(move |i| {
        prufer_from_index(n, i, &mut seq);
        prufer_decode(&seq, n).expect("valid sequence")
    }))
}

/// Leaf annotation of a planted or planar tree node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mark {
    /// Leaf whose out-degree is not in the degree set `D` (written `#`).
    Box,
    /// Leaf standing for an arbitrary subtree (written `*`).
    Any,
    /// Ordinary node; its out-degree is its number of children.
    Node,
}

impl Mark {
    fn tag(self) -> u32 {
        match self {
            Mark::Box => 0,
            Mark::Any => 1,
            Mark::Node => 2,
        }
    }
}

/// Rooted unordered tree. Children are kept sorted, so structural equality
/// is isomorphism.
///
/// In pattern contexts a childless `Node` is an external (wildcard) leaf.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PlantedTree {
    mark: Mark,
    children: Vec<PlantedTree>,
}

/// Preorder sequence of `(mark tag, out-degree)` pairs; prefix free, so its
/// lexicographic order is a total order on isomorphism classes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalCode(pub Vec<u32>);

impl PlantedTree {
    pub fn leaf() -> Self {
        PlantedTree { mark: Mark::Node, children: Vec::new() }
    }

    pub fn marked(mark: Mark) -> Self {
        PlantedTree { mark, children: Vec::new() }
    }

    pub fn node(mut children: Vec<PlantedTree>) -> Self {
        children.sort();
        PlantedTree { mark: Mark::Node, children }
    }

    /// Root with `k` leaf children.
    pub fn star(k: usize) -> Self {
        PlantedTree::node(vec![PlantedTree::leaf(); k])
    }

    pub fn mark(&self) -> Mark {
        self.mark
    }

    pub fn children(&self) -> &[PlantedTree] {
        &self.children
    }

    pub fn out_degree(&self) -> usize {
        self.children.len()
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(PlantedTree::size).sum::<usize>()
    }

    /// Depth of the deepest node (a single node has height 0).
    pub fn height(&self) -> usize {
        self.children.iter().map(|c| c.height() + 1).max().unwrap_or(0)
    }

    pub fn canonical_code(&self) -> CanonicalCode {
        let mut out = Vec::with_capacity(2 * self.size());
        self.push_code(&mut out);
        CanonicalCode(out)
    }

    fn push_code(&self, out: &mut Vec<u32>) {
        out.push(self.mark.tag());
        out.push(self.children.len() as u32);
        for c in &self.children {
            c.push_code(out);
        }
    }

    /// Out-degrees of all nodes with at least one child.
    pub fn internal_out_degrees(&self, out: &mut std::collections::BTreeSet<usize>) {
        if !self.children.is_empty() {
            out.insert(self.children.len());
        }
        for c in &self.children {
            c.internal_out_degrees(out);
        }
    }

    /// Children grouped as `(child, multiplicity)` in sorted order.
    pub fn child_groups(&self) -> Vec<(&PlantedTree, usize)> {
        let mut groups: Vec<(&PlantedTree, usize)> = Vec::new();
        for c in &self.children {
            match groups.last_mut() {
                Some((g, m)) if *g == c => *m += 1,
                _ => groups.push((c, 1)),
            }
        }
        groups
    }

    /// `|Aut(t)|` as a rooted unordered tree respecting marks.
    pub fn automorphism_count(&self) -> BigUint {
        let mut acc = BigUint::one();
        for (c, m) in self.child_groups() {
            acc *= factorial(m);
            let a = c.automorphism_count();
            for _ in 0..m {
                acc *= &a;
            }
        }
        acc
    }

    /// Proper subtrees (excluding the tree itself) in depth-first post-order,
    /// children visited in sorted order.
    pub fn proper_subtrees_postorder<'a>(&'a self, out: &mut Vec<&'a PlantedTree>) {
        for c in &self.children {
            c.proper_subtrees_postorder(out);
            out.push(c);
        }
    }

    /// Parse the nested-parentheses format: `x(x(.)(.))(.)`; `.` is a plain
    /// leaf, `#` a `Box` leaf and `*` an `Any` leaf.
    pub fn parse(s: &str) -> Result<Self, TreeError> {
        let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut pos = 0;
        let t = parse_planted(&chars, &mut pos)?;
        if pos != chars.len() {
            return Err(TreeError::Parse(format!("trailing input at {pos} in {s:?}")));
        }
        Ok(t)
    }
}

fn parse_planted(c: &[char], pos: &mut usize) -> Result<PlantedTree, TreeError> {
    let err = |p: usize| TreeError::Parse(format!("unexpected input at position {p}"));
    match c.get(*pos) {
        Some('.') => {
            *pos += 1;
            Ok(PlantedTree::leaf())
        }
        Some('#') => {
            *pos += 1;
            Ok(PlantedTree::marked(Mark::Box))
        }
        Some('*') => {
            *pos += 1;
            Ok(PlantedTree::marked(Mark::Any))
        }
        Some('x') => {
            *pos += 1;
            let mut kids = Vec::new();
            while c.get(*pos) == Some(&'(') {
                *pos += 1;
                kids.push(parse_planted(c, pos)?);
                if c.get(*pos) != Some(&')') {
                    return Err(err(*pos));
                }
                *pos += 1;
            }
            Ok(PlantedTree::node(kids))
        }
        _ => Err(err(*pos)),
    }
}

impl Ord for PlantedTree {
    /// Agrees with the lexicographic order of canonical codes.
    fn cmp(&self, o: &Self) -> Ordering {
        self.mark
            .tag()
            .cmp(&o.mark.tag())
            .then(self.children.len().cmp(&o.children.len()))
            .then_with(|| self.children.cmp(&o.children))
    }
}

impl PartialOrd for PlantedTree {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl fmt::Display for PlantedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mark {
            Mark::Box => write!(f, "#"),
            Mark::Any => write!(f, "*"),
            Mark::Node if self.children.is_empty() => write!(f, "."),
            Mark::Node => {
                write!(f, "x")?;
                for c in &self.children {
                    write!(f, "({c})")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Debug for PlantedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Rooted tree with ordered children.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlanarTree {
    pub mark: Mark,
    pub children: Vec<PlanarTree>,
}

impl PlanarTree {
    pub fn leaf() -> Self {
        PlanarTree { mark: Mark::Node, children: Vec::new() }
    }

    /// The implied unordered structure.
    pub fn to_planted(&self) -> PlantedTree {
        PlantedTree {
            mark: self.mark,
            children: {
                let mut c: Vec<_> = self.children.iter().map(PlanarTree::to_planted).collect();
                c.sort();
                c
            },
        }
    }
}

impl fmt::Display for PlanarTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", PlantedTreeView(self))
    }
}

impl fmt::Debug for PlanarTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

struct PlantedTreeView<'a>(&'a PlanarTree);

impl fmt::Display for PlantedTreeView<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.0;
        match t.mark {
            Mark::Box => write!(f, "#"),
            Mark::Any => write!(f, "*"),
            Mark::Node if t.children.is_empty() => write!(f, "."),
            Mark::Node => {
                write!(f, "x")?;
                for c in &t.children {
                    write!(f, "({})", PlantedTreeView(c))?;
                }
                Ok(())
            }
        }
    }
}

/// All planar embeddings of `t`, sorted and free of duplicates.
pub fn general_to_planar(t: &PlantedTree) -> Vec<PlanarTree> {
    if t.is_leaf() {
        return vec![PlanarTree { mark: t.mark, children: Vec::new() }];
    }
    let groups = t.child_groups();
    let options: Vec<Vec<PlanarTree>> = groups.iter().map(|(c, _)| general_to_planar(c)).collect();
    let mut kinds: Vec<usize> = Vec::new();
    for (i, (_, m)) in groups.iter().enumerate() {
        kinds.extend(std::iter::repeat(i).take(*m));
    }
    let mut out = Vec::new();
    loop {
        // cartesian product of embeddings along this arrangement of kinds
        let mut partial: Vec<Vec<PlanarTree>> = vec![Vec::new()];
        for &k in &kinds {
            let mut next = Vec::with_capacity(partial.len() * options[k].len());
            for p in &partial {
                for o in &options[k] {
                    let mut q = p.clone();
                    q.push(o.clone());
                    next.push(q);
                }
            }
            partial = next;
        }
        out.extend(partial.into_iter().map(|children| PlanarTree { mark: t.mark, children }));
        if !next_permutation(&mut kinds) {
            break;
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Advance to the next lexicographic permutation; false after the last one.
pub fn next_permutation<T: Ord>(v: &mut [T]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

pub fn factorial(k: usize) -> BigUint {
    (1..=k).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

/// All unlabeled planted trees with exactly `n` nodes, sorted.
pub fn enumerate_planted_shapes(n: usize) -> Vec<PlantedTree> {
    shapes_up_to(n).pop().unwrap_or_default()
}

/// `out[s]` lists the planted shapes with `s` nodes, for `s = 0..=n`.
pub fn shapes_up_to(n: usize) -> Vec<Vec<PlantedTree>> {
    let mut by_size: Vec<Vec<PlantedTree>> = vec![Vec::new(); n + 1];
    for s in 1..=n {
        // children as a non-increasing sequence of (size, index) keys
        let mut found = Vec::new();
        let mut stack: Vec<(usize, usize)> = Vec::new();
        fill_children(&by_size, s - 1, (s - 1, usize::MAX), &mut stack, &mut found);
        found.sort();
        by_size[s] = found;
    }
    by_size
}

fn fill_children(
    by_size: &[Vec<PlantedTree>],
    remaining: usize,
    max_key: (usize, usize),
    stack: &mut Vec<(usize, usize)>,
    out: &mut Vec<PlantedTree>,
) {
    if remaining == 0 {
        let kids = stack.iter().map(|&(s, i)| by_size[s][i].clone()).collect();
        out.push(PlantedTree::node(kids));
        return;
    }
    for size in (1..=remaining.min(max_key.0)).rev() {
        let upper = if size == max_key.0 { max_key.1 } else { usize::MAX };
        for idx in 0..by_size[size].len() {
            if idx > upper {
                break;
            }
            stack.push((size, idx));
            fill_children(by_size, remaining - size, (size, idx), stack, out);
            stack.pop();
        }
    }
}

/// Number of vertex labelings of a planted shape: `n! / |Aut|`.
pub fn labeling_count(t: &PlantedTree) -> BigUint {
    factorial(t.size()) / t.automorphism_count()
}

/// Histogram helper shared by enumeration-based checks.
pub fn count_by<K: Ord, I: IntoIterator<Item = K>>(it: I) -> BTreeMap<K, u64> {
    let mut m = BTreeMap::new();
    for k in it {
        *m.entry(k).or_insert(0) += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn p(s: &str) -> PlantedTree {
        PlantedTree::parse(s).unwrap()
    }

    #[test]
    fn codes_ignore_child_order() {
        assert_eq!(p(".").canonical_code(), PlantedTree::leaf().canonical_code());
        assert_eq!(p("x(.)(x(.))"), p("x(x(.))(.)"));
        assert_eq!(p("x(.)(x(.))").canonical_code(), p("x(x(.))(.)").canonical_code());
        assert_ne!(p("x(.)(.)").canonical_code(), p("x(x(.))").canonical_code());
        assert!(p(".").canonical_code() < p("x(.)").canonical_code());
    }

    #[test]
    fn automorphisms() {
        assert_eq!(PlantedTree::star(4).automorphism_count(), BigUint::from(24u32));
        assert_eq!(p("x(.)(x(.))").automorphism_count(), BigUint::from(1u32));
        // children (A, A, B) with rigid A, B
        assert_eq!(p("x(x(.))(x(.))(x(x(.)))").automorphism_count(), BigUint::from(2u32));
    }

    #[test]
    fn prufer_small_cases() {
        let t = prufer_decode(&[], 2).unwrap();
        assert_eq!(t.edges(), &[(1, 2)]);
        for (n, want) in [(3usize, 3usize), (4, 16), (5, 125)] {
            let all: BTreeSet<_> = enumerate_labeled_trees(n, 9).unwrap().collect();
            assert_eq!(all.len(), want);
        }
        assert!(prufer_decode(&[1], 4).is_err());
        assert!(prufer_decode(&[5, 1], 4).is_err());
        assert!(enumerate_labeled_trees(10, 9).is_err());
    }

    #[test]
    fn planar_embeddings() {
        assert_eq!(general_to_planar(&PlantedTree::star(3)).len(), 1);
        assert_eq!(general_to_planar(&p("x(.)(x(.))")).len(), 2);
        // x(.)(.)(x(.)(x(.)(.)(.)(.))): 3 positions times 2 orders below
        assert_eq!(general_to_planar(&p("x(.)(.)(x(.)(x(.)(.)(.)(.)))")).len(), 6);
    }

    #[test]
    fn shape_counts() {
        // rooted unlabeled trees: 1, 1, 2, 4, 9, 20, 48
        let counts: Vec<usize> = shapes_up_to(7).iter().skip(1).map(Vec::len).collect();
        assert_eq!(counts, vec![1, 1, 2, 4, 9, 20, 48]);
        // labelings of all shapes of size n sum to n^(n-1)
        for (n, shapes) in shapes_up_to(6).iter().enumerate().skip(1) {
            let total: BigUint = shapes.iter().map(labeling_count).sum();
            assert_eq!(total, BigUint::from(n).pow(n as u32 - 1));
        }
    }

    #[test]
    fn labeled_parse_and_display() {
        let t = LabeledTree::parse("4; 1-2, 2-3, 2-4").unwrap();
        assert_eq!(t.to_string(), "4; 1-2, 2-3, 2-4");
        assert_eq!(t.degree(2), 3);
        assert!(LabeledTree::parse("3; 1-2, 2-1").is_err());
        assert_eq!(t.planted_at(1), p("x(x(.)(.))"));
    }
}
