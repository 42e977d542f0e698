//! Partitions of planted trees into finitely many classes with recursive
//! descriptions, and the additional-occurrence counts `K` of every term.
//!
//! Two builders are provided. The naive one takes every constraint tree of
//! height at most `h` over the degree set `D`. The compact one intersects the
//! planar embeddings of the planted patterns, extracts the distinct proper
//! subtrees as types `t_1..t_m` and refines a partition until every type is a
//! union of classes.
//!
//! A term is a sorted multiset of child class indices; its exponent vector is
//! the multiplicity of each class.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::pattern::{degree_profile, DegreeProfile, Pattern};
use crate::trees::{general_to_planar, shapes_up_to, labeling_count, Mark, PlanarTree, PlantedTree};

pub type Multiset = Vec<u32>;

pub const DEFAULT_CLASS_LIMIT: usize = 5000;
/// Cap on the number of candidate multisets scanned for complement and
/// rooted terms.
pub const TERM_SCAN_LIMIT: u64 = 3_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PartitionError {
    #[error("pattern {0} is too small for a class partition (needs at least 3 nodes)")]
    PatternTooSmall(String),
    #[error("class count {count} exceeds the limit {limit}")]
    ClassLimit { count: String, limit: usize },
    #[error("{count} candidate terms exceed the scan limit {limit}")]
    TermLimit { count: u64, limit: u64 },
    #[error("completion ambiguity for term {term}: representatives give {k1} and {k2}")]
    Ambiguous { term: String, k1: u64, k2: u64 },
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Builder {
    Naive,
    Compact,
}

impl std::fmt::Display for Builder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Builder::Naive => "naive",
            Builder::Compact => "compact",
        })
    }
}

/// A monomial `x·Π a_j^{l_j}` of a recursive description with its count.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Term {
    /// Child classes, sorted.
    pub classes: Multiset,
    /// Additional occurrences created at the root.
    pub k: u32,
}

impl Term {
    pub fn out_degree(&self) -> usize {
        self.classes.len()
    }

    /// `(l_0, …, l_{n-1})`.
    pub fn exponents(&self, n: usize) -> Vec<u32> {
        exponents(&self.classes, n)
    }
}

pub fn exponents(m: &[u32], n: usize) -> Vec<u32> {
    let mut l = vec![0; n];
    for &c in m {
        l[c as usize] += 1;
    }
    l
}

pub fn multiset_string(m: &[u32]) -> String {
    if m.is_empty() {
        return "x".into();
    }
    let parts: Vec<String> = m.iter().map(|c| format!("a{c}")).collect();
    format!("x*{}", parts.join("*"))
}

/// Planted or rooted patterns with their automorphism counts.
#[derive(Debug, Clone)]
pub struct PatternSet {
    pub trees: Vec<(PlantedTree, u128)>,
}

impl PatternSet {
    pub fn new(trees: &[PlantedTree]) -> Self {
        let trees = trees
            .iter()
            .map(|t| (t.clone(), t.automorphism_count().to_u128().expect("pattern automorphism group too large")))
            .collect();
        PatternSet { trees }
    }

    /// Occurrences at the root of `t`: `Σ_τ emb(τ, t) / |Aut τ|`.
    pub fn root_count(&self, t: &PlantedTree) -> u64 {
        let mut total = 0u64;
        for (p, aut) in &self.trees {
            let e = embeddings(p, t);
            assert!(e % aut == 0, "embedding count {e} not divisible by |Aut| = {aut}");
            total += (e / aut) as u64;
        }
        total
    }
}

/// Root-preserving embeddings of pattern `p` into the concrete tree `t`.
/// Pattern leaves are wildcards; other pattern nodes need the same
/// out-degree in `t`.
pub fn embeddings(p: &PlantedTree, t: &PlantedTree) -> u128 {
    if p.is_leaf() {
        return 1;
    }
    let k = p.out_degree();
    if t.out_degree() != k {
        return 0;
    }
    // permanent of the child compatibility matrix, DP over used t-children
    let w: Vec<Vec<u128>> = p.children().iter().map(|pc| t.children().iter().map(|tc| embeddings(pc, tc)).collect()).collect();
    let mut dp = vec![0u128; 1 << k];
    dp[0] = 1;
    for mask in 0usize..(1 << k) {
        if dp[mask] == 0 {
            continue;
        }
        let row = mask.count_ones() as usize;
        if row == k {
            continue;
        }
        for col in 0..k {
            if mask & (1 << col) == 0 && w[row][col] != 0 {
                dp[mask | (1 << col)] += dp[mask] * w[row][col];
            }
        }
    }
    dp[(1 << k) - 1]
}

/// Calls `f` with every sorted multiset of size `d` over `0..n`.
pub fn for_each_multiset(n: u32, d: usize, f: &mut impl FnMut(&[u32])) {
    fn rec(n: u32, d: usize, start: u32, cur: &mut Vec<u32>, f: &mut impl FnMut(&[u32])) {
        if cur.len() == d {
            f(cur);
            return;
        }
        for c in start..n {
            cur.push(c);
            rec(n, d, c, cur, f);
            cur.pop();
        }
    }
    rec(n, d, 0, &mut Vec::with_capacity(d), f);
}

/// `C(n + d - 1, d)`, saturating.
pub fn multiset_count(n: u64, d: u64) -> u64 {
    let mut acc: u128 = 1;
    for i in 0..d {
        acc = acc * (n + i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// All sorted multisets obtained by choosing one element from each set.
fn product_multisets(sets: &[&[u32]]) -> BTreeSet<Multiset> {
    let mut out = BTreeSet::new();
    let mut cur = Vec::with_capacity(sets.len());
    fn rec(sets: &[&[u32]], i: usize, cur: &mut Vec<u32>, out: &mut BTreeSet<Multiset>) {
        if i == sets.len() {
            let mut m = cur.clone();
            m.sort_unstable();
            out.insert(m);
            return;
        }
        for &c in sets[i] {
            cur.push(c);
            rec(sets, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(sets, 0, &mut cur, &mut out);
    out
}

#[derive(Debug, Clone)]
pub struct ClassPartition {
    pub builder: Builder,
    pub pattern_name: String,
    pub profile: DegreeProfile,
    pub planted: PatternSet,
    pub rooted_patterns: PatternSet,
    /// Constraint trees (naive builder only), indexed by class.
    pub class_trees: Vec<PlantedTree>,
    /// Types `t_1..t_m` as sorted child-type multisets (compact builder only).
    pub types: Vec<Multiset>,
    /// `I_k`: classes whose union is type `t_k`, for `k = 0..=m`.
    pub type_classes: Vec<BTreeSet<u32>>,
    /// `Λ_j` with `K` per term; entry 0 is empty (the complement is implicit).
    pub lambda: Vec<Vec<Term>>,
    /// Terms of class 0 with out-degree in `D` and `K > 0`.
    pub complement: Vec<Term>,
    /// Rooted terms with `K̄ > 0`.
    pub rooted: Vec<Term>,
    pub reps: Vec<PlantedTree>,
    pub alt_reps: Vec<PlantedTree>,
    lookup: HashMap<Multiset, u32>,
    k_of: HashMap<Multiset, u32>,
    kbar_of: HashMap<Multiset, u32>,
}

impl ClassPartition {
    pub fn num_classes(&self) -> usize {
        self.lambda.len()
    }

    /// Class of a concrete planted tree, by recursion on the descriptions.
    pub fn classify(&self, t: &PlantedTree) -> u32 {
        let term = self.child_term(t);
        self.lookup.get(&term).copied().unwrap_or(0)
    }

    /// Sorted classes of the children of `t`.
    pub fn child_term(&self, t: &PlantedTree) -> Multiset {
        let mut m: Multiset = t.children().iter().map(|c| self.classify(c)).collect();
        m.sort_unstable();
        m
    }

    /// Class whose description contains `term` (0 if none).
    pub fn class_of_term(&self, term: &[u32]) -> u32 {
        self.lookup.get(term).copied().unwrap_or(0)
    }

    /// `K` of any term (0 for terms that create no occurrence).
    pub fn k(&self, term: &[u32]) -> u32 {
        self.k_of.get(term).copied().unwrap_or(0)
    }

    /// `K̄` of any rooted term.
    pub fn kbar(&self, term: &[u32]) -> u32 {
        self.kbar_of.get(term).copied().unwrap_or(0)
    }

    /// `K` recomputed from a representative tree.
    pub fn count_root_occurrences(&self, term: &[u32]) -> u64 {
        self.planted.root_count(&self.term_tree(term, &self.reps))
    }

    pub fn count_root_occurrences_rooted(&self, term: &[u32]) -> u64 {
        self.rooted_patterns.root_count(&self.term_tree(term, &self.reps))
    }

    fn term_tree(&self, term: &[u32], reps: &[PlantedTree]) -> PlantedTree {
        PlantedTree::node(term.iter().map(|&c| reps[c as usize].clone()).collect())
    }

    /// Classes appearing in the description of class `j` (all classes for 0).
    pub fn dependencies(&self, j: usize) -> BTreeSet<u32> {
        if j == 0 {
            return (0..self.num_classes() as u32).collect();
        }
        self.lambda[j].iter().flat_map(|t| t.classes.iter().copied()).collect()
    }

    /// Whether every class reaches every other in the dependency graph.
    pub fn strongly_connected(&self) -> bool {
        let n = self.num_classes();
        let fwd: Vec<BTreeSet<u32>> = (0..n).map(|j| self.dependencies(j)).collect();
        let mut bwd: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n];
        for (i, deps) in fwd.iter().enumerate() {
            for &j in deps {
                bwd[j as usize].insert(i as u32);
            }
        }
        let reach = |g: &[BTreeSet<u32>]| {
            let mut seen = vec![false; n];
            let mut q = VecDeque::from([0usize]);
            seen[0] = true;
            while let Some(v) = q.pop_front() {
                for &w in &g[v] {
                    if !seen[w as usize] {
                        seen[w as usize] = true;
                        q.push_back(w as usize);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(&fwd) && reach(&bwd)
    }

    /// Classes whose constraint semantics accept `t`. A correct partition
    /// returns exactly one.
    pub fn matching_classes(&self, t: &PlantedTree) -> Vec<u32> {
        match self.builder {
            Builder::Naive => self
                .class_trees
                .iter()
                .enumerate()
                .filter(|(_, c)| class_tree_matches(c, t, &self.profile.d))
                .map(|(j, _)| j as u32)
                .collect(),
            Builder::Compact => {
                let term = self.child_term(t);
                let hits: Vec<u32> = (1..self.num_classes())
                    .filter(|&j| self.lambda[j].iter().any(|x| x.classes == term))
                    .map(|j| j as u32)
                    .collect();
                if hits.is_empty() {
                    vec![0]
                } else {
                    hits
                }
            }
        }
    }

    /// Whether `t` belongs to type `t_k` (`t_0` is every tree).
    pub fn type_matches(&self, k: usize, t: &PlantedTree) -> bool {
        if k == 0 {
            return true;
        }
        let kids = &self.types[k - 1];
        if t.out_degree() != kids.len() {
            return false;
        }
        let pat = PlantedTree::node(kids.iter().map(|&c| type_tree(&self.types, c as usize)).collect());
        embeddings(&pat, t) > 0
    }

    /// Removes class `j`'s constraint tree (negative control for validation).
    pub fn without_class_tree(&self, j: usize) -> ClassPartition {
        let mut p = self.clone();
        if j < p.class_trees.len() {
            p.class_trees.remove(j);
        }
        p
    }

    pub fn to_json(&self) -> serde_json::Value {
        let n = self.num_classes();
        let term_json = |t: &Term| serde_json::json!({"classes": t.classes, "exponents": t.exponents(n), "K": t.k});
        let classes: Vec<serde_json::Value> = (0..n)
            .map(|j| {
                let mut v = serde_json::json!({
                    "index": j,
                    "representative": self.reps[j].to_string(),
                    "terms": self.lambda[j].iter().map(term_json).collect::<Vec<_>>(),
                });
                if let Some(c) = self.class_trees.get(j) {
                    v["tree"] = serde_json::Value::String(c.to_string());
                }
                v
            })
            .collect();
        serde_json::json!({
            "builder": self.builder,
            "pattern": self.pattern_name,
            "D": self.profile.d,
            "Dbar": self.profile.dbar,
            "h": self.profile.h,
            "classes": classes,
            "complement_terms": self.complement.iter().map(term_json).collect::<Vec<_>>(),
            "rooted_terms": self.rooted.iter().map(term_json).collect::<Vec<_>>(),
            "types": self.types,
            "type_classes": self.type_classes,
        })
    }
}

/// Planted tree of type `t_k` with `t_0` as a wildcard leaf.
fn type_tree(types: &[Multiset], k: usize) -> PlantedTree {
    if k == 0 {
        return PlantedTree::leaf();
    }
    PlantedTree::node(types[k - 1].iter().map(|&c| type_tree(types, c as usize)).collect())
}

/// Whether the concrete tree `t` satisfies constraint tree `c`.
pub fn class_tree_matches(c: &PlantedTree, t: &PlantedTree, d: &BTreeSet<usize>) -> bool {
    match c.mark() {
        Mark::Any => true,
        Mark::Box => !d.contains(&t.out_degree()),
        Mark::Node => {
            if t.out_degree() != c.out_degree() {
                return false;
            }
            // bipartite matching by brute force over subsets
            let k = c.out_degree();
            let ok: Vec<Vec<bool>> = c.children().iter().map(|cc| t.children().iter().map(|tc| class_tree_matches(cc, tc, d)).collect()).collect();
            let mut reach = vec![false; 1 << k];
            reach[0] = true;
            for mask in 0usize..(1 << k) {
                if !reach[mask] {
                    continue;
                }
                let row = mask.count_ones() as usize;
                if row == k {
                    continue;
                }
                for col in 0..k {
                    if mask & (1 << col) == 0 && ok[row][col] {
                        reach[mask | (1 << col)] = true;
                    }
                }
            }
            reach[(1 << k) - 1]
        }
    }
}

/// Truncation of a concrete tree to the naive class tree of budget `b`.
pub fn truncate_concrete(t: &PlantedTree, b: usize, d: &BTreeSet<usize>) -> PlantedTree {
    if b == 0 {
        PlantedTree::marked(Mark::Any)
    } else if !d.contains(&t.out_degree()) {
        PlantedTree::marked(Mark::Box)
    } else {
        PlantedTree::node(t.children().iter().map(|c| truncate_concrete(c, b - 1, d)).collect())
    }
}

/// Truncation of a class tree of budget `b + 1` to budget `b`.
fn truncate_class(c: &PlantedTree, b: usize) -> PlantedTree {
    if b == 0 {
        return PlantedTree::marked(Mark::Any);
    }
    match c.mark() {
        Mark::Node => PlantedTree::node(c.children().iter().map(|x| truncate_class(x, b - 1)).collect()),
        m => PlantedTree::marked(m),
    }
}

/// Number of naive class trees of budget `h` (saturating).
pub fn naive_class_count(d: &BTreeSet<usize>, h: usize) -> u64 {
    let mut f = 1u64;
    for _ in 0..h {
        let mut next = 1u64;
        for &k in d {
            next = next.saturating_add(multiset_count(f, k as u64));
        }
        f = next;
    }
    f
}

/// All class trees of budget `h` over `D`, sorted by canonical order.
pub fn naive_class_trees(d: &BTreeSet<usize>, h: usize) -> Vec<PlantedTree> {
    let mut level = vec![PlantedTree::marked(Mark::Any)];
    for _ in 0..h {
        let mut next = vec![PlantedTree::marked(Mark::Box)];
        for &k in d {
            for_each_multiset(level.len() as u32, k, &mut |m| {
                next.push(PlantedTree::node(m.iter().map(|&i| level[i as usize].clone()).collect()));
            });
        }
        next.sort();
        level = next;
    }
    level
}

/// The naive partition: every constraint tree of height at most `h`.
pub fn build_naive_partition(pattern: &Pattern, class_limit: usize) -> Result<ClassPartition, PartitionError> {
    let planted = pattern.planted_patterns();
    if pattern.size() < 3 || planted.is_empty() {
        return Err(PartitionError::PatternTooSmall(pattern.name().into()));
    }
    let profile = degree_profile(&planted);
    let count = naive_class_count(&profile.d, profile.h);
    if count > class_limit as u64 {
        let shown = if count == u64::MAX { "more than 2^64".to_string() } else { count.to_string() };
        return Err(PartitionError::ClassLimit { count: shown, limit: class_limit });
    }
    let h = profile.h;
    let classes = naive_class_trees(&profile.d, h);
    debug_assert_eq!(classes[0].mark(), Mark::Box);
    let mut ext: HashMap<PlantedTree, Vec<u32>> = HashMap::new();
    for (j, c) in classes.iter().enumerate() {
        ext.entry(truncate_class(c, h - 1)).or_default().push(j as u32);
    }
    let mut lambda_sets: Vec<BTreeSet<Multiset>> = vec![BTreeSet::new(); classes.len()];
    for (j, c) in classes.iter().enumerate().skip(1) {
        let sets: Vec<&[u32]> = c.children().iter().map(|cc| ext[cc].as_slice()).collect();
        lambda_sets[j] = product_multisets(&sets);
    }
    finish(Builder::Naive, pattern, profile, planted, classes, Vec::new(), Vec::new(), lambda_sets)
}

/// Unification of two planar pattern trees; leaves are wildcards.
pub fn unify(a: &PlanarTree, b: &PlanarTree) -> Option<PlanarTree> {
    if a.children.is_empty() && a.mark == Mark::Node {
        return Some(b.clone());
    }
    if b.children.is_empty() && b.mark == Mark::Node {
        return Some(a.clone());
    }
    if a.mark != b.mark || a.children.len() != b.children.len() {
        return None;
    }
    let children = a.children.iter().zip(&b.children).map(|(x, y)| unify(x, y)).collect::<Option<Vec<_>>>()?;
    Some(PlanarTree { mark: a.mark, children })
}

/// Implied unordered structures of all unifications of nonempty subsets of
/// `u`, sorted.
pub fn intersect_planar_classes(u: &[PlanarTree]) -> Vec<PlantedTree> {
    let mut all: BTreeSet<PlanarTree> = u.iter().cloned().collect();
    let mut frontier: Vec<PlanarTree> = all.iter().cloned().collect();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        let snapshot: Vec<PlanarTree> = all.iter().cloned().collect();
        for f in &frontier {
            for g in &snapshot {
                if let Some(w) = unify(f, g) {
                    if !all.contains(&w) {
                        all.insert(w.clone());
                        next.push(w);
                    }
                }
            }
        }
        frontier = next;
    }
    let q: BTreeSet<PlantedTree> = all.iter().map(PlanarTree::to_planted).collect();
    q.into_iter().collect()
}

/// Types of all proper non-leaf subtrees of the trees in `q`, in order of
/// first appearance. Trees are visited by decreasing root out-degree and then
/// canonical order, each in post-order.
pub fn dagify(q: &[PlantedTree]) -> Vec<Multiset> {
    let mut order: Vec<&PlantedTree> = q.iter().collect();
    order.sort_by(|a, b| b.out_degree().cmp(&a.out_degree()).then_with(|| a.cmp(b)));
    let mut ids: HashMap<PlantedTree, u32> = HashMap::new();
    let mut types = Vec::new();
    for t in order {
        let mut subs = Vec::new();
        t.proper_subtrees_postorder(&mut subs);
        for s in subs {
            if s.is_leaf() || ids.contains_key(s) {
                continue;
            }
            let mut kids: Multiset = s.children().iter().map(|c| if c.is_leaf() { 0 } else { ids[c] }).collect();
            kids.sort_unstable();
            types.push(kids);
            ids.insert(s.clone(), types.len() as u32);
        }
    }
    types
}

fn split_multiset(m: &[u32], i: u32, new: u32, out: &mut BTreeSet<Multiset>) {
    let c = m.iter().filter(|&&x| x == i).count();
    if c == 0 {
        out.insert(m.to_vec());
        return;
    }
    let rest: Vec<u32> = m.iter().copied().filter(|&x| x != i).collect();
    for j in 0..=c {
        let mut v = rest.clone();
        v.extend(std::iter::repeat(i).take(c - j));
        v.extend(std::iter::repeat(new).take(j));
        v.sort_unstable();
        out.insert(v);
    }
}

fn split_set(s: &BTreeSet<Multiset>, i: u32, new: u32) -> BTreeSet<Multiset> {
    let mut out = BTreeSet::new();
    for m in s {
        split_multiset(m, i, new, &mut out);
    }
    out
}

/// Refine the trivial partition until each type is a union of classes.
/// Returns `Λ_j` (entry 0 empty) and `I_k` for `k = 0..=m`.
pub fn disambiguate(types: &[Multiset]) -> Result<(Vec<BTreeSet<Multiset>>, Vec<BTreeSet<u32>>), PartitionError> {
    let mut lambda: Vec<BTreeSet<Multiset>> = vec![BTreeSet::new()];
    let mut reps: Vec<BTreeSet<u32>> = vec![BTreeSet::from([0])];
    for (idx, kids) in types.iter().enumerate() {
        let k = idx + 1;
        if kids.iter().any(|&c| c as usize >= k) {
            return Err(PartitionError::Inconsistent(format!("type t{k} refers to a later type")));
        }
        let sets: Vec<Vec<u32>> = kids.iter().map(|&c| reps[c as usize].iter().copied().collect()).collect();
        let refs: Vec<&[u32]> = sets.iter().map(Vec::as_slice).collect();
        let mut s = product_multisets(&refs);
        let mut contributing = BTreeSet::new();
        let mut i = 1;
        while i < lambda.len() && !s.is_empty() {
            let mut inter: BTreeSet<Multiset> = lambda[i].intersection(&s).cloned().collect();
            if !inter.is_empty() {
                let b: BTreeSet<Multiset> = lambda[i].difference(&s).cloned().collect();
                if !b.is_empty() {
                    let new = lambda.len() as u32;
                    lambda.push(b);
                    for r in reps.iter_mut() {
                        if r.contains(&(i as u32)) {
                            r.insert(new);
                        }
                    }
                    for l in lambda.iter_mut() {
                        *l = split_set(l, i as u32, new);
                    }
                    inter = split_set(&inter, i as u32, new);
                    s = split_set(&s, i as u32, new);
                    lambda[i] = inter;
                }
                s = s.difference(&lambda[i]).cloned().collect();
                contributing.insert(i as u32);
            }
            i += 1;
        }
        if !s.is_empty() {
            let new = lambda.len() as u32;
            lambda.push(s);
            for r in reps.iter_mut() {
                if r.contains(&0) {
                    r.insert(new);
                }
            }
            for l in lambda.iter_mut() {
                *l = split_set(l, 0, new);
            }
            contributing.insert(new);
        }
        reps.push(contributing);
    }
    for a in 1..lambda.len() {
        for b in a + 1..lambda.len() {
            if let Some(m) = lambda[a].intersection(&lambda[b]).next() {
                return Err(PartitionError::Inconsistent(format!("classes {a} and {b} share the term {m:?}")));
            }
        }
    }
    // each type must be exactly the union of its classes
    for (idx, kids) in types.iter().enumerate() {
        let sets: Vec<Vec<u32>> = kids.iter().map(|&c| reps[c as usize].iter().copied().collect()).collect();
        let refs: Vec<&[u32]> = sets.iter().map(Vec::as_slice).collect();
        let want = product_multisets(&refs);
        let got: BTreeSet<Multiset> = reps[idx + 1].iter().flat_map(|&j| lambda[j as usize].iter().cloned()).collect();
        if want != got {
            return Err(PartitionError::Inconsistent(format!("type t{} is not a union of classes", idx + 1)));
        }
    }
    Ok((lambda, reps))
}

/// The compact partition from planar embeddings, intersections, types and
/// disambiguation.
pub fn build_compact_partition(pattern: &Pattern) -> Result<ClassPartition, PartitionError> {
    let planted = pattern.planted_patterns();
    if pattern.size() < 3 || planted.is_empty() {
        return Err(PartitionError::PatternTooSmall(pattern.name().into()));
    }
    let profile = degree_profile(&planted);
    let u: Vec<PlanarTree> = planted.iter().flat_map(general_to_planar).collect();
    let q = intersect_planar_classes(&u);
    let types = dagify(&q);
    let (lambda_sets, type_classes) = disambiguate(&types)?;
    finish(Builder::Compact, pattern, profile, planted, Vec::new(), types, type_classes, lambda_sets)
}

pub fn build_partition(pattern: &Pattern, builder: Builder, class_limit: usize) -> Result<ClassPartition, PartitionError> {
    match builder {
        Builder::Naive => build_naive_partition(pattern, class_limit),
        Builder::Compact => build_compact_partition(pattern),
    }
}

/// Representatives of minimal height; `last` picks the lexicographically
/// last realizing term instead of the first.
fn representatives(lambda: &[BTreeSet<Multiset>], base: PlantedTree, last: bool) -> Result<Vec<PlantedTree>, PartitionError> {
    let n = lambda.len();
    let mut rep: Vec<Option<PlantedTree>> = vec![None; n];
    rep[0] = Some(base);
    loop {
        let known: Vec<bool> = rep.iter().map(Option::is_some).collect();
        let mut progress = false;
        for j in 1..n {
            if known[j] {
                continue;
            }
            let mut ok = lambda[j].iter().filter(|m| m.iter().all(|&c| known[c as usize]));
            let pick = if last { ok.last() } else { ok.next() };
            if let Some(m) = pick {
                rep[j] = Some(PlantedTree::node(m.iter().map(|&c| rep[c as usize].clone().unwrap()).collect()));
                progress = true;
            }
        }
        if rep.iter().all(Option::is_some) {
            break;
        }
        if !progress {
            let missing: Vec<usize> = (0..n).filter(|&j| rep[j].is_none()).collect();
            return Err(PartitionError::Inconsistent(format!("classes {missing:?} have no finite member")));
        }
    }
    Ok(rep.into_iter().map(Option::unwrap).collect())
}

#[allow(clippy::too_many_arguments)]
fn finish(
    builder: Builder,
    pattern: &Pattern,
    profile: DegreeProfile,
    planted: Vec<PlantedTree>,
    class_trees: Vec<PlantedTree>,
    types: Vec<Multiset>,
    type_classes: Vec<BTreeSet<u32>>,
    lambda_sets: Vec<BTreeSet<Multiset>>,
) -> Result<ClassPartition, PartitionError> {
    let n = lambda_sets.len();
    let mut lookup = HashMap::new();
    for (j, set) in lambda_sets.iter().enumerate().skip(1) {
        for m in set {
            if lookup.insert(m.clone(), j as u32).is_some() {
                return Err(PartitionError::Inconsistent(format!("term {m:?} lies in two classes")));
            }
        }
    }
    let reps = representatives(&lambda_sets, PlantedTree::leaf(), false)?;
    let alt_degree = (1..).find(|k| !profile.d.contains(k)).unwrap();
    let alt_reps = representatives(&lambda_sets, PlantedTree::star(alt_degree), true)?;
    let mut part = ClassPartition {
        builder,
        pattern_name: pattern.name().into(),
        profile,
        planted: PatternSet::new(&planted),
        rooted_patterns: PatternSet::new(&pattern.rooted_patterns()),
        class_trees,
        types,
        type_classes,
        lambda: vec![Vec::new(); n],
        complement: Vec::new(),
        rooted: Vec::new(),
        reps,
        alt_reps,
        lookup,
        k_of: HashMap::new(),
        kbar_of: HashMap::new(),
    };
    for j in 0..n {
        if part.classify(&part.reps[j]) != j as u32 || part.classify(&part.alt_reps[j]) != j as u32 {
            return Err(PartitionError::Inconsistent(format!("representative of class {j} misclassified")));
        }
    }
    let both = |part: &ClassPartition, set: &PatternSet, m: &[u32]| -> Result<u32, PartitionError> {
        let k1 = set.root_count(&part.term_tree(m, &part.reps));
        let k2 = set.root_count(&part.term_tree(m, &part.alt_reps));
        if k1 != k2 {
            return Err(PartitionError::Ambiguous { term: multiset_string(m), k1, k2 });
        }
        Ok(k1 as u32)
    };
    for (j, set) in lambda_sets.iter().enumerate().skip(1) {
        let mut terms = Vec::with_capacity(set.len());
        for m in set {
            let k = both(&part, &part.planted, m)?;
            terms.push(Term { classes: m.clone(), k });
        }
        part.lambda[j] = terms;
    }
    // complement terms whose root out-degree lies in D
    let scan = |ds: &BTreeSet<usize>| ds.iter().map(|&d| multiset_count(n as u64, d as u64)).fold(0u64, u64::saturating_add);
    if builder == Builder::Compact {
        let total = scan(&part.profile.d);
        if total > TERM_SCAN_LIMIT {
            return Err(PartitionError::TermLimit { count: total, limit: TERM_SCAN_LIMIT });
        }
        let mut found = Vec::new();
        let mut err = None;
        for &d in &part.profile.d {
            for_each_multiset(n as u32, d, &mut |m| {
                if err.is_some() || part.lookup.contains_key(m) {
                    return;
                }
                match both(&part, &part.planted, m) {
                    Ok(0) => {}
                    Ok(k) => found.push(Term { classes: m.to_vec(), k }),
                    Err(e) => err = Some(e),
                }
            });
        }
        if let Some(e) = err {
            return Err(e);
        }
        part.complement = found;
    }
    let total = scan(&part.profile.dbar);
    if total > TERM_SCAN_LIMIT {
        return Err(PartitionError::TermLimit { count: total, limit: TERM_SCAN_LIMIT });
    }
    let mut rooted = Vec::new();
    let mut err = None;
    for &d in &part.profile.dbar {
        for_each_multiset(n as u32, d, &mut |m| {
            if err.is_some() {
                return;
            }
            match both(&part, &part.rooted_patterns, m) {
                Ok(0) => {}
                Ok(k) => rooted.push(Term { classes: m.to_vec(), k }),
                Err(e) => err = Some(e),
            }
        });
    }
    if let Some(e) = err {
        return Err(e);
    }
    part.rooted = rooted;
    part.k_of = part.lambda.iter().flatten().chain(&part.complement).filter(|t| t.k > 0).map(|t| (t.classes.clone(), t.k)).collect();
    part.kbar_of = part.rooted.iter().map(|t| (t.classes.clone(), t.k)).collect();
    Ok(part)
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub nmax: usize,
    /// Unlabeled planted shapes checked.
    pub shapes_checked: usize,
    /// Planted labeled trees these shapes stand for.
    pub labeled_trees_checked: String,
    pub random_trees_checked: usize,
    pub classification_ok: bool,
    pub type_membership_ok: bool,
    pub strongly_connected: bool,
    pub k_consistent: bool,
    pub failures: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.classification_ok && self.type_membership_ok && self.strongly_connected && self.k_consistent
    }
}

/// Random concrete planted tree biased towards the out-degrees of interest.
pub fn random_planted<R: Rng>(rng: &mut R, profile: &DegreeProfile, depth: usize) -> PlantedTree {
    if depth == 0 || rng.gen_bool(0.2) {
        return PlantedTree::leaf();
    }
    let degrees: Vec<usize> = profile.d.iter().chain(&profile.dbar).copied().collect();
    let k = if rng.gen_bool(0.75) {
        degrees[rng.gen_range(0..degrees.len())]
    } else {
        rng.gen_range(1..=profile.dbar.iter().max().copied().unwrap_or(2) + 1)
    };
    PlantedTree::node((0..k).map(|_| random_planted(rng, profile, depth - 1)).collect())
}

/// Exhaustive classification and `K` checks on all planted trees up to
/// `nmax` nodes, plus `samples` random trees.
pub fn validate_partition(part: &ClassPartition, nmax: usize, samples: usize, seed: u64) -> ValidationReport {
    let mut failures = Vec::new();
    let mut classification_ok = true;
    let mut type_ok = true;
    let mut k_ok = true;
    let mut labeled = num_bigint::BigUint::from(0u32);
    let mut shapes = 0;
    let mut check = |t: &PlantedTree, failures: &mut Vec<String>| {
        let m = part.matching_classes(t);
        let c = part.classify(t);
        if m != vec![c] {
            classification_ok = false;
            if failures.len() < 20 {
                failures.push(format!("tree {t} matches classes {m:?}, classified as {c}"));
            }
        }
        if part.builder == Builder::Compact {
            for (k, ik) in part.type_classes.iter().enumerate() {
                if part.type_matches(k, t) != ik.contains(&c) {
                    type_ok = false;
                    if failures.len() < 20 {
                        failures.push(format!("tree {t} (class {c}) disagrees with type t{k}"));
                    }
                }
            }
        }
        let term = part.child_term(t);
        let direct = part.planted.root_count(t);
        let rooted = part.rooted_patterns.root_count(t);
        if direct != part.k(&term) as u64 || rooted != part.kbar(&term) as u64 {
            k_ok = false;
            if failures.len() < 20 {
                failures.push(format!(
                    "tree {t}: direct K={direct}, K̄={rooted}; term gives K={}, K̄={}",
                    part.k(&term),
                    part.kbar(&term)
                ));
            }
        }
    };
    for (size, list) in shapes_up_to(nmax).iter().enumerate().skip(1) {
        let _ = size;
        for t in list {
            check(t, &mut failures);
            labeled += labeling_count(t);
            shapes += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let t = random_planted(&mut rng, &part.profile, part.profile.h + 2);
        check(&t, &mut failures);
    }
    let strongly_connected = part.strongly_connected();
    if !strongly_connected {
        failures.push("dependency graph is not strongly connected".into());
    }
    ValidationReport {
        nmax,
        shapes_checked: shapes,
        labeled_trees_checked: labeled.to_string(),
        random_trees_checked: samples,
        classification_ok,
        type_membership_ok: type_ok,
        strongly_connected,
        k_consistent: k_ok,
        failures,
    }
}

/// Factorization of a term set as `Π_k (Σ_{c ∈ G_k} a_c)^{e_k}` with
/// pairwise disjoint groups, if it has that shape.
pub fn factor_terms(terms: &BTreeSet<Multiset>) -> Option<Vec<(Vec<u32>, usize)>> {
    let first = terms.iter().next()?;
    let d = first.len();
    if terms.iter().any(|t| t.len() != d) || d == 0 {
        return None;
    }
    // classes with identical residual sets are interchangeable
    let mut residual: BTreeMap<u32, BTreeSet<Multiset>> = BTreeMap::new();
    for t in terms {
        for (i, &c) in t.iter().enumerate() {
            if i > 0 && t[i - 1] == c {
                continue;
            }
            let mut r = t.clone();
            r.remove(i);
            residual.entry(c).or_default().insert(r);
        }
    }
    let mut groups: BTreeMap<&BTreeSet<Multiset>, Vec<u32>> = BTreeMap::new();
    for (c, r) in &residual {
        groups.entry(r).or_default().push(*c);
    }
    let groups: Vec<Vec<u32>> = groups.into_values().collect();
    let mut out = Vec::new();
    for g in groups {
        let e = first.iter().filter(|c| g.contains(c)).count();
        if e == 0 || terms.iter().any(|t| t.iter().filter(|c| g.contains(c)).count() != e) {
            return None;
        }
        out.push((g, e));
    }
    out.sort();
    let mut sets: Vec<&[u32]> = Vec::new();
    for (g, e) in &out {
        for _ in 0..*e {
            sets.push(g);
        }
    }
    if &product_multisets(&sets) == terms {
        Some(out)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> Pattern {
        Pattern::named("paper:fig1").unwrap()
    }

    #[test]
    fn naive_counts() {
        assert_eq!(naive_class_count(&BTreeSet::from([2]), 3), 11);
        assert_eq!(naive_class_count(&BTreeSet::from([2]), 1), 2);
        assert!(naive_class_count(&BTreeSet::from([2, 3, 4]), 3) > 1000);
        let part = build_naive_partition(&fig1(), DEFAULT_CLASS_LIMIT).unwrap();
        assert_eq!(part.num_classes(), 11);
    }

    #[test]
    fn fig1_k_vector() {
        let part = build_naive_partition(&fig1(), DEFAULT_CLASS_LIMIT).unwrap();
        let ks: Vec<u32> = (0..11)
            .map(|j| {
                let mut k: Vec<u32> = part.lambda[j].iter().map(|t| t.k).collect();
                k.dedup();
                assert!(k.len() <= 1, "class {j} has several K values");
                k.first().copied().unwrap_or(0)
            })
            .collect();
        assert_eq!(ks, vec![0, 0, 0, 1, 2, 1, 2, 3, 3, 4, 5]);
    }

    #[test]
    fn fig7_types_and_classes() {
        let p = Pattern::named("paper:fig7").unwrap();
        let planted = p.planted_patterns();
        let u: Vec<PlanarTree> = planted.iter().flat_map(general_to_planar).collect();
        assert_eq!(u.len(), 16);
        let q = intersect_planar_classes(&u);
        assert_eq!(q.len(), 24);
        let by_root = count_by_outdeg(&q);
        assert_eq!(by_root, BTreeMap::from([(2, 1), (3, 9), (4, 14)]));
        let types = dagify(&q);
        let want: Vec<Multiset> = vec![vec![0, 0, 0], vec![0, 1], vec![1, 1], vec![0, 0, 0, 0], vec![0, 4], vec![4, 4]];
        assert_eq!(types, want);
        let (lambda, _) = disambiguate(&types).unwrap();
        assert_eq!(lambda.len(), 8);
    }

    fn count_by_outdeg(q: &[PlantedTree]) -> BTreeMap<usize, usize> {
        let mut m = BTreeMap::new();
        for t in q {
            *m.entry(t.out_degree()).or_insert(0) += 1;
        }
        m
    }

    #[test]
    fn disambiguation_stage_three() {
        let types: Vec<Multiset> = vec![vec![0, 0, 0], vec![0, 1], vec![1, 1]];
        let (lambda, reps) = disambiguate(&types).unwrap();
        assert_eq!(lambda.len(), 4);
        assert_eq!(lambda[2], BTreeSet::from([vec![1, 1]]));
        assert_eq!(lambda[3], BTreeSet::from([vec![0, 1], vec![1, 2], vec![1, 3]]));
        assert_eq!(reps[3], BTreeSet::from([2]));
    }

    #[test]
    fn trivial_inputs() {
        assert_eq!(dagify(&[PlantedTree::star(2)]), Vec::<Multiset>::new());
        let t = PlantedTree::parse("x(x(.)(.))(.)").unwrap();
        assert_eq!(dagify(&[t]), vec![vec![0, 0]]);
        let (lambda, reps) = disambiguate(&[]).unwrap();
        assert_eq!(lambda.len(), 1);
        assert_eq!(reps.len(), 1);
        let a = general_to_planar(&PlantedTree::star(2));
        let b = general_to_planar(&PlantedTree::star(3));
        assert!(unify(&a[0], &b[0]).is_none());
        assert_eq!(intersect_planar_classes(&a), vec![PlantedTree::star(2)]);
    }

    #[test]
    fn factoring() {
        let t = product_multisets(&[&[0, 2, 3], &[1]]);
        assert_eq!(factor_terms(&t), Some(vec![(vec![0, 2, 3], 1), (vec![1], 1)]));
        let p = product_multisets(&[&[0, 1], &[0, 1]]);
        assert_eq!(factor_terms(&p), Some(vec![(vec![0, 1], 2)]));
        let mut odd = p.clone();
        odd.remove(&vec![0, 1]);
        assert_eq!(factor_terms(&odd), None);
    }

    #[test]
    fn embedding_counts() {
        let star = PlantedTree::star(3);
        assert_eq!(embeddings(&star, &PlantedTree::star(3)), 6);
        assert_eq!(embeddings(&star, &PlantedTree::star(2)), 0);
        let p = PlantedTree::parse("x(.)(x(.)(.))").unwrap();
        let t = PlantedTree::parse("x(x(.)(.))(x(.)(.))").unwrap();
        assert_eq!(embeddings(&p, &t), 4);
    }
}
