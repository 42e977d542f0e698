use std::collections::BTreeMap;

use proptest::prelude::*;
use treepat_core::oracle::{compare, count_occurrences, distribution_default, Matcher};
use treepat_core::partition::{build_partition, Builder, DEFAULT_CLASS_LIMIT};
use treepat_core::pattern::{Pattern, PatternError};
use treepat_core::series::{expand_all, Mode};
use treepat_core::system::build_planted_system;
use treepat_core::trees::{labeled_tree_count, prufer_decode, prufer_encode, prufer_from_index, LabeledTree};

fn prufer(max_n: usize) -> impl Strategy<Value = (usize, Vec<usize>)> {
    (3..=max_n).prop_flat_map(|n| (Just(n), prop::collection::vec(1..=n, n - 2)))
}

fn degrees(t: &LabeledTree) -> Vec<usize> {
    (0..=t.n()).map(|v| if v == 0 { 0 } else { t.degree(v) }).collect()
}

/// Closed-form occurrence counts read off degrees, independent of the
/// embedding search.
fn star_count(t: &LabeledTree, k: usize) -> u64 {
    degrees(t).iter().skip(1).filter(|&&d| d == k).count() as u64
}

/// Middle node of degree 3 with an unordered pair of degree-3 neighbours.
fn path3_count(t: &LabeledTree) -> u64 {
    let adj = t.adjacency();
    let deg = degrees(t);
    (1..=t.n())
        .filter(|&v| deg[v] == 3)
        .map(|v| {
            let c = adj[v].iter().filter(|&&w| deg[w] == 3).count() as u64;
            c * c.saturating_sub(1) / 2
        })
        .sum()
}

/// Centre of degree 3 with one neighbour of degree 4 and another of degree 5.
fn centre_count(t: &LabeledTree) -> u64 {
    let adj = t.adjacency();
    let deg = degrees(t);
    (1..=t.n())
        .filter(|&v| deg[v] == 3)
        .map(|v| {
            let four = adj[v].iter().filter(|&&w| deg[w] == 4).count() as u64;
            let five = adj[v].iter().filter(|&&w| deg[w] == 5).count() as u64;
            four * five
        })
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn prufer_roundtrip((n, seq) in prufer(40)) {
        let t = prufer_decode(&seq, n).unwrap();
        prop_assert_eq!(t.edges().len(), n - 1);
        prop_assert_eq!(degrees(&t).iter().sum::<usize>(), 2 * (n - 1));
        // label v appears deg(v) − 1 times in the code
        for v in 1..=n {
            prop_assert_eq!(seq.iter().filter(|&&x| x == v).count() + 1, t.degree(v));
        }
        prop_assert_eq!(prufer_encode(&t), seq);
    }

    #[test]
    fn star_counts_are_degree_census((n, seq) in prufer(40), k in 2usize..6) {
        let t = prufer_decode(&seq, n).unwrap();
        prop_assert_eq!(count_occurrences(&t, &Pattern::named(&format!("star:{k}")).unwrap()), star_count(&t, k));
        prop_assert_eq!(count_occurrences(&t, &Pattern::named("edge").unwrap()), (n - 1) as u64);
        prop_assert_eq!(count_occurrences(&t, &Pattern::named("node").unwrap()), n as u64);
    }

    #[test]
    fn larger_patterns_match_degree_formulas((n, seq) in prufer(60)) {
        let t = prufer_decode(&seq, n).unwrap();
        prop_assert_eq!(count_occurrences(&t, &Pattern::named("paper:fig1").unwrap()), path3_count(&t));
        prop_assert_eq!(count_occurrences(&t, &Pattern::named("paper:fig7").unwrap()), centre_count(&t));
    }

    #[test]
    fn counts_ignore_relabeling((n, seq) in prufer(30), shift in 1usize..29) {
        let t = prufer_decode(&seq, n).unwrap();
        let s = shift % n;
        let moved: Vec<(usize, usize)> = t.edges().iter().map(|&(a, b)| ((a - 1 + s) % n + 1, (b - 1 + s) % n + 1)).collect();
        let u = LabeledTree::new(n, &moved).unwrap();
        let m = Matcher::new(&Pattern::named("paper:fig1").unwrap());
        prop_assert_eq!(m.count(&t.adjacency()), m.count(&u.adjacency()));
    }
}

#[test]
fn index_enumeration_is_a_bijection() {
    for n in 3..=6 {
        let mut seen = std::collections::BTreeSet::new();
        let mut seq = Vec::new();
        for i in 0..labeled_tree_count(n) {
            prufer_from_index(n, i, &mut seq);
            assert!(seen.insert(seq.clone()));
        }
        assert_eq!(seen.len() as u64, (n as u64).pow(n as u32 - 2));
    }
}

#[test]
fn histograms_sum_to_cayley() {
    for name in ["star:2", "star:3", "paper:fig1"] {
        let p = Pattern::named(name).unwrap();
        for n in 1..=8 {
            let d = distribution_default(n, &p).unwrap();
            assert_eq!(d.total(), (n as u64).pow(n.saturating_sub(2) as u32).max(1), "{name} n = {n}");
        }
    }
}

#[test]
fn compare_detects_perturbation() {
    let p = Pattern::named("star:3").unwrap();
    let sys = build_planted_system(&build_partition(&p, Builder::Naive, DEFAULT_CLASS_LIMIT).unwrap());
    let t = expand_all(&sys, 7, Mode::Full).unwrap().t;
    let d = distribution_default(7, &p).unwrap();
    assert!(compare(&t, &d).equal);
    let mut bad = d.clone();
    *bad.counts.get_mut(&1).unwrap() += 1;
    *bad.counts.get_mut(&0).unwrap() -= 1;
    let rep = compare(&t, &bad);
    assert!(!rep.equal);
    assert_eq!(rep.first_mismatch.unwrap().m, 0);
    let jet = expand_all(&sys, 7, Mode::Jet2).unwrap().t;
    assert!(!compare(&jet, &d).equal);
}

#[test]
fn small_star_histogram() {
    // trees on 4 nodes: 4 stars (one degree-3 node) and 12 paths
    let d = distribution_default(4, &Pattern::named("star:3").unwrap()).unwrap();
    assert_eq!(d.counts, BTreeMap::from([(0, 12), (1, 4)]));
    let d = distribution_default(4, &Pattern::named("star:2").unwrap()).unwrap();
    assert_eq!(d.counts, BTreeMap::from([(0, 4), (2, 12)]));
}

#[test]
fn pattern_documents() {
    let p = Pattern::parse(r#"{"nodes":[10,20,30,40],"edges":[[10,20],[10,30],[10,40]]}"#).unwrap();
    let t = LabeledTree::parse("5; 1-2, 1-3, 1-4, 4-5").unwrap();
    assert_eq!(count_occurrences(&t, &p), star_count(&t, 3));
    let bad = [
        (r#"{"nodes":[1,2,3],"edges":[[1,2],[2,3],[1,3]]}"#, "cycle"),
        (r#"{"nodes":[1,2,3,4],"edges":[[1,2],[3,4],[1,1]]}"#, "loop"),
        (r#"{"nodes":[1,2],"edges":[[1,5]]}"#, "unknown node"),
        (r#"{"nodes":[1,1],"edges":[[1,1]]}"#, "duplicate"),
        (r#"{"nodes":[1,2],"edges":[[1,2]],"kinds":{"1":"internal"}}"#, "leaf kind"),
        ("not json", "syntax"),
    ];
    for (doc, why) in bad {
        assert!(Pattern::parse(doc).is_err(), "{why}");
    }
    assert!(matches!(Pattern::named("star:0"), Err(PatternError::UnknownName(_))));
    assert!(matches!(Pattern::named("triangle"), Err(PatternError::UnknownName(_))));
}
