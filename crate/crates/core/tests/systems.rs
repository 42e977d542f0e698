use std::sync::OnceLock;

use proptest::prelude::*;
use treepat_core::algebra::{rat, Rat};
use treepat_core::partition::{build_partition, validate_partition, Builder, DEFAULT_CLASS_LIMIT};
use treepat_core::pattern::Pattern;
use treepat_core::system::{build_planted_system, EquationSystem};

fn system(name: &str, b: Builder) -> EquationSystem {
    build_planted_system(&build_partition(&Pattern::named(name).unwrap(), b, DEFAULT_CLASS_LIMIT).unwrap())
}

fn cached() -> &'static [EquationSystem] {
    static SYSTEMS: OnceLock<Vec<EquationSystem>> = OnceLock::new();
    SYSTEMS.get_or_init(|| {
        [("paper:fig1", Builder::Naive), ("paper:fig1", Builder::Compact), ("paper:fig7", Builder::Compact)].into_iter().map(|(n, b)| system(n, b)).collect()
    })
}

fn q() -> impl Strategy<Value = Rat> {
    (-50i64..=50, 1i64..=20).prop_map(|(a, b)| rat(a, b))
}

fn fact(k: usize) -> Rat {
    (1..=k as i64).fold(rat(1, 1), |acc, i| acc * rat(i, 1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn star_systems_reduce_to_sum((x, u, e) in (q(), q(), q()), a in prop::collection::vec(q(), 2), k in 2usize..6) {
        let sys = system(&format!("star:{k}"), Builder::Naive);
        prop_assert_eq!(sys.n(), 2);
        let p = &a[0] + &a[1];
        let top = p.pow(k as i32 - 1) / fact(k - 1);
        prop_assert_eq!(sys.f[1].eval(&x, &u, &e, &a), &x * &u * &top);
        prop_assert_eq!(sys.f[0].eval(&x, &u, &e, &a), &x * &e - &x * &top);
        let root = p.pow(k as i32) / fact(k);
        prop_assert_eq!(sys.g.eval(&x, &u, &e, &a), &x * (&e + (&u - rat(1, 1)) * root));
    }

    #[test]
    fn equations_sum_to_x_times_e((x, e) in (q(), q()), a in prop::collection::vec(q(), 11)) {
        for sys in cached() {
            let a = &a[..sys.n()];
            let one = rat(1, 1);
            let s = sys.f.iter().fold(rat(0, 1), |acc, p| acc + p.eval(&x, &one, &e, a));
            prop_assert_eq!(s, &x * &e);
            // at u = 1 the rooted equation is x·E as well
            prop_assert_eq!(sys.g.eval(&x, &one, &e, a), &x * &e);
        }
    }
}

#[test]
fn structural_checks() {
    for (name, b) in [("star:2", Builder::Naive), ("star:4", Builder::Compact), ("paper:fig1", Builder::Naive), ("paper:fig1", Builder::Compact), ("paper:fig7", Builder::Compact)] {
        let part = build_partition(&Pattern::named(name).unwrap(), b, DEFAULT_CLASS_LIMIT).unwrap();
        let sys = build_planted_system(&part);
        assert!(sys.sums_to_p(), "{name}/{b}");
        assert!(sys.dominance_holds(), "{name}/{b}");
        assert!(sys.kappa_and_sign_ok(&part.profile.d, &part.profile.dbar), "{name}/{b}");
        assert!(part.strongly_connected(), "{name}/{b}");
    }
}

#[test]
fn class_counts() {
    assert_eq!(system("paper:fig1", Builder::Naive).n(), 11);
    assert_eq!(system("paper:fig7", Builder::Compact).n(), 8);
    // a lone star needs no extra class: its occurrences sit in the complement terms
    assert_eq!(system("star:3", Builder::Compact).n(), 1);
}

#[test]
fn json_roundtrip() {
    for (name, b) in [("paper:fig1", Builder::Naive), ("paper:fig7", Builder::Compact)] {
        let sys = system(name, b);
        let back = EquationSystem::from_json(&sys.to_json()).unwrap();
        assert_eq!(back.f, sys.f);
        assert_eq!(back.g, sys.g);
    }
}

#[test]
fn validation_catches_a_dropped_class() {
    let part = build_partition(&Pattern::named("paper:fig1").unwrap(), Builder::Naive, DEFAULT_CLASS_LIMIT).unwrap();
    assert!(validate_partition(&part, 7, 100, 3).passed());
    let broken = part.without_class_tree(4);
    let rep = validate_partition(&broken, 7, 100, 3);
    assert!(!rep.passed());
    assert!(!rep.failures.is_empty());
}

#[test]
fn compact_validation() {
    for name in ["paper:fig1", "paper:fig7", "star:3"] {
        let part = build_partition(&Pattern::named(name).unwrap(), Builder::Compact, DEFAULT_CLASS_LIMIT).unwrap();
        let rep = validate_partition(&part, 7, 200, 5);
        assert!(rep.passed(), "{name}: {:?}", rep.failures);
    }
}

#[test]
fn emitted_text() {
    let sys = system("star:3", Builder::Naive);
    let text = sys.emit("text").unwrap();
    assert!(text.contains("a_1 = 1/2 x (a_0+a_1)^2 u"), "{text}");
    let latex = sys.emit("latex").unwrap();
    assert!(latex.contains("a_{1}") || latex.contains("a_1"), "{latex}");
    assert!(sys.emit("yaml").is_err());
}
