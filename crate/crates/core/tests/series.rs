use num_bigint::BigInt;
use treepat_core::algebra::{rat, Rat, Ring};
use treepat_core::partition::{build_partition, Builder, DEFAULT_CLASS_LIMIT};
use treepat_core::pattern::Pattern;
use treepat_core::series::{expand_all, expand_system, forest_series, moments, BivariateSeries, Mode, UCoef};
use treepat_core::system::{build_planted_system, EquationSystem};

const N: usize = 10;

/// Ordinary power series in `x` truncated after `x^N`, with polynomial
/// coefficients in `u`.
#[derive(Debug, Clone, PartialEq)]
struct Ts(Vec<Vec<Rat>>);

fn trim(mut v: Vec<Rat>) -> Vec<Rat> {
    while v.last().is_some_and(Ring::is_zero) {
        v.pop();
    }
    v
}

impl Ts {
    fn map2(&self, o: &Self, f: impl Fn(&Rat, &Rat) -> Rat) -> Self {
        Ts((0..=N)
            .map(|n| {
                let (a, b) = (&self.0[n], &o.0[n]);
                let z = rat(0, 1);
                trim((0..a.len().max(b.len())).map(|m| f(a.get(m).unwrap_or(&z), b.get(m).unwrap_or(&z))).collect())
            })
            .collect())
    }

    fn x() -> Self {
        let mut c = vec![Vec::new(); N + 1];
        c[1] = vec![rat(1, 1)];
        Ts(c)
    }

    fn u() -> Self {
        let mut c = vec![Vec::new(); N + 1];
        c[0] = vec![rat(0, 1), rat(1, 1)];
        Ts(c)
    }

    /// `exp(s)` for `s` without constant term, via `E' = s'E`.
    fn exp(&self) -> Self {
        assert!(self.0[0].is_empty());
        let mut e = vec![Vec::new(); N + 1];
        e[0] = vec![rat(1, 1)];
        for n in 1..=N {
            let mut acc: Vec<Rat> = Vec::new();
            for k in 1..=n {
                let p = poly_mul(&self.0[k], &e[n - k]);
                let w = Rat::from_integer(BigInt::from(k));
                acc = poly_add(&acc, &p.iter().map(|c| c * &w).collect::<Vec<_>>());
            }
            let inv = Rat::from_integer(BigInt::from(n)).recip();
            e[n] = trim(acc.iter().map(|c| c * &inv).collect());
        }
        Ts(e)
    }
}

fn poly_add(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let z = rat(0, 1);
    trim((0..a.len().max(b.len())).map(|m| a.get(m).unwrap_or(&z) + b.get(m).unwrap_or(&z)).collect())
}

fn poly_mul(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![rat(0, 1); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(out)
}

impl Ring for Ts {
    fn zero() -> Self {
        Ts(vec![Vec::new(); N + 1])
    }
    fn one() -> Self {
        Ts::from_rat(&rat(1, 1))
    }
    fn from_rat(r: &Rat) -> Self {
        let mut c = vec![Vec::new(); N + 1];
        c[0] = trim(vec![r.clone()]);
        Ts(c)
    }
    fn is_zero(&self) -> bool {
        self.0.iter().all(Vec::is_empty)
    }
    fn plus(&self, o: &Self) -> Self {
        self.map2(o, |a, b| a + b)
    }
    fn minus(&self, o: &Self) -> Self {
        self.map2(o, |a, b| a - b)
    }
    fn times(&self, o: &Self) -> Self {
        let mut c = vec![Vec::new(); N + 1];
        for i in 0..=N {
            if self.0[i].is_empty() {
                continue;
            }
            for j in 0..=N - i {
                c[i + j] = poly_add(&c[i + j], &poly_mul(&self.0[i], &o.0[j]));
            }
        }
        Ts(c)
    }
    fn negate(&self) -> Self {
        Ts(self.0.iter().map(|p| p.iter().map(|c| -c).collect()).collect())
    }
    fn exact_div(&self, _: &Self) -> Option<Self> {
        None
    }
}

/// Picard iteration `a ← F(x, u, exp(Σa), a)`; each round fixes one more
/// power of `x`.
fn picard(sys: &EquationSystem) -> (Vec<Ts>, Ts) {
    let (x, u) = (Ts::x(), Ts::u());
    let mut a = vec![Ts::zero(); sys.n()];
    for _ in 0..=N {
        let e = a.iter().fold(Ts::zero(), |acc, v| acc.plus(v)).exp();
        a = sys.f.iter().map(|p| p.eval(&x, &u, &e, &a)).collect();
    }
    let e = a.iter().fold(Ts::zero(), |acc, v| acc.plus(v)).exp();
    let r = sys.g.eval(&x, &u, &e, &a);
    (a, r)
}

fn factorial(n: usize) -> Rat {
    (1..=n).fold(rat(1, 1), |acc, i| acc * Rat::from_integer(BigInt::from(i)))
}

/// `n! [x^n]` of the oracle against the integer EGF coefficients.
fn assert_same(label: &str, s: &BivariateSeries, o: &Ts) {
    for n in 0..=N {
        let want: Vec<Rat> = o.0[n].iter().map(|c| c * factorial(n)).collect();
        let got: Vec<Rat> = match &s.coeffs[n] {
            UCoef::Poly(p) => trim(p.iter().map(|c| Rat::from_integer(c.clone())).collect()),
            UCoef::Jet(_) => panic!("full mode expected"),
        };
        assert_eq!(got, want, "{label}, n = {n}");
    }
}

fn system(name: &str, b: Builder) -> EquationSystem {
    build_planted_system(&build_partition(&Pattern::named(name).unwrap(), b, DEFAULT_CLASS_LIMIT).unwrap())
}

#[test]
fn expansion_matches_picard_iteration() {
    let cases = [
        ("star:2", Builder::Naive),
        ("star:3", Builder::Compact),
        ("paper:fig1", Builder::Naive),
        ("paper:fig1", Builder::Compact),
        ("paper:fig7", Builder::Compact),
    ];
    for (name, b) in cases {
        let sys = system(name, b);
        let ex = expand_all(&sys, N, Mode::Full).unwrap();
        let (a, r) = picard(&sys);
        for (j, (s, o)) in ex.classes.classes.iter().zip(&a).enumerate() {
            assert_same(&format!("{name}/{b} a_{j}"), s, o);
        }
        assert_same(&format!("{name}/{b} r"), &ex.r, &r);
        // unrooted trees: every tree counted once per root
        for n in 1..=N {
            let nn = BigInt::from(n);
            for m in 0..=n * n {
                assert_eq!(ex.t.get(n, m) * &nn, ex.r.get(n, m), "{name}: n = {n}, m = {m}");
            }
        }
    }
}

#[test]
fn class_series_sum_to_planted_trees() {
    // Σ_j a_j(x, 1) = p(x), with n! [x^n] p = n^(n−1)
    let sys = system("paper:fig1", Builder::Naive);
    let cs = expand_system(&sys, 12, Mode::Full).unwrap();
    for n in 1..=12usize {
        let total: BigInt = cs.classes.iter().map(|c| c.at_one(n)).sum();
        assert_eq!(total, BigInt::from(n).pow(n as u32 - 1));
        assert_eq!(cs.p.at_one(n), total);
    }
}

#[test]
fn builders_give_identical_series() {
    for name in ["paper:fig1", "star:3", "star:4"] {
        let a = expand_all(&system(name, Builder::Naive), 12, Mode::Full).unwrap();
        let b = expand_all(&system(name, Builder::Compact), 12, Mode::Full).unwrap();
        assert_eq!(a.t, b.t, "{name}");
        assert_eq!(a.r, b.r, "{name}");
    }
}

#[test]
fn jet_mode_agrees_with_full_mode() {
    let sys = system("paper:fig7", Builder::Compact);
    let full = expand_all(&sys, 14, Mode::Full).unwrap();
    let jet = expand_all(&sys, 14, Mode::Jet2).unwrap();
    for n in 1..=14 {
        assert_eq!(moments(&full.t, n).unwrap(), moments(&jet.t, n).unwrap(), "n = {n}");
    }
}

fn find(p: &mut [usize], v: usize) -> usize {
    let mut r = v;
    while p[r] != r {
        r = p[r];
    }
    p[v] = r;
    r
}

/// Forests on `n` labeled nodes by number of nodes of degree exactly `d`,
/// from every acyclic edge subset of the complete graph.
fn forest_census(n: usize, d: usize) -> Vec<u64> {
    let edges: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut hist = vec![0u64; n + 1];
    'subset: for mask in 0u32..(1 << edges.len()) {
        let mut parent: Vec<usize> = (0..n).collect();
        let mut deg = vec![0usize; n];
        for (k, &(i, j)) in edges.iter().enumerate() {
            if mask >> k & 1 == 1 {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri == rj {
                    continue 'subset;
                }
                parent[ri] = rj;
                deg[i] += 1;
                deg[j] += 1;
            }
        }
        hist[deg.iter().filter(|&&x| x == d).count()] += 1;
    }
    hist
}

#[test]
fn forests_match_exhaustive_count() {
    for d in [2usize, 3] {
        let sys = system(&format!("star:{d}"), Builder::Naive);
        let f = forest_series(&expand_all(&sys, 6, Mode::Full).unwrap().t);
        for n in 1..=6 {
            let census = forest_census(n, d);
            for (m, &c) in census.iter().enumerate() {
                assert_eq!(f.get(n, m), BigInt::from(c), "star:{d} n = {n} m = {m}");
            }
        }
    }
}
