use num_bigint::BigInt;
use proptest::prelude::*;
use treepat_core::algebra::{
    det, det_adjugate, ffge_solve, rat, rat_to_f64, Jet, LaurentE, Rat, RatFuncE, Ring,
};

fn laurent() -> impl Strategy<Value = LaurentE> {
    prop::collection::vec((-4i32..=4, -20i64..=20, 1i64..=9), 0..5)
        .prop_map(|ts| LaurentE::from_terms(ts.into_iter().map(|(p, a, b)| (p, rat(a, b)))))
}

fn nonzero_laurent() -> impl Strategy<Value = LaurentE> {
    laurent().prop_filter("nonzero", |f| !f.is_zero())
}

fn small_rat() -> impl Strategy<Value = Rat> {
    (-30i64..=30, 1i64..=12).prop_map(|(a, b)| rat(a, b))
}

/// Dense polynomial helpers used as the symbolic side of the chain rule.
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
    out
}

fn poly_sub(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let n = a.len().max(b.len());
    (0..n).map(|i| a.get(i).cloned().unwrap_or_default() - b.get(i).cloned().unwrap_or_default()).collect()
}

fn poly_deriv(a: &[Rat]) -> Vec<Rat> {
    a.iter().enumerate().skip(1).map(|(i, c)| c * Rat::from_integer(BigInt::from(i))).collect()
}

fn poly_eval(a: &[Rat], x: &Rat) -> Rat {
    a.iter().rev().fold(rat(0, 1), |acc, c| acc * x + c)
}

fn jet_eval(a: &[Rat], x: &Jet<Rat>) -> Jet<Rat> {
    a.iter().rev().fold(Jet::<Rat>::zero(), |acc, c| acc.times(x).plus(&Jet::constant(c.clone())))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn add_sub_roundtrip(f in laurent(), g in laurent()) {
        prop_assert_eq!(&(&f + &g) - &g, f);
    }

    #[test]
    fn mul_div_roundtrip(f in laurent(), g in nonzero_laurent()) {
        prop_assert_eq!((&f * &g).div_exact(&g), Some(f));
    }

    #[test]
    fn normalize_reexpands(f in laurent(), g in nonzero_laurent()) {
        let q = RatFuncE::new(&f * &g, g.clone()).unwrap();
        let l = q.laurent_normalize().unwrap();
        prop_assert_eq!(&l * &g, &f * &g);
        prop_assert_eq!(l, f);
    }

    #[test]
    fn ratfunc_field_ops(f in nonzero_laurent(), g in nonzero_laurent(), h in nonzero_laurent()) {
        let a = RatFuncE::new(f.clone(), g.clone()).unwrap();
        let b = RatFuncE::new(h.clone(), f.clone()).unwrap();
        // (f/g)·(h/f) = h/g
        prop_assert_eq!(a.times(&b), RatFuncE::new(h, g).unwrap());
    }

    #[test]
    fn eval_is_a_homomorphism(f in laurent(), g in laurent(), e in (2i64..50, 1i64..7)) {
        let e = rat(e.0, e.1);
        prop_assert_eq!((&f * &g).eval(&e), f.eval(&e) * g.eval(&e));
        prop_assert_eq!((&f + &g).eval(&e), f.eval(&e) + g.eval(&e));
    }

    #[test]
    fn jet_chain_rule(
        p in prop::collection::vec(small_rat(), 1..5),
        q in prop::collection::vec(small_rat(), 1..5),
        r in prop::collection::vec(small_rat(), 1..5),
        xs in prop::collection::vec(small_rat(), 100),
    ) {
        // h = (p·q − r)², differentiated symbolically and by jets
        let inner = poly_sub(&poly_mul(&p, &q), &r);
        let h = poly_mul(&inner, &inner);
        let dh = poly_deriv(&h);
        for x in &xs {
            let xj = Jet::new(x.clone(), rat(1, 1));
            let ij = jet_eval(&p, &xj).times(&jet_eval(&q, &xj)).minus(&jet_eval(&r, &xj));
            let hj = ij.times(&ij);
            prop_assert_eq!(&hj.v, &poly_eval(&h, x));
            prop_assert_eq!(&hj.d, &poly_eval(&dh, x));
        }
    }

    #[test]
    fn solve_residual(m in prop::collection::vec(prop::collection::vec(small_rat(), 4), 4), b in prop::collection::vec(small_rat(), 4)) {
        prop_assume!(det(&m) != rat(0, 1));
        let x = ffge_solve(&m, &b).unwrap();
        for (row, bi) in m.iter().zip(&b) {
            let lhs: Rat = row.iter().zip(&x).map(|(a, xi)| a * xi).sum();
            prop_assert_eq!(&lhs, bi);
        }
    }

    #[test]
    fn adjugate_annihilates(m in prop::collection::vec(prop::collection::vec(small_rat(), 3), 3)) {
        // cofactor column b satisfies Σ_i b_i m[i][j] = det·[j = 0]
        let (d, b) = det_adjugate(&m);
        for j in 0..3 {
            let s: Rat = (0..3).map(|i| &b[i] * &m[i][j]).sum();
            prop_assert_eq!(s, if j == 0 { d.clone() } else { rat(0, 1) });
        }
    }

    #[test]
    fn jet_determinant_vs_finite_difference(
        a in prop::collection::vec(prop::collection::vec(small_rat(), 3), 3),
        b in prop::collection::vec(prop::collection::vec(small_rat(), 3), 3),
    ) {
        let jm: Vec<Vec<Jet<Rat>>> = a.iter().zip(&b).map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| Jet::new(x.clone(), y.clone())).collect()).collect();
        let dj = det(&jm);
        let h = rat(1, 1_000_000);
        let shifted = |s: &Rat| -> Vec<Vec<Rat>> { a.iter().zip(&b).map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + s * y).collect()).collect() };
        let fd = (det(&shifted(&h)) - det(&shifted(&-h.clone()))) / (rat(2, 1) * &h);
        let (want, got) = (rat_to_f64(&dj.d), rat_to_f64(&fd));
        prop_assert!((want - got).abs() <= 1e-4 * want.abs().max(1.0), "{want} vs {got}");
        prop_assert_eq!(dj.v, det(&a));
    }
}

#[test]
fn normalize_examples() {
    let e = LaurentE::e();
    let five = LaurentE::monomial(rat(5, 1), -2);
    assert_eq!(RatFuncE::new(five, e.clone()).unwrap().laurent_normalize().unwrap(), LaurentE::monomial(rat(5, 1), -3));
    let two_e_minus_1 = LaurentE::from_terms([(1, rat(2, 1)), (0, rat(-1, 1))]);
    let num = &two_e_minus_1 * &LaurentE::e_inv();
    assert_eq!(RatFuncE::new(num, two_e_minus_1.clone()).unwrap().laurent_normalize().unwrap(), LaurentE::e_inv());
    let e2e = LaurentE::from_terms([(2, rat(1, 1)), (1, rat(1, 1))]);
    let e1 = LaurentE::from_terms([(1, rat(1, 1)), (0, rat(1, 1))]);
    assert_eq!(RatFuncE::new(e2e, e1.clone()).unwrap().laurent_normalize().unwrap(), e);
    // a genuine denominator is reported
    assert!(RatFuncE::new(LaurentE::one(), e1).unwrap().laurent_normalize().is_err());
}

#[test]
fn solve_examples() {
    let id: Vec<Vec<Rat>> = (0..3).map(|i| (0..3).map(|j| rat((i == j) as i64, 1)).collect()).collect();
    let b = vec![rat(1, 2), rat(-3, 1), rat(7, 5)];
    assert_eq!(ffge_solve(&id, &b).unwrap(), b);
    let m = vec![vec![RatFuncE::from_laurent(LaurentE::e())]];
    let rhs = vec![RatFuncE::from_laurent(LaurentE::from_terms([(1, rat(2, 1)), (0, rat(-1, 1))]))];
    let x = ffge_solve(&m, &rhs).unwrap();
    assert_eq!(x[0].laurent_normalize().unwrap(), LaurentE::from_terms([(0, rat(2, 1)), (-1, rat(-1, 1))]));
    let singular = vec![vec![rat(1, 1), rat(2, 1)], vec![rat(2, 1), rat(4, 1)]];
    assert!(ffge_solve(&singular, &[rat(1, 1), rat(1, 1)]).is_err());
}

#[test]
fn adjugate_examples() {
    let m = vec![vec![rat(1, 1), rat(2, 1)], vec![rat(3, 1), rat(4, 1)]];
    let (d, b) = det_adjugate(&m);
    assert_eq!(d, rat(-2, 1));
    assert_eq!(b, vec![rat(4, 1), rat(-2, 1)]);
    let s = vec![vec![rat(1, 1), rat(2, 1)], vec![rat(2, 1), rat(4, 1)]];
    let (d, b) = det_adjugate(&s);
    assert_eq!(d, rat(0, 1));
    assert_eq!(b, vec![rat(4, 1), rat(-2, 1)]);
}

#[test]
fn laurent_serialization() {
    let mu = LaurentE::monomial(rat(5, 8), -3);
    let s = serde_json::to_string(&mu).unwrap();
    assert_eq!(s, r#"{"-3":"5/8"}"#);
    let back: LaurentE = serde_json::from_str(&s).unwrap();
    assert_eq!(back, mu);
}
