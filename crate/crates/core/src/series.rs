//! Truncated bivariate EGF expansion of the class systems.
//!
//! Coefficients are stored as `n! [x^n]`, which are integers for every
//! series built here (class series, divided powers `a^l/l!`, `exp`). Each
//! coefficient is either a full polynomial in `u` or an order-2 jet at
//! `u = 1` carrying `f(1)`, `f'(1)` and `f''(1)/2`.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::algebra::Rat;
use crate::system::{EquationSystem, SysPoly};

pub const DEFAULT_FULL_ORDER: usize = 16;
pub const DEFAULT_JET_ORDER: usize = 60;
/// Hard caps on the expansion order.
pub const MAX_FULL_ORDER: usize = 40;
pub const MAX_JET_ORDER: usize = 200;

#[derive(Debug, thiserror::Error)]
pub enum SeriesError {
    #[error("order {order} exceeds the {mode} cap {cap}")]
    CapExceeded { order: usize, mode: Mode, cap: usize },
    #[error("coefficient {coeff} of a monomial is not integral after scaling")]
    NonIntegral { coeff: String },
    #[error("r_{{{n},·}} is not divisible by {n}")]
    NotDivisible { n: usize },
    #[error("operation needs full mode")]
    NeedsFull,
    #[error("index {0} outside the expansion")]
    OutOfRange(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Full,
    Jet2,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Full => "full",
            Mode::Jet2 => "jet2",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "full" => Ok(Mode::Full),
            "jet2" => Ok(Mode::Jet2),
            _ => Err(format!("unknown mode {s:?} (expected full or jet2)")),
        }
    }
}

impl Mode {
    pub fn default_order(self) -> usize {
        match self {
            Mode::Full => DEFAULT_FULL_ORDER,
            Mode::Jet2 => DEFAULT_JET_ORDER,
        }
    }

    pub fn cap(self) -> usize {
        match self {
            Mode::Full => MAX_FULL_ORDER,
            Mode::Jet2 => MAX_JET_ORDER,
        }
    }
}

/// One coefficient of a bivariate series: a polynomial in `u`, or its
/// second-order jet at `u = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UCoef {
    /// `c[m]` is the coefficient of `u^m`; no trailing zeros.
    Poly(Vec<BigInt>),
    /// `(f(1), f'(1), f''(1)/2)`.
    Jet([BigInt; 3]),
}

impl UCoef {
    pub fn zero(mode: Mode) -> Self {
        match mode {
            Mode::Full => UCoef::Poly(Vec::new()),
            Mode::Jet2 => UCoef::Jet([BigInt::zero(), BigInt::zero(), BigInt::zero()]),
        }
    }

    pub fn constant(mode: Mode, c: BigInt) -> Self {
        match mode {
            Mode::Full => UCoef::Poly(vec![c]).trimmed(),
            Mode::Jet2 => UCoef::Jet([c, BigInt::zero(), BigInt::zero()]),
        }
    }

    /// `c · u^k`.
    pub fn monomial(mode: Mode, c: BigInt, k: u32) -> Self {
        match mode {
            Mode::Full => {
                let mut v = vec![BigInt::zero(); k as usize];
                v.push(c);
                UCoef::Poly(v).trimmed()
            }
            Mode::Jet2 => {
                let k1 = BigInt::from(k);
                let k2 = BigInt::from(k as u64 * (k as u64).saturating_sub(1) / 2);
                UCoef::Jet([c.clone(), &c * k1, c * k2])
            }
        }
    }

    fn trimmed(self) -> Self {
        match self {
            UCoef::Poly(mut v) => {
                while v.last().is_some_and(|c| c.is_zero()) {
                    v.pop();
                }
                UCoef::Poly(v)
            }
            j => j,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            UCoef::Poly(v) => v.is_empty(),
            UCoef::Jet(j) => j.iter().all(Zero::is_zero),
        }
    }

    pub fn add_assign(&mut self, o: &UCoef) {
        match (self, o) {
            (UCoef::Poly(a), UCoef::Poly(b)) => {
                if a.len() < b.len() {
                    a.resize(b.len(), BigInt::zero());
                }
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                while a.last().is_some_and(|c| c.is_zero()) {
                    a.pop();
                }
            }
            (UCoef::Jet(a), UCoef::Jet(b)) => {
                for i in 0..3 {
                    a[i] += &b[i];
                }
            }
            _ => panic!("mixed series modes"),
        }
    }

    pub fn mul(&self, o: &UCoef) -> UCoef {
        match (self, o) {
            (UCoef::Poly(a), UCoef::Poly(b)) => {
                if a.is_empty() || b.is_empty() {
                    return UCoef::Poly(Vec::new());
                }
                let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
                for (i, x) in a.iter().enumerate() {
                    if x.is_zero() {
                        continue;
                    }
                    for (j, y) in b.iter().enumerate() {
                        out[i + j] += x * y;
                    }
                }
                UCoef::Poly(out).trimmed()
            }
            (UCoef::Jet(a), UCoef::Jet(b)) => UCoef::Jet([
                &a[0] * &b[0],
                &a[1] * &b[0] + &a[0] * &b[1],
                &a[2] * &b[0] + &a[1] * &b[1] + &a[0] * &b[2],
            ]),
            _ => panic!("mixed series modes"),
        }
    }

    pub fn scale(&self, c: &BigInt) -> UCoef {
        match self {
            UCoef::Poly(a) => UCoef::Poly(a.iter().map(|x| x * c).collect()).trimmed(),
            UCoef::Jet(a) => UCoef::Jet([&a[0] * c, &a[1] * c, &a[2] * c]),
        }
    }

    /// Division that must be exact in every component.
    pub fn div_exact(&self, c: &BigInt) -> Option<UCoef> {
        let div = |x: &BigInt| {
            let (q, r) = x.div_rem(c);
            r.is_zero().then_some(q)
        };
        match self {
            UCoef::Poly(a) => a.iter().map(div).collect::<Option<Vec<_>>>().map(UCoef::Poly),
            UCoef::Jet(a) => Some(UCoef::Jet([div(&a[0])?, div(&a[1])?, div(&a[2])?])),
        }
    }

    /// `f(1)`.
    pub fn at_one(&self) -> BigInt {
        match self {
            UCoef::Poly(a) => a.iter().sum(),
            UCoef::Jet(a) => a[0].clone(),
        }
    }

    /// `f'(1) = Σ m c_m`.
    pub fn first_moment(&self) -> BigInt {
        match self {
            UCoef::Poly(a) => a.iter().enumerate().map(|(m, c)| c * BigInt::from(m)).sum(),
            UCoef::Jet(a) => a[1].clone(),
        }
    }

    /// `f''(1)/2 = Σ C(m,2) c_m`.
    pub fn second_factorial_moment(&self) -> BigInt {
        match self {
            UCoef::Poly(a) => a.iter().enumerate().map(|(m, c)| c * BigInt::from(m * m.saturating_sub(1) / 2)).sum(),
            UCoef::Jet(a) => a[2].clone(),
        }
    }

    /// Jet of a full coefficient.
    pub fn to_jet(&self) -> UCoef {
        UCoef::Jet([self.at_one(), self.first_moment(), self.second_factorial_moment()])
    }

    pub fn poly(&self) -> Option<&[BigInt]> {
        match self {
            UCoef::Poly(a) => Some(a),
            UCoef::Jet(_) => None,
        }
    }
}

/// `coeffs[n] = n! [x^n] f(x, u)` for `n ≤ order`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BivariateSeries {
    pub mode: Mode,
    pub coeffs: Vec<UCoef>,
}

impl BivariateSeries {
    pub fn zero(mode: Mode, order: usize) -> Self {
        BivariateSeries { mode, coeffs: vec![UCoef::zero(mode); order + 1] }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, n: usize) -> &UCoef {
        &self.coeffs[n]
    }

    /// `n! [x^n u^m]` in full mode.
    pub fn get(&self, n: usize, m: usize) -> BigInt {
        match &self.coeffs[n] {
            UCoef::Poly(a) => a.get(m).cloned().unwrap_or_default(),
            UCoef::Jet(_) => panic!("coefficient access needs full mode"),
        }
    }

    /// `n! [x^n] f(x, 1)`.
    pub fn at_one(&self, n: usize) -> BigInt {
        self.coeffs[n].at_one()
    }

    pub fn add(&self, o: &BivariateSeries) -> BivariateSeries {
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&o.coeffs) {
            a.add_assign(b);
        }
        out
    }

    pub fn to_jet(&self) -> BivariateSeries {
        BivariateSeries { mode: Mode::Jet2, coeffs: self.coeffs.iter().map(UCoef::to_jet).collect() }
    }
}

fn binomials(n: usize) -> Vec<Vec<BigInt>> {
    let mut t: Vec<Vec<BigInt>> = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let mut row = vec![BigInt::one(); i + 1];
        for j in 1..i {
            row[j] = &t[i - 1][j - 1] + &t[i - 1][j];
        }
        t.push(row);
    }
    t
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Node {
    One,
    Class(usize),
    Sum,
    Exp,
    /// `a_j^l / l!`
    DivPow(usize, u32),
    Prod(usize, usize),
}

/// Compiled monomial `c · x^α · u^κ · node`.
#[derive(Debug, Clone)]
struct Compiled {
    node: usize,
    coeff: BigInt,
    x: u32,
    u: u32,
}

/// Incremental EGF evaluator: coefficient `k` of every node depends only on
/// coefficients `≤ k` of its inputs.
struct Engine {
    mode: Mode,
    binom: Vec<Vec<BigInt>>,
    nodes: Vec<Node>,
    vals: Vec<Vec<UCoef>>,
    memo: HashMap<Node, usize>,
    n_classes: usize,
}

impl Engine {
    fn new(mode: Mode, order: usize, n_classes: usize) -> Self {
        let mut e = Engine { mode, binom: binomials(order + 1), nodes: Vec::new(), vals: Vec::new(), memo: HashMap::new(), n_classes };
        for j in 0..n_classes {
            e.node(Node::Class(j));
        }
        e
    }

    fn node(&mut self, n: Node) -> usize {
        if let Some(&i) = self.memo.get(&n) {
            return i;
        }
        let i = self.nodes.len();
        self.nodes.push(n.clone());
        self.vals.push(Vec::new());
        self.memo.insert(n, i);
        i
    }

    fn div_pow(&mut self, j: usize, l: u32) -> usize {
        if l == 1 {
            return j;
        }
        self.div_pow(j, l - 1);
        self.node(Node::DivPow(j, l))
    }

    fn compile(&mut self, p: &SysPoly) -> Result<Vec<Compiled>, SeriesError> {
        let mut out = Vec::new();
        for (m, c) in p.terms() {
            let mut scale = c.clone();
            let mut factors = Vec::new();
            for (j, &l) in m.a.iter().enumerate() {
                if l > 0 {
                    factors.push(self.div_pow(j, l));
                    scale *= Rat::from_integer((1..=l as u64).product::<u64>().into());
                }
            }
            if m.e > 0 {
                self.node(Node::Sum);
                let ex = self.node(Node::Exp);
                for _ in 0..m.e {
                    factors.push(ex);
                }
            }
            if !scale.is_integer() {
                return Err(SeriesError::NonIntegral { coeff: scale.to_string() });
            }
            let mut acc = match factors.first() {
                Some(&f) => f,
                None => self.node(Node::One),
            };
            for &f in factors.iter().skip(1) {
                acc = self.node(Node::Prod(acc, f));
            }
            out.push(Compiled { node: acc, coeff: scale.to_integer(), x: m.x, u: m.u });
        }
        Ok(out)
    }

    fn conv(&self, a: usize, b: usize, k: usize) -> UCoef {
        let mut acc = UCoef::zero(self.mode);
        for i in 0..=k {
            let x = &self.vals[a][i];
            let y = &self.vals[b][k - i];
            if x.is_zero() || y.is_zero() {
                continue;
            }
            acc.add_assign(&x.mul(y).scale(&self.binom[k][i]));
        }
        acc
    }

    /// Fills coefficient `k` of every derived node that lacks it.
    fn extend(&mut self, k: usize) {
        for i in 0..self.nodes.len() {
            if self.vals[i].len() != k {
                continue;
            }
            let v = match self.nodes[i].clone() {
                Node::Class(_) => continue,
                Node::One => UCoef::constant(self.mode, if k == 0 { BigInt::one() } else { BigInt::zero() }),
                Node::Sum => {
                    let mut acc = UCoef::zero(self.mode);
                    for j in 0..self.n_classes {
                        acc.add_assign(&self.vals[j][k]);
                    }
                    acc
                }
                Node::Exp => {
                    if k == 0 {
                        UCoef::constant(self.mode, BigInt::one())
                    } else {
                        let s = self.memo[&Node::Sum];
                        let mut acc = UCoef::zero(self.mode);
                        for t in 1..=k {
                            let sv = &self.vals[s][t];
                            if sv.is_zero() {
                                continue;
                            }
                            acc.add_assign(&sv.mul(&self.vals[i][k - t]).scale(&self.binom[k - 1][t - 1]));
                        }
                        acc
                    }
                }
                Node::DivPow(j, l) => {
                    let prev = if l == 2 { j } else { self.memo[&Node::DivPow(j, l - 1)] };
                    self.conv(prev, j, k).div_exact(&BigInt::from(l)).expect("divided power is integral")
                }
                Node::Prod(a, b) => self.conv(a, b, k),
            };
            self.vals[i].push(v);
        }
    }

    /// `n! [x^n]` of a compiled polynomial; needs node coefficients `< n`.
    fn output(&self, terms: &[Compiled], n: usize) -> UCoef {
        let mut acc = UCoef::zero(self.mode);
        for t in terms {
            let x = t.x as usize;
            if n < x {
                continue;
            }
            let v = &self.vals[t.node][n - x];
            if v.is_zero() {
                continue;
            }
            // n!/(n−α)! from the x^α shift
            let falling: BigInt = ((n - x + 1)..=n).map(BigInt::from).product();
            let mono = UCoef::monomial(self.mode, &t.coeff * falling, t.u);
            acc.add_assign(&v.mul(&mono));
        }
        acc
    }
}

fn check_order(order: usize, mode: Mode) -> Result<(), SeriesError> {
    if order > mode.cap() {
        return Err(SeriesError::CapExceeded { order, mode, cap: mode.cap() });
    }
    Ok(())
}

/// Class series `a_0..a_L` and their sum `p`.
#[derive(Debug, Clone)]
pub struct ClassSeries {
    pub mode: Mode,
    pub order: usize,
    pub classes: Vec<BivariateSeries>,
    pub p: BivariateSeries,
}

/// Expands `a = F(x, a, u)` to order `x^order`. Every monomial carries a
/// factor `x`, so coefficient `n` of each class needs only coefficients
/// `< n` of the others.
pub fn expand_system(sys: &EquationSystem, order: usize, mode: Mode) -> Result<ClassSeries, SeriesError> {
    check_order(order, mode)?;
    let n = sys.n();
    let mut eng = Engine::new(mode, order, n);
    let compiled = sys.f.iter().map(|f| eng.compile(f)).collect::<Result<Vec<_>, _>>()?;
    for j in 0..n {
        eng.vals[j].push(UCoef::zero(mode));
    }
    for k in 1..=order {
        eng.extend(k - 1);
        let next: Vec<UCoef> = compiled.iter().map(|c| eng.output(c, k)).collect();
        for (j, v) in next.into_iter().enumerate() {
            eng.vals[j].push(v);
        }
    }
    let classes: Vec<BivariateSeries> = (0..n).map(|j| BivariateSeries { mode, coeffs: eng.vals[j].clone() }).collect();
    let p = classes.iter().skip(1).fold(classes[0].clone(), |acc, s| acc.add(s));
    Ok(ClassSeries { mode, order, classes, p })
}

/// Rooted series `r = G(x, u, a)` from expanded class series.
pub fn expand_rooted(sys: &EquationSystem, cs: &ClassSeries) -> Result<BivariateSeries, SeriesError> {
    let n = sys.n();
    let mut eng = Engine::new(cs.mode, cs.order, n);
    for (j, s) in cs.classes.iter().enumerate() {
        eng.vals[j] = s.coeffs.clone();
    }
    let g = eng.compile(&sys.g)?;
    let mut coeffs = vec![UCoef::zero(cs.mode)];
    for k in 1..=cs.order {
        eng.extend(k - 1);
        coeffs.push(eng.output(&g, k));
    }
    Ok(BivariateSeries { mode: cs.mode, coeffs })
}

/// `t_{n,m} = r_{n,m} / n`.
pub fn unrooted_counts(r: &BivariateSeries) -> Result<BivariateSeries, SeriesError> {
    let mut coeffs = vec![UCoef::zero(r.mode)];
    for n in 1..=r.order() {
        let c = r.coeffs[n].div_exact(&BigInt::from(n)).ok_or(SeriesError::NotDivisible { n })?;
        coeffs.push(c);
    }
    Ok(BivariateSeries { mode: r.mode, coeffs })
}

/// Class, planted, rooted and unrooted series in one go.
#[derive(Debug, Clone)]
pub struct Expansion {
    pub classes: ClassSeries,
    pub r: BivariateSeries,
    pub t: BivariateSeries,
}

pub fn expand_all(sys: &EquationSystem, order: usize, mode: Mode) -> Result<Expansion, SeriesError> {
    let classes = expand_system(sys, order, mode)?;
    let r = expand_rooted(sys, &classes)?;
    let t = unrooted_counts(&r)?;
    Ok(Expansion { classes, r, t })
}

/// Exact mean and variance of the occurrence count over trees of size `n`.
pub fn moments(t: &BivariateSeries, n: usize) -> Result<(Rat, Rat), SeriesError> {
    if n == 0 || n > t.order() {
        return Err(SeriesError::OutOfRange(n));
    }
    let c = &t.coeffs[n];
    let v = c.at_one();
    let mean = Rat::new(c.first_moment(), v.clone());
    let two = Rat::from_integer(BigInt::from(2));
    let var = two * Rat::new(c.second_factorial_moment(), v) + &mean - &mean * &mean;
    Ok((mean, var))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentRow {
    pub n: usize,
    pub mean: Rat,
    pub variance: Rat,
    pub dmean: Option<Rat>,
    pub dvariance: Option<Rat>,
}

pub fn moment_table(t: &BivariateSeries) -> Vec<MomentRow> {
    let mut rows: Vec<MomentRow> = Vec::new();
    for n in 1..=t.order() {
        let (mean, variance) = moments(t, n).expect("n in range");
        let (dmean, dvariance) = match rows.last() {
            Some(p) => (Some(&mean - &p.mean), Some(&variance - &p.variance)),
            None => (None, None),
        };
        rows.push(MomentRow { n, mean, variance, dmean, dvariance });
    }
    rows
}

/// `f = exp(t)`: labeled forests by total occurrences.
pub fn forest_series(t: &BivariateSeries) -> BivariateSeries {
    let order = t.order();
    let binom = binomials(order);
    let mut f = vec![UCoef::constant(t.mode, BigInt::one())];
    for n in 1..=order {
        let mut acc = UCoef::zero(t.mode);
        for k in 1..=n {
            let tk = &t.coeffs[k];
            if tk.is_zero() {
                continue;
            }
            acc.add_assign(&tk.mul(&f[n - k]).scale(&binom[n - 1][k - 1]));
        }
        f.push(acc);
    }
    BivariateSeries { mode: t.mode, coeffs: f }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForbiddenRow {
    pub n: usize,
    pub count: BigInt,
    pub total: BigInt,
    pub ratio: f64,
}

/// `t_{n,0}`: trees without any occurrence, with their share of all trees.
pub fn forbidden_counts(t: &BivariateSeries) -> Result<Vec<ForbiddenRow>, SeriesError> {
    if t.mode != Mode::Full {
        return Err(SeriesError::NeedsFull);
    }
    Ok((1..=t.order())
        .map(|n| {
            let count = t.get(n, 0);
            let total = t.at_one(n);
            let ratio = ratio_f64(&count, &total);
            ForbiddenRow { n, count, total, ratio }
        })
        .collect())
}

fn ratio_f64(a: &BigInt, b: &BigInt) -> f64 {
    if b.is_zero() {
        return f64::NAN;
    }
    // scale both down so the conversion stays finite
    let shift = b.bits().saturating_sub(900);
    let a = (a >> shift).to_f64().unwrap_or(0.0);
    let b = (b >> shift).to_f64().unwrap_or(f64::INFINITY);
    if a.is_sign_negative() && a.abs() == 0.0 {
        return 0.0;
    }
    a / b
}

/// Distribution `m ↦ t_{n,m}` in full mode.
pub fn distribution_at(t: &BivariateSeries, n: usize) -> Result<Vec<(usize, BigInt)>, SeriesError> {
    match t.coeffs.get(n) {
        None => Err(SeriesError::OutOfRange(n)),
        Some(UCoef::Jet(_)) => Err(SeriesError::NeedsFull),
        Some(UCoef::Poly(a)) => Ok(a.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(m, c)| (m, c.clone())).collect()),
    }
}

/// Checks that no coefficient is negative (full mode).
pub fn nonnegative(s: &BivariateSeries) -> bool {
    s.coeffs.iter().all(|c| match c {
        UCoef::Poly(a) => a.iter().all(|x| !x.is_negative()),
        UCoef::Jet(_) => true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{build_partition, Builder, DEFAULT_CLASS_LIMIT};
    use crate::pattern::Pattern;
    use crate::system::build_planted_system;

    fn sys(name: &str, b: Builder) -> EquationSystem {
        let part = build_partition(&Pattern::named(name).unwrap(), b, DEFAULT_CLASS_LIMIT).unwrap();
        build_planted_system(&part)
    }

    #[test]
    fn cayley_counts() {
        let ex = expand_all(&sys("star:3", Builder::Naive), 10, Mode::Full).unwrap();
        for n in 1..=10usize {
            let nn = BigInt::from(n);
            assert_eq!(ex.classes.p.at_one(n), nn.pow(n as u32 - 1));
            assert_eq!(ex.r.at_one(n), nn.pow(n as u32 - 1));
            if n >= 2 {
                assert_eq!(ex.t.at_one(n), nn.pow(n as u32 - 2));
            }
        }
    }

    #[test]
    fn star2_small() {
        // every 3-node tree is a path with one degree-2 node
        let ex = expand_all(&sys("star:2", Builder::Compact), 5, Mode::Full).unwrap();
        assert_eq!(distribution_at(&ex.t, 3).unwrap(), vec![(1, BigInt::from(3))]);
        assert_eq!(ex.t.get(3, 0), BigInt::zero());
    }

    #[test]
    fn modes_agree() {
        let s = sys("paper:fig1", Builder::Compact);
        let full = expand_all(&s, 12, Mode::Full).unwrap();
        let jet = expand_all(&s, 12, Mode::Jet2).unwrap();
        assert_eq!(full.t.to_jet(), jet.t);
        for n in 1..=12 {
            assert_eq!(moments(&full.t, n).unwrap(), moments(&jet.t, n).unwrap());
        }
    }

    #[test]
    fn forests() {
        let ex = expand_all(&sys("star:2", Builder::Naive), 6, Mode::Full).unwrap();
        let f = forest_series(&ex.t);
        let want = [1, 1, 2, 7, 38, 291, 2932];
        for (n, w) in want.iter().enumerate() {
            assert_eq!(f.at_one(n), BigInt::from(*w));
        }
    }

    #[test]
    fn cap() {
        assert!(matches!(expand_system(&sys("star:2", Builder::Naive), 41, Mode::Full), Err(SeriesError::CapExceeded { .. })));
    }
}
