use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{parse_rat, rat_string, AlgebraError, Rat};

/// Laurent polynomial in `e` with rational coefficients.
///
/// Stored densely from the lowest power; both ends are trimmed so equality is
/// structural. The zero polynomial has no coefficients.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct LaurentE {
    low: i32,
    coeffs: Vec<Rat>,
}

impl LaurentE {
    pub fn zero() -> Self {
        LaurentE::default()
    }

    pub fn one() -> Self {
        Self::constant(Rat::one())
    }

    pub fn constant(c: Rat) -> Self {
        Self::monomial(c, 0)
    }

    /// `c · e^pow`
    pub fn monomial(c: Rat, pow: i32) -> Self {
        Self::from_parts(pow, vec![c])
    }

    /// `e`
    pub fn e() -> Self {
        Self::monomial(Rat::one(), 1)
    }

    /// `1/e`
    pub fn e_inv() -> Self {
        Self::monomial(Rat::one(), -1)
    }

    /// Build from the lowest power and dense coefficients.
    pub fn from_parts(low: i32, coeffs: Vec<Rat>) -> Self {
        let mut out = LaurentE { low, coeffs };
        out.trim();
        out
    }

    /// Build from `(power, coefficient)` pairs; repeated powers are summed.
    pub fn from_terms<I: IntoIterator<Item = (i32, Rat)>>(terms: I) -> Self {
        let mut map: BTreeMap<i32, Rat> = BTreeMap::new();
        for (p, c) in terms {
            *map.entry(p).or_insert_with(Rat::zero) += c;
        }
        let (Some(&lo), Some(&hi)) = (map.keys().next(), map.keys().next_back()) else {
            return Self::zero();
        };
        let mut coeffs = vec![Rat::zero(); (hi - lo + 1) as usize];
        for (p, c) in map {
            coeffs[(p - lo) as usize] = c;
        }
        Self::from_parts(lo, coeffs)
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
        let lead = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        if lead > 0 {
            self.coeffs.drain(..lead);
            self.low += lead as i32;
        }
        if self.coeffs.is_empty() {
            self.low = 0;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Lowest power with a nonzero coefficient (0 for the zero polynomial).
    pub fn low(&self) -> i32 {
        self.low
    }

    /// Highest power with a nonzero coefficient.
    pub fn high(&self) -> i32 {
        self.low + self.coeffs.len() as i32 - 1
    }

    pub fn coeff(&self, pow: i32) -> Rat {
        let i = pow - self.low;
        if i < 0 || i as usize >= self.coeffs.len() {
            Rat::zero()
        } else {
            self.coeffs[i as usize].clone()
        }
    }

    /// Nonzero `(power, coefficient)` pairs in increasing power order.
    pub fn terms(&self) -> impl Iterator<Item = (i32, &Rat)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(move |(i, c)| (self.low + i as i32, c))
    }

    /// Dense coefficients starting at `low()`.
    pub(crate) fn dense(&self) -> &[Rat] {
        &self.coeffs
    }

    /// True for `c · e^k` with `c ≠ 0`, the units of the ring.
    pub fn is_unit(&self) -> bool {
        self.coeffs.len() == 1
    }

    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        LaurentE {
            low: self.low,
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    /// Multiply by `e^k`.
    pub fn shift(&self, k: i32) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        LaurentE {
            low: self.low + k,
            coeffs: self.coeffs.clone(),
        }
    }

    /// Exact quotient in `ℚ[e, 1/e]`, if it exists.
    pub fn div_exact(&self, o: &Self) -> Option<Self> {
        if o.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Self::zero());
        }
        if o.is_unit() {
            let inv = o.coeffs[0].recip();
            return Some(self.scale(&inv).shift(-o.low));
        }
        // Both dense parts have a nonzero constant term, and `e` is a unit,
        // so divisibility reduces to polynomial divisibility.
        let (q, r) = poly_divrem(&self.coeffs, &o.coeffs);
        if !r.is_empty() {
            return None;
        }
        Some(Self::from_parts(self.low - o.low, q))
    }

    /// Evaluate at a rational value of `e`.
    pub fn eval(&self, e: &Rat) -> Rat {
        if self.is_zero() {
            return Rat::zero();
        }
        let mut acc = Rat::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * e + c;
        }
        acc * pow_i(e, self.low)
    }

    pub fn to_f64(&self) -> f64 {
        super::rat_to_f64(&self.eval(&super::e_approx()))
    }

    /// Serialized form: power → `"p/q"`.
    pub fn to_map(&self) -> BTreeMap<String, String> {
        self.terms()
            .map(|(p, c)| (p.to_string(), rat_string(c)))
            .collect()
    }

    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self, AlgebraError> {
        let mut terms = Vec::new();
        for (k, v) in map {
            let p: i32 = k
                .trim()
                .parse()
                .map_err(|_| AlgebraError::Parse(format!("bad power {k:?}")))?;
            let c = parse_rat(v).ok_or_else(|| AlgebraError::Parse(format!("bad coefficient {v:?}")))?;
            terms.push((p, c));
        }
        Ok(Self::from_terms(terms))
    }

    /// Display as a single fraction over the smallest power of `e`:
    /// `(20e^3+72e^2+84e-175)/(32e^6)`.
    pub fn fraction_string(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let shift = (-self.low).max(0);
        let mut den = num_bigint::BigInt::one();
        for (_, c) in self.terms() {
            den = den.lcm(c.denom());
        }
        let mut parts = Vec::new();
        for (p, c) in self.terms().collect::<Vec<_>>().into_iter().rev() {
            let k = (c * Rat::from_integer(den.clone())).to_integer();
            parts.push((p + shift, k));
        }
        let mut num = String::new();
        for (i, (p, k)) in parts.iter().enumerate() {
            let neg = k.is_negative();
            let mag = k.abs();
            if i == 0 {
                if neg {
                    num.push('-');
                }
            } else {
                num.push(if neg { '-' } else { '+' });
            }
            let show_coeff = !mag.is_one() || *p == 0;
            if show_coeff {
                num.push_str(&mag.to_string());
            }
            match p {
                0 => {}
                1 => num.push('e'),
                _ => num.push_str(&format!("e^{p}")),
            }
        }
        let mut den_s = String::new();
        if !den.is_one() {
            den_s.push_str(&den.to_string());
        }
        match shift {
            0 => {}
            1 => den_s.push('e'),
            s => den_s.push_str(&format!("e^{s}")),
        }
        if den_s.is_empty() {
            return num;
        }
        if !den.is_one() && shift != 0 {
            den_s = format!("({den_s})");
        }
        if parts.len() == 1 {
            format!("{num}/{den_s}")
        } else {
            format!("({num})/{den_s}")
        }
    }
}

fn pow_i(e: &Rat, k: i32) -> Rat {
    let mut acc = Rat::one();
    for _ in 0..k.unsigned_abs() {
        acc *= e;
    }
    if k < 0 {
        acc.recip()
    } else {
        acc
    }
}

impl fmt::Debug for LaurentE {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for LaurentE {
    /// Sum of `c·e^k` terms, highest power first.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms: Vec<_> = self.terms().collect();
        for (i, (p, c)) in terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            let cs = rat_string(&mag);
            match p {
                0 => write!(f, "{cs}")?,
                1 if mag.is_one() => write!(f, "e")?,
                1 => write!(f, "{cs}*e")?,
                _ if mag.is_one() => write!(f, "e^{p}")?,
                _ => write!(f, "{cs}*e^{p}")?,
            }
        }
        Ok(())
    }
}

impl Serialize for LaurentE {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_map().serialize(s)
    }
}

impl<'de> Deserialize<'de> for LaurentE {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let map = BTreeMap::<String, String>::deserialize(d)?;
        LaurentE::from_map(&map).map_err(serde::de::Error::custom)
    }
}

fn add_impl(a: &LaurentE, b: &LaurentE, negate_b: bool) -> LaurentE {
    if b.is_zero() {
        return a.clone();
    }
    if a.is_zero() {
        return if negate_b { -b } else { b.clone() };
    }
    let low = a.low.min(b.low);
    let high = a.high().max(b.high());
    let mut coeffs = vec![Rat::zero(); (high - low + 1) as usize];
    for (i, c) in a.coeffs.iter().enumerate() {
        coeffs[(a.low - low) as usize + i] += c;
    }
    for (i, c) in b.coeffs.iter().enumerate() {
        let slot = &mut coeffs[(b.low - low) as usize + i];
        if negate_b {
            *slot -= c;
        } else {
            *slot += c;
        }
    }
    LaurentE::from_parts(low, coeffs)
}

impl Add for &LaurentE {
    type Output = LaurentE;
    fn add(self, o: &LaurentE) -> LaurentE {
        add_impl(self, o, false)
    }
}

impl Sub for &LaurentE {
    type Output = LaurentE;
    fn sub(self, o: &LaurentE) -> LaurentE {
        add_impl(self, o, true)
    }
}

impl Mul for &LaurentE {
    type Output = LaurentE;
    fn mul(self, o: &LaurentE) -> LaurentE {
        if self.is_zero() || o.is_zero() {
            return LaurentE::zero();
        }
        LaurentE::from_parts(self.low + o.low, poly_mul(&self.coeffs, &o.coeffs))
    }
}

impl Neg for &LaurentE {
    type Output = LaurentE;
    fn neg(self) -> LaurentE {
        LaurentE {
            low: self.low,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for LaurentE {
            type Output = LaurentE;
            fn $m(self, o: LaurentE) -> LaurentE {
                (&self).$m(&o)
            }
        }
    )*};
}
forward_owned!(Add add, Sub sub, Mul mul);

impl Neg for LaurentE {
    type Output = LaurentE;
    fn neg(self) -> LaurentE {
        -&self
    }
}

impl super::Ring for LaurentE {
    fn zero() -> Self {
        LaurentE::zero()
    }
    fn one() -> Self {
        LaurentE::one()
    }
    fn from_rat(r: &Rat) -> Self {
        LaurentE::constant(r.clone())
    }
    fn is_zero(&self) -> bool {
        LaurentE::is_zero(self)
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn negate(&self) -> Self {
        -self
    }
    fn exact_div(&self, o: &Self) -> Option<Self> {
        self.div_exact(o)
    }
}

// Dense polynomial helpers over ℚ, coefficient `i` of `x^i`, no trailing zeros.

pub(crate) fn poly_trim(mut p: Vec<Rat>) -> Vec<Rat> {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    p
}

pub(crate) fn poly_mul(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Rat::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    poly_trim(out)
}

/// Quotient and remainder; `b` must be nonzero.
pub(crate) fn poly_divrem(a: &[Rat], b: &[Rat]) -> (Vec<Rat>, Vec<Rat>) {
    let b = poly_trim(b.to_vec());
    assert!(!b.is_empty(), "polynomial division by zero");
    let mut r = poly_trim(a.to_vec());
    if r.len() < b.len() {
        return (Vec::new(), r);
    }
    let lead_inv = b.last().unwrap().recip();
    let mut q = vec![Rat::zero(); r.len() - b.len() + 1];
    while r.len() >= b.len() {
        let shift = r.len() - b.len();
        let f = r.last().unwrap() * &lead_inv;
        for (i, c) in b.iter().enumerate() {
            let t = c * &f;
            r[shift + i] -= t;
        }
        q[shift] = f;
        r.pop();
        r = poly_trim(r);
    }
    (poly_trim(q), r)
}

/// Monic greatest common divisor.
pub(crate) fn poly_gcd(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let mut x = poly_trim(a.to_vec());
    let mut y = poly_trim(b.to_vec());
    while !y.is_empty() {
        let (_, r) = poly_divrem(&x, &y);
        x = y;
        y = r;
    }
    poly_monic(x)
}

pub(crate) fn poly_monic(p: Vec<Rat>) -> Vec<Rat> {
    match p.last() {
        None => p,
        Some(l) if l.is_one() => p,
        Some(l) => {
            let inv = l.recip();
            p.iter().map(|c| c * &inv).collect()
        }
    }
}
