//! Exact scalars used by the analysis: rationals, Laurent polynomials in the
//! transcendental `e`, rational functions in `e`, first-order jets, and
//! fraction-free linear algebra over any of them.

mod jet;
mod laurent;
mod linalg;
mod numeric;
mod ratfunc;

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub use jet::Jet;
pub use laurent::LaurentE;
pub use linalg::{cofactor_column, det, det_adjugate, det_division_free, ffge_solve};
pub use numeric::{e_approx, format_sig, rat_to_f64};
pub use ratfunc::RatFuncE;

/// Arbitrary precision rational.
pub type Rat = BigRational;

/// Errors raised by exact arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlgebraError {
    #[error("value is not a Laurent polynomial in e; residual denominator {0}")]
    NotLaurent(String),
    #[error("singular matrix")]
    Singular,
    #[error("inexact division")]
    Inexact,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("malformed Laurent polynomial: {0}")]
    Parse(String),
}

/// Commutative ring with a partial exact division.
///
/// Method names avoid the `std::ops` ones so generic code stays unambiguous.
pub trait Ring: Clone + PartialEq + fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_rat(r: &Rat) -> Self;
    fn is_zero(&self) -> bool;
    fn plus(&self, o: &Self) -> Self;
    fn minus(&self, o: &Self) -> Self;
    fn times(&self, o: &Self) -> Self;
    fn negate(&self) -> Self;
    /// The quotient `self / o` when it exists in the ring.
    fn exact_div(&self, o: &Self) -> Option<Self>;
    /// True when `self` is not a zero divisor, so elimination may divide by it.
    fn is_regular(&self) -> bool {
        !self.is_zero()
    }

    fn from_int(k: i64) -> Self {
        Self::from_rat(&Rat::from_integer(BigInt::from(k)))
    }

    fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.times(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.times(&base);
            }
        }
        acc
    }
}

impl Ring for Rat {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_rat(r: &Rat) -> Self {
        r.clone()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
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
        if Zero::is_zero(o) {
            None
        } else {
            Some(self / o)
        }
    }
}

/// Parse `"p/q"` or `"p"` into a rational.
pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                return None;
            }
            Some(Rat::new(p, q))
        }
        None => Some(Rat::from_integer(s.parse().ok()?)),
    }
}

/// Render a rational as `"p/q"` (or `"p"` when integral).
pub fn rat_string(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Shorthand for an integer rational.
pub fn rat(p: i64, q: i64) -> Rat {
    Rat::new(BigInt::from(p), BigInt::from(q))
}
