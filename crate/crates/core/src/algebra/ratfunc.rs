use std::fmt;

use num_traits::{One, Zero};

use super::laurent::{poly_divrem, poly_gcd, poly_monic};
use super::{AlgebraError, LaurentE, Rat, Ring};

/// Rational function in `e`: a Laurent numerator over a monic polynomial
/// denominator with nonzero constant term, coprime to the numerator.
///
/// Units `c·e^k` are always absorbed into the numerator, so a value that is a
/// Laurent polynomial has denominator exactly `1`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatFuncE {
    num: LaurentE,
    den: Vec<Rat>,
}

impl RatFuncE {
    pub fn new(num: LaurentE, den: LaurentE) -> Result<Self, AlgebraError> {
        if den.is_zero() {
            return Err(AlgebraError::Singular);
        }
        if num.is_zero() {
            return Ok(Self::from_laurent(LaurentE::zero()));
        }
        if den.is_unit() {
            return Ok(Self::from_laurent(num.div_exact(&den).expect("unit divides")));
        }
        // den = lead · e^low · B with B monic and B(0) ≠ 0
        let lead = den.dense().last().unwrap().clone();
        let b = poly_monic(den.dense().to_vec());
        let num = num.scale(&lead.recip()).shift(-den.low());
        let g = poly_gcd(num.dense(), &b);
        if g.len() <= 1 {
            return Ok(RatFuncE { num, den: b });
        }
        let (nq, nr) = poly_divrem(num.dense(), &g);
        let (bq, br) = poly_divrem(&b, &g);
        debug_assert!(nr.is_empty() && br.is_empty());
        let num = LaurentE::from_parts(num.low(), nq);
        let b = poly_monic(bq);
        if b.len() == 1 {
            Ok(Self::from_laurent(num))
        } else {
            Ok(RatFuncE { num, den: b })
        }
    }

    pub fn from_laurent(num: LaurentE) -> Self {
        RatFuncE { num, den: vec![<Rat as One>::one()] }
    }

    pub fn numerator(&self) -> &LaurentE {
        &self.num
    }

    pub fn denominator(&self) -> LaurentE {
        LaurentE::from_parts(0, self.den.clone())
    }

    pub fn is_laurent(&self) -> bool {
        self.den.len() == 1
    }

    /// The equal Laurent polynomial, or an error carrying the residual
    /// denominator.
    pub fn laurent_normalize(&self) -> Result<LaurentE, AlgebraError> {
        if self.is_laurent() {
            Ok(self.num.clone())
        } else {
            Err(AlgebraError::NotLaurent(self.denominator().to_string()))
        }
    }

    pub fn eval(&self, e: &Rat) -> Rat {
        self.num.eval(e) / self.denominator().eval(e)
    }

    pub fn to_f64(&self) -> f64 {
        super::rat_to_f64(&self.eval(&super::e_approx()))
    }

    pub fn recip(&self) -> Result<Self, AlgebraError> {
        RatFuncE::new(self.denominator(), self.num.clone())
    }

    pub fn div(&self, o: &Self) -> Result<Self, AlgebraError> {
        if o.num.is_zero() {
            return Err(AlgebraError::Singular);
        }
        if self.is_laurent() && o.is_laurent() {
            if let Some(q) = self.num.div_exact(&o.num) {
                return Ok(Self::from_laurent(q));
            }
        }
        RatFuncE::new(&self.num * &o.denominator(), &self.denominator() * &o.num)
    }
}

impl From<LaurentE> for RatFuncE {
    fn from(l: LaurentE) -> Self {
        Self::from_laurent(l)
    }
}

impl fmt::Debug for RatFuncE {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for RatFuncE {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_laurent() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.denominator())
        }
    }
}

impl Ring for RatFuncE {
    fn zero() -> Self {
        Self::from_laurent(LaurentE::zero())
    }
    fn one() -> Self {
        Self::from_laurent(LaurentE::one())
    }
    fn from_rat(r: &Rat) -> Self {
        Self::from_laurent(LaurentE::constant(r.clone()))
    }
    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
    fn plus(&self, o: &Self) -> Self {
        if self.den == o.den {
            // equal denominators: the sum may still share a factor
            if self.is_laurent() {
                return Self::from_laurent(&self.num + &o.num);
            }
            return RatFuncE::new(&self.num + &o.num, self.denominator()).expect("nonzero");
        }
        let n = &(&self.num * &o.denominator()) + &(&o.num * &self.denominator());
        RatFuncE::new(n, &self.denominator() * &o.denominator()).expect("nonzero")
    }
    fn minus(&self, o: &Self) -> Self {
        self.plus(&o.negate())
    }
    fn times(&self, o: &Self) -> Self {
        if self.is_laurent() && o.is_laurent() {
            return Self::from_laurent(&self.num * &o.num);
        }
        RatFuncE::new(&self.num * &o.num, &self.denominator() * &o.denominator()).expect("nonzero")
    }
    fn negate(&self) -> Self {
        RatFuncE { num: -&self.num, den: self.den.clone() }
    }
    fn exact_div(&self, o: &Self) -> Option<Self> {
        self.div(o).ok()
    }
}

impl Zero for RatFuncE {
    fn zero() -> Self {
        <Self as Ring>::zero()
    }
    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
}

impl std::ops::Add for RatFuncE {
    type Output = RatFuncE;
    fn add(self, o: Self) -> Self {
        self.plus(&o)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rat;

    fn lin(a: i64, b: i64) -> LaurentE {
        // a·e + b
        LaurentE::from_terms([(1, rat(a, 1)), (0, rat(b, 1))])
    }

    #[test]
    fn normalizes_common_factors() {
        let f = RatFuncE::new(&lin(2, -1) * &LaurentE::e_inv(), lin(2, -1)).unwrap();
        assert!(f.is_laurent());
        assert_eq!(f.laurent_normalize().unwrap(), LaurentE::e_inv());
    }

    #[test]
    fn keeps_genuine_denominators() {
        let f = RatFuncE::new(LaurentE::one(), lin(1, 1)).unwrap();
        assert!(!f.is_laurent());
        assert!(f.laurent_normalize().is_err());
        let back = f.times(&RatFuncE::from_laurent(lin(1, 1)));
        assert_eq!(back, RatFuncE::one());
    }

    #[test]
    fn unit_denominators_absorbed() {
        let f = RatFuncE::new(LaurentE::monomial(rat(5, 1), -2), LaurentE::monomial(rat(1, 1), 1)).unwrap();
        assert_eq!(f.laurent_normalize().unwrap(), LaurentE::monomial(rat(5, 1), -3));
        let g = RatFuncE::new(lin(2, 2), lin(3, 3)).unwrap();
        assert_eq!(g, RatFuncE::from_rat(&rat(2, 3)));
    }
}
