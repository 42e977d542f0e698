use super::{Rat, Ring};

/// First-order jet `v + d·ε` with `ε² = 0`.
#[derive(Clone, PartialEq, Debug)]
pub struct Jet<T> {
    pub v: T,
    pub d: T,
}

impl<T: Ring> Jet<T> {
    pub fn new(v: T, d: T) -> Self {
        Jet { v, d }
    }

    pub fn constant(v: T) -> Self {
        Jet { v, d: T::zero() }
    }

    /// `exp(self)` given `exp(self.v)`.
    pub fn exp_with(&self, exp_v: T) -> Self {
        let d = exp_v.times(&self.d);
        Jet { v: exp_v, d }
    }
}

impl<T: Ring> Ring for Jet<T> {
    fn zero() -> Self {
        Jet::constant(T::zero())
    }
    fn one() -> Self {
        Jet::constant(T::one())
    }
    fn from_rat(r: &Rat) -> Self {
        Jet::constant(T::from_rat(r))
    }
    fn is_zero(&self) -> bool {
        self.v.is_zero() && self.d.is_zero()
    }
    fn plus(&self, o: &Self) -> Self {
        Jet::new(self.v.plus(&o.v), self.d.plus(&o.d))
    }
    fn minus(&self, o: &Self) -> Self {
        Jet::new(self.v.minus(&o.v), self.d.minus(&o.d))
    }
    fn times(&self, o: &Self) -> Self {
        Jet::new(
            self.v.times(&o.v),
            self.v.times(&o.d).plus(&self.d.times(&o.v)),
        )
    }
    fn negate(&self) -> Self {
        Jet::new(self.v.negate(), self.d.negate())
    }
    fn exact_div(&self, o: &Self) -> Option<Self> {
        if !o.v.is_regular() {
            return None;
        }
        let q0 = self.v.exact_div(&o.v)?;
        let q1 = self.d.minus(&q0.times(&o.d)).exact_div(&o.v)?;
        Some(Jet::new(q0, q1))
    }
    fn is_regular(&self) -> bool {
        self.v.is_regular()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rat;

    #[test]
    fn product_rule_and_quotient() {
        let x = Jet::new(rat(3, 1), rat(1, 1));
        let y = x.times(&x).times(&x);
        assert_eq!(y, Jet::new(rat(27, 1), rat(27, 1)));
        let q = y.exact_div(&x).unwrap();
        assert_eq!(q, x.times(&x));
        let nil = Jet::new(rat(0, 1), rat(1, 1));
        assert!(y.exact_div(&nil).is_none());
    }
}
