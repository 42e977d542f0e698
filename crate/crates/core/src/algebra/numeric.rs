use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::Rat;

/// Rational approximation of `e` with error below `10^-120`.
pub fn e_approx() -> Rat {
    static E: OnceLock<Rat> = OnceLock::new();
    E.get_or_init(|| {
        let mut sum = Rat::zero();
        let mut term = Rat::one();
        for k in 1..=90u32 {
            sum += &term;
            term /= Rat::from_integer(BigInt::from(k));
        }
        sum
    })
    .clone()
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    // scale to keep the quotient within f64 range for huge numerators
    let n = r.numer();
    let d = r.denom();
    let shift = n.bits().max(d.bits()).saturating_sub(900) as usize;
    let n = (n >> shift).to_f64().unwrap_or(f64::NAN);
    let d = (d >> shift).to_f64().unwrap_or(f64::NAN);
    n / d
}

/// Decimal rendering with `sig` significant digits, rounding half away from
/// zero; scientific notation outside `[1e-6, 1e12)`.
pub fn format_sig(r: &Rat, sig: usize) -> String {
    let sig = sig.max(1);
    if r.is_zero() {
        return "0".into();
    }
    let neg = r.is_negative();
    let x = r.abs();
    // decimal exponent p with 10^p ≤ x < 10^(p+1)
    let mut p: i64 = (x.numer().bits() as i64 - x.denom().bits() as i64) * 30103 / 100000;
    while pow10(p) > x {
        p -= 1;
    }
    while pow10(p + 1) <= x {
        p += 1;
    }
    let scaled = &x / pow10(p - sig as i64 + 1);
    let mut digits = (scaled + Rat::new(BigInt::one(), BigInt::from(2))).floor().to_integer();
    if digits >= num_traits::pow(BigInt::from(10), sig) {
        digits /= 10;
        p += 1;
    }
    let ds = digits.to_string();
    let body = if (-6..12).contains(&p) {
        if p >= 0 {
            let int_len = p as usize + 1;
            if int_len >= ds.len() {
                format!("{}{}", ds, "0".repeat(int_len - ds.len()))
            } else {
                format!("{}.{}", &ds[..int_len], &ds[int_len..])
            }
        } else {
            format!("0.{}{}", "0".repeat((-p - 1) as usize), ds)
        }
    } else {
        let mantissa = if ds.len() > 1 { format!("{}.{}", &ds[..1], &ds[1..]) } else { ds.clone() };
        format!("{mantissa}e{p}")
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

fn pow10(p: i64) -> Rat {
    let t = Rat::from_integer(num_traits::pow(BigInt::from(10), p.unsigned_abs() as usize));
    if p < 0 {
        t.recip()
    } else {
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{rat, LaurentE};

    #[test]
    fn formats_reference_constants() {
        let mu = LaurentE::monomial(rat(5, 8), -3);
        assert_eq!(format_sig(&mu.eval(&e_approx()), 9), "0.0311169177");
        assert_eq!(format_sig(&rat(1, 3), 4), "0.3333");
        assert_eq!(format_sig(&rat(-2, 1), 3), "-2.00");
        assert_eq!(format_sig(&rat(999_999, 1_000_000), 2), "1.0");
        assert_eq!(format_sig(&rat(999_999, 1000), 2), "1000");
    }
}
