//! Exact quantities of the form `factor · base^exponent` with rational parts.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{self, Rational};
use crate::{Error, Result};

/// Largest bit length we are willing to materialise while comparing powers.
const MAX_POWER_BITS: u64 = 1 << 24;

/// `factor · base^exponent` with `base > 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expr {
    pub factor: Rational,
    pub base: Rational,
    pub exponent: Rational,
}

impl Expr {
    pub fn new(factor: Rational, base: Rational, exponent: Rational) -> Result<Self> {
        if !base.is_positive() {
            return Err(Error::Validation(format!("power base must be positive, got {base}")));
        }
        Ok(Expr { factor, base, exponent }.normalised())
    }

    pub fn rational(r: Rational) -> Self {
        Expr { factor: r, base: Rational::one(), exponent: Rational::zero() }
    }

    pub fn int(n: i64) -> Self {
        Self::rational(rational::int(n))
    }

    /// `factor · 2^exponent`.
    pub fn two_power(factor: Rational, exponent: Rational) -> Self {
        Expr { factor, base: rational::int(2), exponent }.normalised()
    }

    fn normalised(mut self) -> Self {
        if !self.factor.is_zero() && self.exponent.is_integer() && self.exponent.abs() <= Rational::from_integer(64.into()) {
            let e = self.exponent.to_integer().to_i64().expect("small");
            self.factor *= rational::pow(&self.base, e).expect("small power");
            self.exponent = Rational::zero();
        }
        if self.factor.is_zero() || self.base.is_one() || self.exponent.is_zero() {
            self.base = Rational::one();
            self.exponent = Rational::zero();
        }
        self
    }

    /// The exact value when the exponent is an integer.
    pub fn as_rational(&self) -> Option<Rational> {
        if !self.exponent.is_integer() {
            return None;
        }
        let e = self.exponent.to_integer().to_i64()?;
        let bits = (self.base.numer().bits() + self.base.denom().bits()) * e.unsigned_abs();
        if bits > MAX_POWER_BITS {
            return None;
        }
        Some(&self.factor * rational::pow(&self.base, e).ok()?)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Expr { factor: &self.factor * c, ..self.clone() }.normalised()
    }

    /// Product, when both sides share a base or one side is rational.
    pub fn mul(&self, other: &Expr) -> Option<Expr> {
        if other.exponent.is_zero() {
            return Some(self.scale(&other.factor));
        }
        if self.exponent.is_zero() {
            return Some(other.scale(&self.factor));
        }
        (self.base == other.base).then(|| {
            Expr {
                factor: &self.factor * &other.factor,
                base: self.base.clone(),
                exponent: &self.exponent + &other.exponent,
            }
            .normalised()
        })
    }

    /// Quotient, under the same conditions as [`Expr::mul`].
    pub fn div(&self, other: &Expr) -> Option<Expr> {
        if other.factor.is_zero() {
            return None;
        }
        let inv = Expr { factor: other.factor.recip(), base: other.base.clone(), exponent: -&other.exponent };
        self.mul(&inv)
    }

    pub fn signum(&self) -> i32 {
        if self.factor.is_positive() {
            1
        } else if self.factor.is_negative() {
            -1
        } else {
            0
        }
    }

    /// Exact comparison: both sides are raised to the least common multiple
    /// of the exponent denominators and compared as rationals.
    pub fn cmp_exact(&self, other: &Expr) -> Result<Ordering> {
        let (s1, s2) = (self.signum(), other.signum());
        if s1 != s2 {
            return Ok(s1.cmp(&s2));
        }
        if s1 == 0 {
            return Ok(Ordering::Equal);
        }
        let a = Expr { factor: self.factor.abs(), ..self.clone() };
        let b = Expr { factor: other.factor.abs(), ..other.clone() };
        let ord = cmp_positive(&a, &b)?;
        Ok(if s1 < 0 { ord.reverse() } else { ord })
    }

    pub fn equals(&self, other: &Expr) -> Result<bool> {
        Ok(self.cmp_exact(other)? == Ordering::Equal)
    }

    /// `log₂|value|`, for rendering only.
    pub fn log2_f64(&self) -> f64 {
        log2_rational(&self.factor.abs()) + rational::to_f64(&self.exponent) * log2_rational(&self.base)
    }

    /// Decimal value, for rendering only.
    pub fn to_f64(&self) -> f64 {
        if self.factor.is_zero() {
            return 0.0;
        }
        (self.signum() as f64) * self.log2_f64().exp2()
    }

    /// A rational `r ≤ value` within `2^{-precision}` relative error.
    pub fn lower_rational(&self, precision: u32) -> Result<Rational> {
        if let Some(r) = self.as_rational() {
            return Ok(r);
        }
        // base^{p/q} = (base^p)^{1/q}; take an integer q-th root of a scaled value.
        let p = self.exponent.numer().to_i64().ok_or_else(|| Error::capacity("exponent", "large", i64::MAX))?;
        let q = self.exponent.denom().to_u32().ok_or_else(|| Error::capacity("root", "large", u32::MAX))?;
        let bp = rational::pow(&self.base, p)?;
        let scale = BigInt::one() << (precision as u64 * q as u64);
        let floor_root = {
            let scaled = (bp.numer() * &scale).div_floor(bp.denom());
            scaled.nth_root(q)
        };
        let ceil_root = {
            let scaled = (bp.numer() * &scale).div_ceil(bp.denom());
            let r = scaled.nth_root(q);
            if num_traits::pow(r.clone(), q as usize) == scaled { r } else { r + 1 }
        };
        let denom = BigInt::one() << precision as u64;
        let root = if self.factor.is_negative() { ceil_root } else { floor_root };
        Ok(&self.factor * Rational::new(root, denom))
    }
}

fn log2_rational(r: &Rational) -> f64 {
    let nb = r.numer().bits() as i64;
    let db = r.denom().bits() as i64;
    // Shift both to at most 60 significant bits before converting.
    let n_shift = (nb - 60).max(0);
    let d_shift = (db - 60).max(0);
    let n = (r.numer() >> n_shift as u64).to_f64().unwrap_or(f64::NAN);
    let d = (r.denom() >> d_shift as u64).to_f64().unwrap_or(f64::NAN);
    n.log2() - d.log2() + (n_shift - d_shift) as f64
}

fn cmp_positive(a: &Expr, b: &Expr) -> Result<Ordering> {
    // Move everything to one side: compare fa·ba^ea against fb·bb^eb.
    if a.base == b.base || a.exponent.is_zero() || b.exponent.is_zero() {
        let (base, ea, eb) = if a.exponent.is_zero() {
            (b.base.clone(), Rational::zero(), b.exponent.clone())
        } else {
            (a.base.clone(), a.exponent.clone(), b.exponent.clone())
        };
        // fa / fb  vs  base^(eb - ea)
        let ratio = &a.factor / &b.factor;
        let e = eb - ea;
        return cmp_rational_with_power(&ratio, &base, &e);
    }
    let l = a.exponent.denom().lcm(b.exponent.denom());
    let lhs = raise(&a.factor, &a.base, &a.exponent, &l)?;
    let rhs = raise(&b.factor, &b.base, &b.exponent, &l)?;
    Ok(lhs.cmp(&rhs))
}

/// Compare `r` with `base^e` for `r > 0`.
fn cmp_rational_with_power(r: &Rational, base: &Rational, e: &Rational) -> Result<Ordering> {
    let q = e.denom().clone();
    let lhs = pow_big(r, &q)?;
    let rhs = pow_big(base, e.numer())?;
    Ok(lhs.cmp(&rhs))
}

/// `(f · b^e)^l` for an integer `l` that clears the denominator of `e`.
fn raise(f: &Rational, b: &Rational, e: &Rational, l: &BigInt) -> Result<Rational> {
    let el = e * Rational::from_integer(l.clone());
    Ok(pow_big(f, l)? * pow_big(b, &el.to_integer())?)
}

fn pow_big(r: &Rational, e: &BigInt) -> Result<Rational> {
    let mag = e.abs();
    let bits = (r.numer().bits() + r.denom().bits()).saturating_mul(mag.to_u64().unwrap_or(u64::MAX));
    if bits > MAX_POWER_BITS {
        return Err(Error::capacity("bits in an exact power comparison", bits, MAX_POWER_BITS));
    }
    rational::pow(r, e.to_i64().expect("bounded above"))
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponent.is_zero() {
            return write!(f, "{}", self.factor);
        }
        let base = if self.base.is_integer() { self.base.to_string() } else { format!("({})", self.base) };
        let power = if self.exponent.is_integer() {
            format!("{base}^{}", self.exponent)
        } else {
            format!("{base}^({})", self.exponent)
        };
        if self.factor.is_one() {
            write!(f, "{power}")
        } else {
            write!(f, "{}*{power}", self.factor)
        }
    }
}

/// JSON form; `decimal` is informational and ignored when parsing.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExprJson {
    pub factor: String,
    #[serde(default = "one_string")]
    pub base: String,
    #[serde(default = "zero_string")]
    pub exponent: String,
    #[serde(default, skip_deserializing)]
    pub decimal: Option<f64>,
}

fn one_string() -> String {
    "1".into()
}

fn zero_string() -> String {
    "0".into()
}

impl Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ExprJson {
            factor: rational::format(&self.factor),
            base: rational::format(&self.base),
            exponent: rational::format(&self.exponent),
            decimal: Some(self.to_f64()).filter(|v| v.is_finite()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = ExprJson::deserialize(d)?;
        let parse = |s: &str| rational::parse(s).map_err(serde::de::Error::custom);
        Expr::new(parse(&j.factor)?, parse(&j.base)?, parse(&j.exponent)?).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn comparisons() {
        let sqrt2 = Expr::two_power(int(1), rat(1, 2));
        assert_eq!(Expr::int(2).cmp_exact(&sqrt2).unwrap(), Ordering::Greater);
        assert_eq!(rat(7, 5).cmp(&rat(141, 100)), Ordering::Less);
        assert_eq!(Expr::rational(rat(7, 5)).cmp_exact(&sqrt2).unwrap(), Ordering::Less);
        assert_eq!(Expr::rational(rat(3, 2)).cmp_exact(&sqrt2).unwrap(), Ordering::Greater);
        let sqrt4 = Expr::new(int(1), int(4), rat(1, 2)).unwrap();
        assert!(sqrt4.equals(&Expr::int(2)).unwrap());
        // 3^(1/3) vs 2^(1/2): 9 > 8.
        let c3 = Expr::new(int(1), int(3), rat(1, 3)).unwrap();
        assert_eq!(c3.cmp_exact(&sqrt2).unwrap(), Ordering::Greater);
        assert_eq!(Expr::int(-1).cmp_exact(&Expr::int(0)).unwrap(), Ordering::Less);
        let neg = Expr::two_power(int(-1), rat(1, 2));
        assert_eq!(neg.cmp_exact(&Expr::int(-1)).unwrap(), Ordering::Less);
    }

    #[test]
    fn arithmetic() {
        let a = Expr::two_power(rat(1, 4), rat(1, 2));
        let b = Expr::two_power(int(1), rat(-1, 2));
        assert_eq!(a.mul(&b).unwrap(), Expr::rational(rat(1, 4)));
        assert_eq!(a.div(&b).unwrap(), Expr::rational(rat(1, 2)));
        assert!((a.to_f64() - 0.353553).abs() < 1e-5);
        assert!((a.log2_f64() + 1.5).abs() < 1e-12);
    }

    #[test]
    fn lower_bounds() {
        let sqrt2 = Expr::two_power(int(1), rat(1, 2));
        let r = sqrt2.lower_rational(20).unwrap();
        assert!(&r * &r <= int(2));
        assert!(int(2) - &r * &r < rat(1, 1000));
    }

    #[test]
    fn json() {
        let a = Expr::two_power(rat(1, 4), rat(3, 2));
        let s = serde_json::to_string(&a).unwrap();
        assert!(s.contains("decimal"));
        let back: Expr = serde_json::from_str(&s).unwrap();
        assert_eq!(back, a);
        assert!(serde_json::from_str::<Expr>(r#"{"factor":"1","base":"-2","exponent":"1"}"#).is_err());
    }
}
