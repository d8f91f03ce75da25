//! Exact rational scalars and their text encoding (`"p/q"` strings).

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn parse(s: &str) -> Result<Rational> {
    let t = s.trim();
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let n: BigInt = num.parse().map_err(|_| Error::Parse(format!("bad rational {s:?}")))?;
    let d: BigInt = den.parse().map_err(|_| Error::Parse(format!("bad rational {s:?}")))?;
    if d.is_zero() {
        return Err(Error::Parse(format!("zero denominator in {s:?}")));
    }
    Ok(Rational::new(n, d))
}

pub fn format(r: &Rational) -> String {
    r.to_string()
}

/// Lossy conversion used only for human-readable rendering.
pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Huge numerators/denominators: go through the bit lengths.
        let n = r.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = r.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

/// `r^e` for a signed integer exponent; `0^negative` is rejected.
pub fn pow(r: &Rational, e: i64) -> Result<Rational> {
    if e < 0 && r.is_zero() {
        return Err(Error::Validation("zero raised to a negative power".into()));
    }
    let mag = e.unsigned_abs();
    let e32 = u32::try_from(mag).map_err(|_| Error::capacity("exponent", mag, u32::MAX))?;
    let num = num_traits::pow(r.numer().clone(), e32 as usize);
    let den = num_traits::pow(r.denom().clone(), e32 as usize);
    Ok(if e >= 0 { Rational::new(num, den) } else { Rational::new(den, num) })
}

/// Least common multiple of the denominators.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values.into_iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Smallest integer `s` with `s*s >= n`, for `n >= 0`.
pub fn ceil_sqrt(n: &BigInt) -> BigInt {
    let s = n.sqrt();
    if &s * &s == *n { s } else { s + 1 }
}

/// `ceil(sqrt(r))` for a nonnegative rational.
pub fn ceil_sqrt_rational(r: &Rational) -> BigInt {
    assert!(!r.is_negative());
    // ceil(sqrt(p/q)) = smallest s with s^2 q >= p.
    let p = r.numer();
    let q = r.denom();
    let mut s = (p / q).sqrt();
    while &s * &s * q < *p {
        s += 1;
    }
    while s > BigInt::zero() {
        let t = &s - 1;
        if &t * &t * q >= *p {
            s = t;
        } else {
            break;
        }
    }
    s
}

pub fn ceil(r: &Rational) -> BigInt {
    r.ceil().to_integer()
}

pub fn floor(r: &Rational) -> BigInt {
    r.floor().to_integer()
}

pub mod serde_rational {
    //! Serialize a rational as its `"p/q"` string.
    use super::Rational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        super::parse(&s).map_err(serde::de::Error::custom)
    }
}

pub mod serde_rational_vec {
    use super::Rational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(super::format))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter().map(|s| super::parse(s).map_err(serde::de::Error::custom)).collect()
    }
}

pub mod serde_rational_opt {
    use super::Rational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&super::format(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        let v = Option::<String>::deserialize(d)?;
        v.map(|s| super::parse(&s).map_err(serde::de::Error::custom)).transpose()
    }
}
