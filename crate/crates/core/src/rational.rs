//! Exact rational helpers: fractional parts, the `16^i` lattice, and the
//! `"p/q"` string form used in every JSON record.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use std::f64::consts::TAU;

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// `v - floor(v)`, computed on big integers. The remainder keeps the
/// reduced denominator, so no renormalization is needed.
pub fn frac(v: &Rational) -> Rational {
    Rational::new_raw(v.numer().mod_floor(v.denom()), v.denom().clone())
}

/// Fractional part of `c * a` with no floating-point rounding anywhere.
pub fn frac_exact(c: &Rational, a: &Rational) -> Rational {
    let d = c.denom() * a.denom();
    Rational::new((c.numer() * a.numer()).mod_floor(&d), d)
}

pub fn to_f64(v: &Rational) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Exact rational value of a finite float.
pub fn from_f64(v: f64) -> Result<Rational> {
    Rational::from_float(v).ok_or_else(|| Error::InvalidInput(format!("non-finite value {v}")))
}

pub fn pow16(i: u32) -> BigInt {
    BigInt::from(16u32).pow(i)
}

/// `a_i = 1 + 1/16^i`, the reciprocal of the lattice point `x_i`.
pub fn lattice_recip(i: u32) -> Rational {
    Rational::one() + Rational::new(BigInt::one(), pow16(i))
}

/// `x_i = 16^i / (16^i + 1)`.
pub fn lattice_point(i: u32) -> Rational {
    let p = pow16(i);
    Rational::new(p.clone(), p + 1)
}

/// `sin(2π·frac(turns))`: sine evaluated after exact range reduction.
pub fn sine_of_turns(turns: &Rational) -> f64 {
    (TAU * to_f64(&frac(turns))).sin()
}

pub fn format(v: &Rational) -> String {
    format!("{}/{}", v.numer(), v.denom())
}

pub fn parse(s: &str) -> Result<Rational> {
    let bad = || Error::InvalidInput(format!("malformed rational {s:?}"));
    let s = s.trim();
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s, "1"),
    };
    let p: BigInt = p.parse().map_err(|_| bad())?;
    let q: BigInt = q.parse().map_err(|_| bad())?;
    if q.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(p, q))
}

/// Serde adapter writing rationals as `"p/q"` strings.
pub mod serde_str {
    use super::Rational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        super::parse(&s).map_err(serde::de::Error::custom)
    }

    pub mod option {
        use super::Rational;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(v) => s.serialize_some(&super::super::format(v)),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
            let s = Option::<String>::deserialize(d)?;
            s.map(|s| super::super::parse(&s).map_err(serde::de::Error::custom))
                .transpose()
        }
    }
}
