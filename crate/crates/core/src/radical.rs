//! Exact arithmetic on thresholds of the form `c · n^(e/r)`.
//!
//! Kernel and degree thresholds are irrational in general, so they are kept
//! symbolic and every comparison against an integer is decided by raising
//! both sides to the `r`-th power in arbitrary precision.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{argument, Result};

/// The exact positive real `scale · base^(exponent / root)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Radical {
    scale: BigRational,
    base: u64,
    exponent: u32,
    root: u32,
}

impl Radical {
    pub fn new(scale: BigRational, base: u64, exponent: u32, root: u32) -> Result<Self> {
        if !scale.is_positive() {
            return Err(argument(format!("radical scale must be positive, got {scale}")));
        }
        if root == 0 {
            return Err(argument("radical root must be at least 1"));
        }
        if base == 0 && exponent > 0 {
            return Err(argument("radical base must be positive"));
        }
        Ok(Radical { scale, base, exponent, root })
    }

    /// A plain rational value.
    pub fn rational(value: BigRational) -> Result<Self> {
        Radical::new(value, 1, 0, 1)
    }

    pub fn integer(value: u64) -> Result<Self> {
        Radical::rational(BigRational::from_integer(BigInt::from(value)))
    }

    pub fn scale(&self) -> &BigRational {
        &self.scale
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn root(&self) -> u32 {
        self.root
    }

    fn numer(&self) -> BigUint {
        self.scale.numer().magnitude().clone()
    }

    fn denom(&self) -> BigUint {
        self.scale.denom().magnitude().clone()
    }

    /// Orders `multiplier · self` against the integer `target`.
    pub fn scaled_cmp(&self, multiplier: u64, target: u64) -> Ordering {
        // multiplier·(a/b)·base^(e/r) vs target  <=>  (multiplier·a)^r·base^e vs (b·target)^r
        let lhs = (BigUint::from(multiplier) * self.numer()).pow(self.root)
            * BigUint::from(self.base).pow(self.exponent);
        let rhs = (self.denom() * BigUint::from(target)).pow(self.root);
        lhs.cmp(&rhs)
    }

    /// Orders `self` against the integer `x`.
    pub fn cmp_integer(&self, x: u64) -> Ordering {
        self.scaled_cmp(1, x)
    }

    /// `x > self`, evaluated exactly.
    pub fn is_exceeded_by(&self, x: u64) -> bool {
        self.cmp_integer(x) == Ordering::Less
    }

    /// `x ≤ self`, evaluated exactly.
    pub fn admits(&self, x: u64) -> bool {
        !self.is_exceeded_by(x)
    }

    /// The smallest integer strictly greater than `self`.
    pub fn smallest_exceeding(&self) -> u64 {
        let mut hi = 1u64;
        while !self.is_exceeded_by(hi) {
            hi = hi.saturating_mul(2);
            if hi == u64::MAX {
                return hi;
            }
        }
        let mut lo = 0u64;
        if self.is_exceeded_by(lo) {
            return lo;
        }
        // invariant: lo admitted, hi exceeds
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.is_exceeded_by(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    pub fn to_f64(&self) -> f64 {
        let scale = self.scale.to_f64().unwrap_or(f64::NAN);
        scale * (self.base as f64).powf(self.exponent as f64 / self.root as f64)
    }
}

impl fmt::Display for Radical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponent == 0 || self.base == 1 {
            write!(f, "{}", self.scale)
        } else {
            write!(f, "{}*{}^({}/{})", self.scale, self.base, self.exponent, self.root)
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RadicalRepr {
    scale: String,
    base: u64,
    exponent: u32,
    root: u32,
    approx: f64,
}

impl Serialize for Radical {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        RadicalRepr {
            scale: format_rational(&self.scale),
            base: self.base,
            exponent: self.exponent,
            root: self.root,
            approx: self.to_f64(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Radical {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = RadicalRepr::deserialize(deserializer)?;
        let scale = parse_rational(&repr.scale).map_err(serde::de::Error::custom)?;
        Radical::new(scale, repr.base, repr.exponent, repr.root).map_err(serde::de::Error::custom)
    }
}

/// Parses `"a/b"` or `"a"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let text = text.trim();
    let (numer, denom) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let numer: BigInt = numer
        .parse()
        .map_err(|_| argument(format!("not a rational: {text:?}")))?;
    let denom: BigInt = denom
        .parse()
        .map_err(|_| argument(format!("not a rational: {text:?}")))?;
    if denom.is_zero() {
        return Err(argument(format!("zero denominator in {text:?}")));
    }
    Ok(BigRational::new(numer, denom))
}

/// Formats a rational as `"a/b"`, always with an explicit denominator.
pub fn format_rational(value: &BigRational) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

pub fn ratio(numer: u64, denom: u64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

/// Smallest `r` with `2^r ≥ 1/value`, for `value` in `(0, 1]`.
pub fn ceil_log2_inverse(value: &BigRational) -> u32 {
    let mut r = 0u32;
    let mut power = BigInt::one();
    // 2^r ≥ den/num  <=>  2^r · num ≥ den
    while &power * value.numer() < *value.denom() {
        power <<= 1;
        r += 1;
    }
    r
}

pub(crate) mod rational_string {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    use super::{format_rational, parse_rational};

    pub fn serialize<S: Serializer>(value: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(serde::de::Error::custom)
    }
}

pub(crate) mod rational_vec {
    use num_rational::BigRational;
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    use super::{format_rational, parse_rational};

    pub fn serialize<S: Serializer>(values: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(values.len()))?;
        for v in values {
            seq.serialize_element(&format_rational(v))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigRational>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|t| parse_rational(t).map_err(serde::de::Error::custom))
            .collect()
    }
}
