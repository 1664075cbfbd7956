//! Exact exponents: quotients of odd positive integers.
//!
//! Every exponent that appears in the equation (`alpha`, `beta`, `gamma`) is a
//! ratio of two odd positive integers. That restriction is what makes
//! `x^alpha` a well-defined, sign-preserving real power for negative `x`, and
//! it lets the `gamma == alpha * beta` test run in exact arithmetic.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Numerators and denominators must stay below this bound.
pub const MAX_TERM: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RationalError {
    #[error("exponent {0:?} is not of the form p/q with positive integers p, q")]
    Malformed(String),
    #[error("exponent {num}/{den} is not a quotient of odd positive integers")]
    NotOdd { num: u64, den: u64 },
    #[error("exponent {num}/{den} exceeds the representable range (terms must be < {MAX_TERM})")]
    OutOfRange { num: u64, den: u64 },
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

/// A positive rational `num/den` with both terms odd, in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OddRational {
    num: u64,
    den: u64,
}

impl OddRational {
    pub const ONE: OddRational = OddRational { num: 1, den: 1 };

    /// Reduces `num/den` to lowest terms, then checks that both terms are odd.
    pub fn new(num: u64, den: u64) -> Result<Self, RationalError> {
        if num == 0 || den == 0 {
            return Err(RationalError::Malformed(format!("{num}/{den}")));
        }
        let g = gcd(num, den);
        let (num, den) = (num / g, den / g);
        if num >= MAX_TERM || den >= MAX_TERM {
            return Err(RationalError::OutOfRange { num, den });
        }
        if num % 2 == 0 || den % 2 == 0 {
            return Err(RationalError::NotOdd { num, den });
        }
        Ok(OddRational { num, den })
    }

    pub fn numerator(&self) -> u64 {
        self.num
    }

    pub fn denominator(&self) -> u64 {
        self.den
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn recip(self) -> OddRational {
        OddRational { num: self.den, den: self.num }
    }

    /// Exact product. The product of odd quotients is again an odd quotient,
    /// so this only fails when the reduced terms leave the supported range.
    pub fn checked_mul(self, other: OddRational) -> Option<OddRational> {
        let g1 = gcd(self.num, other.den);
        let g2 = gcd(other.num, self.den);
        let num = (self.num / g1).checked_mul(other.num / g2)?;
        let den = (self.den / g2).checked_mul(other.den / g1)?;
        OddRational::new(num, den).ok()
    }

    /// Exact equality of `self` with `a * b`, computed by cross
    /// multiplication in 128-bit integers so it cannot overflow.
    pub fn equals_product(self, a: OddRational, b: OddRational) -> bool {
        (self.num as u128) * (a.den as u128) * (b.den as u128)
            == (a.num as u128) * (b.num as u128) * (self.den as u128)
    }

    /// `1/self` as an integer, when it is one.
    pub fn reciprocal_integer(self) -> Option<u32> {
        if self.num == 1 {
            u32::try_from(self.den).ok()
        } else {
            None
        }
    }
}

impl fmt::Display for OddRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for OddRational {
    type Err = RationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || RationalError::Malformed(s.to_string());
        let (n, d) = match s.trim().split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s.trim(), "1"),
        };
        let num: u64 = n.parse().map_err(|_| malformed())?;
        let den: u64 = d.parse().map_err(|_| malformed())?;
        OddRational::new(num, den)
    }
}

impl Serialize for OddRational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for OddRational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Real power `x^(num/den)` for an odd denominator.
///
/// For negative `x` the result is the real root: negative when the numerator
/// is odd, positive when it is even. Panics in debug builds if `den` is even.
pub fn odd_root_pow(x: f64, num: u64, den: u64) -> f64 {
    debug_assert!(den % 2 == 1, "real power of a negative base needs an odd denominator");
    let r = num as f64 / den as f64;
    if x >= 0.0 {
        x.powf(r)
    } else if num % 2 == 1 {
        -(-x).powf(r)
    } else {
        (-x).powf(r)
    }
}

/// Sign-preserving power `x^e` for an odd-quotient exponent.
pub fn signed_pow(x: f64, e: OddRational) -> f64 {
    odd_root_pow(x, e.num, e.den)
}

/// `x^(e+1)` for an odd quotient `e`; the numerator of `e+1` is even, so the
/// result is nonnegative for any real `x`.
pub fn pow_succ(x: f64, e: OddRational) -> f64 {
    odd_root_pow(x, e.num + e.den, e.den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_reduces() {
        let a: OddRational = "5/3".parse().unwrap();
        assert_eq!((a.numerator(), a.denominator()), (5, 3));
        let b: OddRational = "9/3".parse().unwrap();
        assert_eq!(b, OddRational::new(3, 1).unwrap());
        assert_eq!("7".parse::<OddRational>().unwrap().to_string(), "7");
    }

    #[test]
    fn rejects_even_terms() {
        assert_eq!("2/3".parse::<OddRational>(), Err(RationalError::NotOdd { num: 2, den: 3 }));
        assert!(matches!("1/2".parse::<OddRational>(), Err(RationalError::NotOdd { .. })));
        // 6/2 reduces to 3, which is admissible
        assert!("6/2".parse::<OddRational>().is_ok());
        assert!(matches!("0/3".parse::<OddRational>(), Err(RationalError::Malformed(_))));
        assert!(matches!("x".parse::<OddRational>(), Err(RationalError::Malformed(_))));
        assert!(matches!("-1/3".parse::<OddRational>(), Err(RationalError::Malformed(_))));
        assert!(matches!(
            "1000001/3".parse::<OddRational>(),
            Err(RationalError::OutOfRange { .. })
        ));
    }

    #[test]
    fn exact_product_check() {
        let r = |s: &str| s.parse::<OddRational>().unwrap();
        assert!(r("1/3").equals_product(r("1"), r("1/3")));
        assert!(!r("9/5").equals_product(r("5/3"), r("1/7")));
        assert!(r("5/21").equals_product(r("5/3"), r("1/7")));
        assert!(r("1").equals_product(r("1"), r("1")));
        assert_eq!(r("5/3").checked_mul(r("3/5")), Some(OddRational::ONE));
    }

    #[test]
    fn signed_powers() {
        let third = OddRational::new(1, 3).unwrap();
        assert!((signed_pow(-8.0, third) + 2.0).abs() < 1e-12);
        assert!((signed_pow(27.0, third) - 3.0).abs() < 1e-12);
        // (-8)^(4/3) = 16
        assert!((pow_succ(-8.0, third) - 16.0).abs() < 1e-10);
        assert_eq!(third.reciprocal_integer(), Some(3));
        assert_eq!(OddRational::new(5, 3).unwrap().reciprocal_integer(), None);
    }
}
