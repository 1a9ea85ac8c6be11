//! Extended nonnegative reals, the cost algebra's answer domain.
//!
//! Arithmetic follows the measure-theoretic conventions on [0, inf]:
//! addition saturates at infinity and 0 * inf = 0.

use std::fmt;
use std::ops::{Add, Mul};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Invariant: the inner value is >= 0 or +inf, never NaN or negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Weight(f64);

impl Weight {
    pub const ZERO: Weight = Weight(0.0);
    pub const ONE: Weight = Weight(1.0);
    pub const INF: Weight = Weight(f64::INFINITY);

    /// Panics on NaN or negative input: those indicate a logic error, not
    /// bad user data, which callers validate before converting.
    pub fn new(x: f64) -> Weight {
        assert!(x >= 0.0 && !x.is_nan(), "weight must be a nonnegative real, got {x}");
        Weight(x)
    }

    pub fn checked(x: f64) -> Option<Weight> {
        (x >= 0.0 && !x.is_nan()).then_some(Weight(x))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// w^k with w^0 = 1 even at w = 0, matching the empty product.
    pub fn pow(self, k: u32) -> Weight {
        if k == 0 {
            Weight::ONE
        } else {
            Weight(self.0.powi(k as i32))
        }
    }

    /// Absolute difference, with inf - inf = 0 so a stabilized infinite
    /// iterate counts as unchanged.
    pub fn delta(self, other: Weight) -> f64 {
        if self.0.is_infinite() && other.0.is_infinite() {
            0.0
        } else {
            (self.0 - other.0).abs()
        }
    }

    pub fn min(self, other: Weight) -> Weight {
        Weight(self.0.min(other.0))
    }

    pub fn max(self, other: Weight) -> Weight {
        Weight(self.0.max(other.0))
    }
}

impl Add for Weight {
    type Output = Weight;

    fn add(self, rhs: Weight) -> Weight {
        Weight(self.0 + rhs.0)
    }
}

impl Mul for Weight {
    type Output = Weight;

    fn mul(self, rhs: Weight) -> Weight {
        if self.0 == 0.0 || rhs.0 == 0.0 {
            Weight::ZERO
        } else {
            Weight(self.0 * rhs.0)
        }
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            write!(f, "inf")
        } else if self.0.fract() == 0.0 && self.0.abs() < 1e15 {
            write!(f, "{}", self.0 as i64)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

// JSON has no infinity literal, so infinite weights serialize as the
// string "inf" and finite ones as plain numbers.
impl Serialize for Weight {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Weight {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Weight, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Num(x) => {
                Weight::checked(x).ok_or_else(|| D::Error::custom("weight must be >= 0"))
            }
            Repr::Text(s) if s == "inf" => Ok(Weight::INF),
            Repr::Text(s) => Err(D::Error::custom(format!("not a weight: {s:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_times_infinity_is_zero() {
        assert_eq!(Weight::ZERO * Weight::INF, Weight::ZERO);
        assert_eq!(Weight::INF * Weight::ZERO, Weight::ZERO);
        assert_eq!(Weight::new(2.0) * Weight::INF, Weight::INF);
    }

    #[test]
    fn addition_saturates() {
        assert_eq!(Weight::INF + Weight::new(3.0), Weight::INF);
        assert_eq!((Weight::new(1.0) + Weight::new(0.5)).value(), 1.5);
    }

    #[test]
    fn stabilized_infinities_have_zero_delta() {
        assert_eq!(Weight::INF.delta(Weight::INF), 0.0);
        assert_eq!(Weight::new(1.0).delta(Weight::INF), f64::INFINITY);
        assert_eq!(Weight::new(1.0).delta(Weight::new(1.5)), 0.5);
    }

    #[test]
    fn zero_to_the_zero_is_one() {
        assert_eq!(Weight::ZERO.pow(0), Weight::ONE);
        assert_eq!(Weight::ZERO.pow(3), Weight::ZERO);
        assert_eq!(Weight::new(2.0).pow(3).value(), 8.0);
    }

    #[test]
    fn json_uses_inf_string_for_infinity() {
        assert_eq!(serde_json::to_string(&Weight::INF).unwrap(), "\"inf\"");
        assert_eq!(serde_json::to_string(&Weight::new(2.5)).unwrap(), "2.5");
        assert_eq!(serde_json::from_str::<Weight>("\"inf\"").unwrap(), Weight::INF);
        assert_eq!(serde_json::from_str::<Weight>("0.25").unwrap(), Weight::new(0.25));
        assert!(serde_json::from_str::<Weight>("-1").is_err());
    }
}
