//! Robbin-Salamon and Conley-Zehnder indices: half-integer arithmetic,
//! symplectic paths, crossing detection, closed forms and the numerical
//! pipelines along the isolated periodic orbits.

mod closed_form;
mod crossing;
mod frames;
mod numeric;
mod path;

use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use closed_form::*;
pub use crossing::*;
pub use frames::*;
pub use numeric::*;
pub use path::*;

use crate::error::Error;

/// An element of `(1/2) Z`, stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct HalfInteger {
    doubled: i64,
}

impl HalfInteger {
    pub const ZERO: HalfInteger = HalfInteger { doubled: 0 };

    pub fn from_int(n: i64) -> Self {
        HalfInteger { doubled: 2 * n }
    }

    pub fn from_doubled(d: i64) -> Self {
        HalfInteger { doubled: d }
    }

    pub fn doubled(self) -> i64 {
        self.doubled
    }

    pub fn is_integer(self) -> bool {
        self.doubled % 2 == 0
    }

    pub fn to_f64(self) -> f64 {
        self.doubled as f64 / 2.0
    }

    /// The integer value, if there is one.
    pub fn as_integer(self) -> Option<i64> {
        self.is_integer().then_some(self.doubled / 2)
    }
}

impl Add for HalfInteger {
    type Output = HalfInteger;
    fn add(self, o: HalfInteger) -> HalfInteger {
        HalfInteger { doubled: self.doubled + o.doubled }
    }
}

impl AddAssign for HalfInteger {
    fn add_assign(&mut self, o: HalfInteger) {
        self.doubled += o.doubled;
    }
}

impl Sub for HalfInteger {
    type Output = HalfInteger;
    fn sub(self, o: HalfInteger) -> HalfInteger {
        HalfInteger { doubled: self.doubled - o.doubled }
    }
}

impl Neg for HalfInteger {
    type Output = HalfInteger;
    fn neg(self) -> HalfInteger {
        HalfInteger { doubled: -self.doubled }
    }
}

impl std::iter::Sum for HalfInteger {
    fn sum<I: Iterator<Item = HalfInteger>>(iter: I) -> HalfInteger {
        iter.fold(HalfInteger::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for HalfInteger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.doubled / 2)
        } else {
            write!(f, "{}/2", self.doubled)
        }
    }
}

impl FromStr for HalfInteger {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::InvalidArgument(format!("not a half-integer: {s:?}"));
        match s.trim().split_once('/') {
            None => s.trim().parse::<i64>().map(HalfInteger::from_int).map_err(|_| bad()),
            Some((num, den)) => {
                if den.trim() != "2" {
                    return Err(bad());
                }
                num.trim().parse::<i64>().map(HalfInteger::from_doubled).map_err(|_| bad())
            }
        }
    }
}

impl Serialize for HalfInteger {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for HalfInteger {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_and_parse() {
        let h = HalfInteger::from_doubled(63);
        assert_eq!(h.to_string(), "63/2");
        assert_eq!("63/2".parse::<HalfInteger>().unwrap(), h);
        assert_eq!(HalfInteger::from_int(-4).to_string(), "-4");
        assert_eq!("-4".parse::<HalfInteger>().unwrap(), HalfInteger::from_int(-4));
        assert_eq!(HalfInteger::from_doubled(-3).to_string(), "-3/2");
        assert!("1/3".parse::<HalfInteger>().is_err());
    }

    #[test]
    fn arithmetic() {
        let a = HalfInteger::from_doubled(3);
        let b = HalfInteger::from_doubled(5);
        assert_eq!(a + b, HalfInteger::from_int(4));
        assert_eq!(b - a, HalfInteger::from_int(1));
        assert_eq!(-a, HalfInteger::from_doubled(-3));
        assert_eq!((a + b).as_integer(), Some(4));
        assert_eq!(a.as_integer(), None);
    }

    #[test]
    fn serializes_as_fraction_string() {
        let v = serde_json::to_string(&HalfInteger::from_doubled(63)).unwrap();
        assert_eq!(v, "\"63/2\"");
        let back: HalfInteger = serde_json::from_str(&v).unwrap();
        assert_eq!(back.doubled(), 63);
    }
}
