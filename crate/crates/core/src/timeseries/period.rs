use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A calendar quarter. Ordered by `(year, quarter)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Period {
    year: i32,
    quarter: u8,
}

impl Period {
    pub fn new(year: i32, quarter: u8) -> Result<Self> {
        if !(1..=4).contains(&quarter) {
            return Err(Error::InvalidQuarter(quarter as i64));
        }
        Ok(Period { year, quarter })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn quarter(self) -> u8 {
        self.quarter
    }

    /// Quarters elapsed since year 0 Q1; consecutive quarters differ by one.
    pub fn ordinal(self) -> i64 {
        self.year as i64 * 4 + (self.quarter as i64 - 1)
    }

    pub fn from_ordinal(ordinal: i64) -> Self {
        Period {
            year: ordinal.div_euclid(4) as i32,
            quarter: (ordinal.rem_euclid(4) + 1) as u8,
        }
    }

    pub fn advance(self, quarters: i64) -> Self {
        Self::from_ordinal(self.ordinal() + quarters)
    }

    pub fn succ(self) -> Self {
        self.advance(1)
    }

    /// Signed number of quarters from `self` to `other`.
    pub fn quarters_until(self, other: Period) -> i64 {
        other.ordinal() - self.ordinal()
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Q{}", self.year, self.quarter)
    }
}

impl FromStr for Period {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let bad = || Error::ParsePeriod(s.to_string());
        let (y, q) = t.split_once(['Q', 'q']).ok_or_else(bad)?;
        if y.is_empty() || q.len() != 1 {
            return Err(bad());
        }
        let year: i32 = y.parse().map_err(|_| bad())?;
        let quarter: u8 = q.parse().map_err(|_| bad())?;
        Period::new(year, quarter).map_err(|_| bad())
    }
}

impl Serialize for Period {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Period {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn q4_rolls_over() {
        let p = Period::new(2008, 4).unwrap();
        assert_eq!(p.succ(), Period::new(2009, 1).unwrap());
        assert_eq!(Period::new(2009, 1).unwrap().advance(-1), p);
    }

    #[test]
    fn parse_and_display() {
        let p: Period = "2023Q2".parse().unwrap();
        assert_eq!((p.year(), p.quarter()), (2023, 2));
        assert_eq!(p.to_string(), "2023Q2");
        assert!("2023Q5".parse::<Period>().is_err());
        assert!("2023".parse::<Period>().is_err());
        assert!("Q1".parse::<Period>().is_err());
        assert!(Period::new(2000, 0).is_err());
    }

    proptest! {
        #[test]
        fn order_matches_successor_arithmetic(y in -3000i32..3000, q in 1u8..=4, k in 0i64..400) {
            let p = Period::new(y, q).unwrap();
            let r = p.advance(k);
            prop_assert_eq!(p.quarters_until(r), k);
            prop_assert_eq!(p <= r, true);
            prop_assert_eq!(k == 0, p == r);
            prop_assert_eq!(r.advance(-k), p);
        }
    }
}
