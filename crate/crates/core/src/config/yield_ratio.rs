use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Exact non-negative ratio of output base units to input base units.
///
/// Written as an integer (`"2"`), a finite decimal (`"0.2"`) or a fraction
/// (`"2/7"`). The text form is canonical: decimals when the reduced
/// denominator has only factors 2 and 5, fractions otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YieldRatio(Ratio<u64>);

impl YieldRatio {
    pub const ONE: YieldRatio = YieldRatio(Ratio::new_raw(1, 1));

    pub fn new(numer: u64, denom: u64) -> Option<YieldRatio> {
        (denom != 0).then(|| YieldRatio(Ratio::new(numer, denom)))
    }

    pub fn numer(&self) -> u64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> u64 {
        *self.0.denom()
    }

    /// `output <= ratio * input`, evaluated exactly.
    pub fn allows(&self, output: u64, input: u64) -> bool {
        output as u128 * self.denom() as u128 <= self.numer() as u128 * input as u128
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid yield ratio `{0}`")]
pub struct YieldParseError(String);

impl FromStr for YieldRatio {
    type Err = YieldParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || YieldParseError(s.to_string());
        let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
        if let Some((n, d)) = s.split_once('/') {
            if !digits(n) || !digits(d) {
                return Err(err());
            }
            let (n, d) = (n.parse().map_err(|_| err())?, d.parse().map_err(|_| err())?);
            return YieldRatio::new(n, d).ok_or_else(err);
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if !digits(int) || (s.contains('.') && !digits(frac)) || frac.len() > 18 {
            return Err(err());
        }
        let denom = 10u64.pow(frac.len() as u32);
        let numer = format!("{int}{frac}").parse::<u64>().map_err(|_| err())?;
        YieldRatio::new(numer, denom).ok_or_else(err)
    }
}

impl fmt::Display for YieldRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n, d) = (self.numer(), self.denom());
        if d == 1 {
            return write!(f, "{n}");
        }
        let mut rest = d;
        for p in [2, 5] {
            while rest % p == 0 {
                rest /= p;
            }
        }
        if rest != 1 {
            return write!(f, "{n}/{d}");
        }
        // scale to a power of ten
        let mut scale = 1u128;
        let mut places = 0;
        while !scale.is_multiple_of(d as u128) {
            scale *= 10;
            places += 1;
        }
        let scaled = n as u128 * (scale / d as u128);
        let int = scaled / scale;
        let frac = scaled % scale;
        write!(f, "{int}.{frac:0places$}")
    }
}

impl Serialize for YieldRatio {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for YieldRatio {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(u64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Int(n) => Ok(YieldRatio(Ratio::from_integer(n))),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}
