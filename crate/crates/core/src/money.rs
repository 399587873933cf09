//! Integer satoshi amounts.

use std::fmt;
use std::iter::Sum;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SATS_PER_BTC: u64 = 100_000_000;
const BTC_DECIMALS: usize = 8;

/// A non-negative amount in satoshi.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Money(pub u64);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MoneyError {
    #[error("malformed amount `{0}`")]
    Malformed(String),
    #[error("amount `{0}` has more than 8 decimal places")]
    TooPrecise(String),
    #[error("amount `{0}` does not fit in 64 bits of satoshi")]
    TooLarge(String),
}

impl Money {
    pub const ZERO: Money = Money(0);

    pub fn sats(self) -> u64 {
        self.0
    }

    pub fn from_btc(btc: u64) -> Option<Money> {
        btc.checked_mul(SATS_PER_BTC).map(Money)
    }

    /// Parses a BTC literal such as `2`, `0.05` or `1.00000001`.
    pub fn parse_btc(text: &str) -> Result<Money, MoneyError> {
        let (whole, frac) = match text.split_once('.') {
            Some((w, f)) => (w, f),
            None => (text, ""),
        };
        let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
        if !digits(whole) || (text.contains('.') && !digits(frac)) {
            return Err(MoneyError::Malformed(text.to_owned()));
        }
        if frac.len() > BTC_DECIMALS {
            return Err(MoneyError::TooPrecise(text.to_owned()));
        }
        let too_large = || MoneyError::TooLarge(text.to_owned());
        let whole: u64 = whole.parse().map_err(|_| too_large())?;
        let mut frac_sats: u64 = 0;
        if !frac.is_empty() {
            let padded = format!("{frac:0<8}");
            frac_sats = padded.parse().map_err(|_| MoneyError::Malformed(text.to_owned()))?;
        }
        whole
            .checked_mul(SATS_PER_BTC)
            .and_then(|w| w.checked_add(frac_sats))
            .map(Money)
            .ok_or_else(too_large)
    }

    pub fn checked_add(self, other: Money) -> Option<Money> {
        self.0.checked_add(other.0).map(Money)
    }

    pub fn checked_sub(self, other: Money) -> Option<Money> {
        self.0.checked_sub(other.0).map(Money)
    }

    pub fn checked_sum<I: IntoIterator<Item = Money>>(items: I) -> Option<Money> {
        items.into_iter().try_fold(Money::ZERO, Money::checked_add)
    }

    pub fn as_btc_f64(self) -> f64 {
        self.0 as f64 / SATS_PER_BTC as f64
    }
}

/// Panics on overflow; use [`Money::checked_sum`] where overflow is reachable.
impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        Money::checked_sum(iter).expect("money overflow")
    }
}

/// Formats as a BTC literal with trailing zeros trimmed; reparses exactly.
impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let whole = self.0 / SATS_PER_BTC;
        let frac = self.0 % SATS_PER_BTC;
        if frac == 0 {
            write!(f, "{whole}")
        } else {
            let s = format!("{frac:08}");
            write!(f, "{whole}.{}", s.trim_end_matches('0'))
        }
    }
}

impl FromStr for Money {
    type Err = MoneyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Money::parse_btc(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_btc_literals_exactly() {
        assert_eq!(Money::parse_btc("1").unwrap(), Money(100_000_000));
        assert_eq!(Money::parse_btc("0.05").unwrap(), Money(5_000_000));
        assert_eq!(Money::parse_btc("2.00000001").unwrap(), Money(200_000_001));
        assert_eq!(Money::parse_btc("0").unwrap(), Money::ZERO);
    }

    #[test]
    fn rejects_excess_precision_and_garbage() {
        assert!(matches!(Money::parse_btc("0.000000001"), Err(MoneyError::TooPrecise(_))));
        assert!(matches!(Money::parse_btc("1."), Err(MoneyError::Malformed(_))));
        assert!(matches!(Money::parse_btc(".5"), Err(MoneyError::Malformed(_))));
        assert!(matches!(Money::parse_btc("-1"), Err(MoneyError::Malformed(_))));
        assert!(matches!(
            Money::parse_btc("999999999999999"),
            Err(MoneyError::TooLarge(_))
        ));
    }

    #[test]
    fn display_round_trips() {
        for sats in [0u64, 1, 5_000_000, 100_000_000, 123_456_789, 2_100_000_000_000_000] {
            let m = Money(sats);
            assert_eq!(Money::parse_btc(&m.to_string()).unwrap(), m);
        }
        assert_eq!(Money(150_000_000).to_string(), "1.5");
    }

    #[test]
    fn checked_arithmetic() {
        assert_eq!(Money(u64::MAX).checked_add(Money(1)), None);
        assert_eq!(Money::checked_sum([Money(1), Money(2)]), Some(Money(3)));
        assert_eq!(Money(1).checked_sub(Money(2)), None);
    }
}
