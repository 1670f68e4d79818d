//! Exchange-rate identifiers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Three-letter codes of the 33 underlying assets: currencies, stock
/// indexes, oil and precious metals.
pub const ASSET_UNIVERSE: [&str; 33] = [
    // currencies
    "AUD", "CAD", "CHF", "CZK", "DKK", "EUR", "GBP", "HKD", "HUF", "JPY", "MXN", "NOK", "NZD",
    "PLN", "SEK", "SGD", "TRY", "USD", "ZAR",
    // stock market indexes
    "AUX", "ETX", "FRX", "GRX", "HKX", "JPX", "NSX", "SPX", "UDX", "UKX",
    // commodities
    "BCO", "WTI", "XAG", "XAU",
];

/// The 66 exchange rates of the reference study, in alphabetical order.
pub const STUDIED_RATES: [&str; 66] = [
    "AUD/CAD", "AUD/CHF", "AUD/JPY", "AUD/NZD", "AUD/USD", "AUX/AUD", "BCO/USD", "CAD/CHF",
    "CAD/JPY", "CHF/JPY", "ETX/EUR", "EUR/AUD", "EUR/CAD", "EUR/CHF", "EUR/CZK", "EUR/DKK",
    "EUR/GBP", "EUR/HUF", "EUR/JPY", "EUR/NOK", "EUR/NZD", "EUR/PLN", "EUR/SEK", "EUR/TRY",
    "EUR/USD", "FRX/EUR", "GBP/AUD", "GBP/CAD", "GBP/CHF", "GBP/JPY", "GBP/NZD", "GBP/USD",
    "GRX/EUR", "HKX/HKD", "JPX/JPY", "NSX/USD", "NZD/CAD", "NZD/CHF", "NZD/JPY", "NZD/USD",
    "SGD/JPY", "SPX/USD", "UDX/USD", "UKX/GBP", "USD/CAD", "USD/CHF", "USD/CZK", "USD/DKK",
    "USD/HKD", "USD/HUF", "USD/JPY", "USD/MXN", "USD/NOK", "USD/PLN", "USD/SEK", "USD/SGD",
    "USD/TRY", "USD/ZAR", "WTI/USD", "XAG/USD", "XAU/AUD", "XAU/CHF", "XAU/EUR", "XAU/GBP",
    "XAU/USD", "ZAR/JPY",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssetError {
    #[error("malformed rate symbol `{0}` (expected XXX/YYY or XXXYYY)")]
    Malformed(String),
    #[error("unknown asset leg `{leg}` in `{code}`")]
    UnknownLeg { code: String, leg: String },
    #[error("rate `{0}` has identical legs")]
    SameLegs(String),
}

/// A rate symbol such as `EUR/USD`: base leg priced in the quote leg.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AssetId {
    base: [u8; 3],
    quote: [u8; 3],
}

fn leg(code: &str, s: &str) -> Result<[u8; 3], AssetError> {
    if !ASSET_UNIVERSE.contains(&s) {
        return Err(AssetError::UnknownLeg { code: code.to_string(), leg: s.to_string() });
    }
    let b = s.as_bytes();
    Ok([b[0], b[1], b[2]])
}

impl AssetId {
    pub fn new(base: &str, quote: &str) -> Result<Self, AssetError> {
        let code = format!("{base}/{quote}");
        if base == quote {
            return Err(AssetError::SameLegs(code));
        }
        Ok(Self { base: leg(&code, base)?, quote: leg(&code, quote)? })
    }

    pub fn base(&self) -> &str {
        std::str::from_utf8(&self.base).expect("ascii leg")
    }

    pub fn quote(&self) -> &str {
        std::str::from_utf8(&self.quote).expect("ascii leg")
    }

    /// `EURUSD` form used in file names.
    pub fn compact(&self) -> String {
        format!("{}{}", self.base(), self.quote())
    }

    /// The first `n` studied rates, used to label synthetic universes.
    pub fn studied(n: usize) -> Vec<AssetId> {
        STUDIED_RATES.iter().take(n).map(|s| s.parse().expect("valid table symbol")).collect()
    }
}

impl FromStr for AssetId {
    type Err = AssetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (base, quote) = match (s.len(), s.as_bytes().get(3)) {
            (7, Some(b'/')) => (&s[..3], &s[4..]),
            (6, _) if s.is_ascii() => (&s[..3], &s[3..]),
            _ => return Err(AssetError::Malformed(s.to_string())),
        };
        let upper = |x: &str| x.bytes().all(|b| b.is_ascii_uppercase());
        if !upper(base) || !upper(quote) {
            return Err(AssetError::Malformed(s.to_string()));
        }
        AssetId::new(base, quote)
    }
}

impl TryFrom<String> for AssetId {
    type Error = AssetError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<AssetId> for String {
    fn from(value: AssetId) -> Self {
        value.to_string()
    }
}

impl fmt::Display for AssetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.base(), self.quote())
    }
}

impl fmt::Debug for AssetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AssetId({self})")
    }
}
