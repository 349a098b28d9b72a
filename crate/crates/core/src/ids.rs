//! Numeric identifiers carried as decimal strings on the wire.

use alloc::string::{String, ToString};
use core::fmt;
use core::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

macro_rules! decimal_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u64);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(Error::InvalidId(s.to_string()));
                }
                s.parse::<u64>().map($name).map_err(|_| Error::InvalidId(s.to_string()))
            }
        }

        impl From<u64> for $name {
            fn from(v: u64) -> Self {
                $name(v)
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                s.parse().map_err(de::Error::custom)
            }
        }
    };
}

decimal_id!(
    /// Snowflake tweet id. Numeric order follows creation time.
    TweetId
);
decimal_id!(
    /// Platform user id.
    UserId
);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimal_only() {
        assert_eq!("1234".parse::<TweetId>().unwrap(), TweetId(1234));
        assert!("".parse::<TweetId>().is_err());
        assert!("-3".parse::<UserId>().is_err());
        assert!("+3".parse::<UserId>().is_err());
        assert!("18446744073709551616".parse::<UserId>().is_err());
    }

    #[test]
    fn serde_as_string() {
        let json = serde_json::to_string(&UserId(42)).unwrap();
        assert_eq!(json, "\"42\"");
        let back: UserId = serde_json::from_str(&json).unwrap();
        assert_eq!(back, UserId(42));
    }
}
