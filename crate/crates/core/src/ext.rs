//! Extended non-negative integers: finite distances plus `∞`.

use std::fmt;
use std::ops::Add;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A distance value that may be infinite.
///
/// Ordering places every finite value below [`Ext::Inf`], so `Inf > θ` holds
/// for every finite `θ` and `Inf == Inf`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ext {
    Fin(u64),
    Inf,
}

impl Ext {
    pub const ZERO: Ext = Ext::Fin(0);

    pub fn is_finite(self) -> bool {
        matches!(self, Ext::Fin(_))
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            Ext::Fin(v) => Some(v),
            Ext::Inf => None,
        }
    }

    /// `self > bound` for a finite bound.
    pub fn exceeds(self, bound: u64) -> bool {
        self > Ext::Fin(bound)
    }

    /// Absolute difference, `None` when exactly one side is infinite.
    pub fn abs_diff(self, other: Ext) -> Option<u64> {
        match (self, other) {
            (Ext::Fin(a), Ext::Fin(b)) => Some(a.abs_diff(b)),
            (Ext::Inf, Ext::Inf) => Some(0),
            _ => None,
        }
    }

    pub fn from_raw(d: u32) -> Ext {
        if d == crate::metric::UNREACHED {
            Ext::Inf
        } else {
            Ext::Fin(d as u64)
        }
    }
}

impl Add for Ext {
    type Output = Ext;

    fn add(self, rhs: Ext) -> Ext {
        match (self, rhs) {
            (Ext::Fin(a), Ext::Fin(b)) => Ext::Fin(a.saturating_add(b)),
            _ => Ext::Inf,
        }
    }
}

impl From<u64> for Ext {
    fn from(v: u64) -> Self {
        Ext::Fin(v)
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::Fin(v) => write!(f, "{v}"),
            Ext::Inf => f.write_str("inf"),
        }
    }
}

impl Serialize for Ext {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Ext::Fin(v) => s.serialize_u64(*v),
            Ext::Inf => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Ext {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct ExtVisitor;

        impl Visitor<'_> for ExtVisitor {
            type Value = Ext;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a non-negative integer, \"inf\" or null")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Ext, E> {
                Ok(Ext::Fin(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Ext, E> {
                u64::try_from(v)
                    .map(Ext::Fin)
                    .map_err(|_| E::custom("negative distance"))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Ext, E> {
                match v {
                    "inf" | "Infinity" | "∞" => Ok(Ext::Inf),
                    _ => Err(E::custom(format!("bad distance {v:?}"))),
                }
            }

            fn visit_unit<E: de::Error>(self) -> Result<Ext, E> {
                Ok(Ext::Inf)
            }

            fn visit_none<E: de::Error>(self) -> Result<Ext, E> {
                Ok(Ext::Inf)
            }
        }

        d.deserialize_any(ExtVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_puts_infinity_last() {
        assert!(Ext::Inf > Ext::Fin(u64::MAX));
        assert!(Ext::Inf.exceeds(121));
        assert!(!Ext::Fin(121).exceeds(121));
        assert_eq!(Ext::Inf, Ext::Inf);
    }

    #[test]
    fn arithmetic_absorbs_infinity() {
        assert_eq!(Ext::Fin(3) + Ext::Inf, Ext::Inf);
        assert_eq!(Ext::Fin(3) + Ext::Fin(4), Ext::Fin(7));
        assert_eq!(Ext::Inf.abs_diff(Ext::Inf), Some(0));
        assert_eq!(Ext::Inf.abs_diff(Ext::Fin(1)), None);
    }

    #[test]
    fn json_round_trip() {
        let v = vec![Ext::Fin(0), Ext::Inf, Ext::Fin(3146)];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"[0,"inf",3146]"#);
        let back: Vec<Ext> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        let null: Vec<Ext> = serde_json::from_str("[null]").unwrap();
        assert_eq!(null, vec![Ext::Inf]);
    }
}
