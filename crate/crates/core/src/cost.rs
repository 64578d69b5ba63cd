//! Edge weights and path distances with an explicit infinity.

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use std::fmt;
use std::ops::Add;

/// A non-negative cost, or the `Infinite` sentinel for untraversable / unreachable.
///
/// Variant order makes every finite value compare below `Infinite`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub enum Cost {
    Finite(f64),
    Infinite,
}

impl Cost {
    pub const ZERO: Cost = Cost::Finite(0.0);
    pub const ONE: Cost = Cost::Finite(1.0);

    pub fn is_finite(self) -> bool {
        matches!(self, Cost::Finite(_))
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Cost::Finite(v) => Some(v),
            Cost::Infinite => None,
        }
    }

    /// True iff finite and `<= bound`.
    pub fn within(self, bound: f64) -> bool {
        matches!(self, Cost::Finite(v) if v <= bound)
    }
}

impl Add for Cost {
    type Output = Cost;

    fn add(self, rhs: Cost) -> Cost {
        match (self, rhs) {
            (Cost::Finite(a), Cost::Finite(b)) => Cost::Finite(a + b),
            _ => Cost::Infinite,
        }
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cost::Finite(v) => write!(f, "{v}"),
            Cost::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Cost {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cost::Finite(v) => s.serialize_f64(*v),
            Cost::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Cost {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct CostVisitor;

        impl Visitor<'_> for CostVisitor {
            type Value = Cost;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or the string \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Cost, E> {
                Ok(Cost::Finite(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Cost, E> {
                Ok(Cost::Finite(v as f64))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Cost, E> {
                Ok(Cost::Finite(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Cost, E> {
                if v == "inf" {
                    Ok(Cost::Infinite)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }

        d.deserialize_any(CostVisitor)
    }
}
