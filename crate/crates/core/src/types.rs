//! Shared domain primitives: player ids, node values, actions.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Seat index of a player within one game instance.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct PlayerId(pub usize);

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

/// A node or observation value. Carried as text; numeric interpretation is
/// parsed on demand because backends emit text while games need numbers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Value(pub String);

impl Value {
    pub fn text(text: impl Into<String>) -> Self {
        Value(text.into())
    }

    /// Canonical numeric formatting: integers render without a decimal point.
    pub fn number(x: f64) -> Self {
        if x.fract() == 0.0 && x.abs() < 1e15 {
            Value(format!("{}", x as i64))
        } else {
            Value(format!("{x}"))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn as_number(&self) -> Option<f64> {
        self.0.trim().parse::<f64>().ok()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Placeholder for fields with no history yet (round zero).
    pub fn none() -> Self {
        Value("none".into())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value(s.to_string())
    }
}

/// An action submitted by an agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value")]
pub enum Action {
    /// Integer choice (G0.8A number, SAG bid).
    Number(i64),
    /// Free-text clue (Undercover clue phase).
    Clue(String),
    /// Vote for a player (Undercover vote phase).
    Vote(PlayerId),
}

impl Action {
    pub fn as_number(&self) -> Option<i64> {
        match self {
            Action::Number(n) => Some(*n),
            _ => None,
        }
    }

    /// Value-space rendering used for prediction/actual comparison and logs.
    pub fn to_value(&self) -> Value {
        match self {
            Action::Number(n) => Value::number(*n as f64),
            Action::Clue(s) => Value::text(s.clone()),
            Action::Vote(p) => Value::text(p.to_string()),
        }
    }
}

/// Splitmix64-style mixing used to derive independent sub-seeds from a base
/// seed. Stateless derivation keeps tie-breaks reproducible per round.
pub fn derive_seed(base: u64, salt_a: u64, salt_b: u64) -> u64 {
    let mut z = base
        .wrapping_add(salt_a.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(salt_b.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_numeric_round_trip() {
        assert_eq!(Value::number(32.0).as_str(), "32");
        assert_eq!(Value::number(32.5).as_str(), "32.5");
        assert_eq!(Value::text("26").as_number(), Some(26.0));
        assert_eq!(Value::text("abc").as_number(), None);
    }

    #[test]
    fn derive_seed_is_stable() {
        let a = derive_seed(42, 1, 2);
        let b = derive_seed(42, 1, 2);
        assert_eq!(a, b);
        assert_ne!(a, derive_seed(42, 2, 1));
    }
}
