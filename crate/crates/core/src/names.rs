//! Identifier newtypes and the fresh-name supply.

use std::fmt;

use serde::{Deserialize, Serialize};

macro_rules! name_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Self {
                Self(s.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }
    };
}

name_type!(
    /// A participant identifier such as `A` or `B`.
    Participant
);
name_type!(
    /// Deposit names, deposit variables, active-contract names and
    /// advertisement handles. They share one namespace.
    Name
);
name_type!(SecretName);
name_type!(
    /// A recursion variable, i.e. the left-hand side of a defining equation.
    RecVar
);

/// Monotone source of fresh names. Names are never reused within a supply.
///
/// A fresh name is the base name with any previous `#n` suffix stripped and a
/// new `#n` appended; `#` cannot occur in source identifiers, so fresh names
/// never clash with names written in a program.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NameSupply {
    next: u64,
}

impl NameSupply {
    pub fn new() -> Self {
        Self::default()
    }

    /// Starts the counter at `next`; used to namespace independent runs.
    pub fn starting_at(next: u64) -> Self {
        Self { next }
    }

    pub fn peek(&self) -> u64 {
        self.next
    }

    pub fn fresh(&mut self, base: &str) -> String {
        let stem = base.split('#').next().unwrap_or(base);
        let n = self.next;
        self.next += 1;
        format!("{stem}#{n}")
    }

    pub fn fresh_name(&mut self, base: &str) -> Name {
        Name(self.fresh(base))
    }

    pub fn fresh_secret(&mut self, base: &SecretName) -> SecretName {
        SecretName(self.fresh(base.as_str()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_names_strip_previous_suffix() {
        let mut s = NameSupply::new();
        assert_eq!(s.fresh("a"), "a#0");
        assert_eq!(s.fresh("a#0"), "a#1");
        assert_eq!(s.fresh("x"), "x#2");
        assert_eq!(s.peek(), 3);
    }
}
