//! Named pass/fail checks with the observed and expected quantities.

use std::fmt::Display;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Audit {
    pub name: String,
    pub pass: bool,
    pub observed: String,
    pub expected: String,
}

impl Audit {
    /// Passes iff `observed == expected`.
    pub fn compare<T: PartialEq + Display>(name: impl Into<String>, observed: T, expected: T) -> Self {
        Audit {
            name: name.into(),
            pass: observed == expected,
            observed: observed.to_string(),
            expected: expected.to_string(),
        }
    }

    pub fn check(
        name: impl Into<String>,
        pass: bool,
        observed: impl Into<String>,
        expected: impl Into<String>,
    ) -> Self {
        Audit {
            name: name.into(),
            pass,
            observed: observed.into(),
            expected: expected.into(),
        }
    }
}

pub fn all_pass(audits: &[Audit]) -> bool {
    audits.iter().all(|a| a.pass)
}
