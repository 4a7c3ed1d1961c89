use std::fmt;

use serde::{Deserialize, Serialize};

use crate::numeric::fmt_num;

/// One named verification outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub max_deviation: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, max_deviation: f64) -> Self {
        Self {
            name: name.into(),
            passed,
            max_deviation,
        }
    }

    /// Passes when `deviation <= tolerance`.
    pub fn within(name: impl Into<String>, deviation: f64, tolerance: f64) -> Self {
        Self::new(name, deviation <= tolerance, deviation)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} max_deviation={}",
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            fmt_num(self.max_deviation)
        )
    }
}

/// A list of checks rendered one per line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}
