use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{InterchangeError, Result};

/// Issues zero-padded, strictly increasing control numbers.
///
/// Callers must serialize access to one counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlCounter {
    last_issued: u64,
    width: u8,
}

impl Default for ControlCounter {
    fn default() -> Self {
        Self::new()
    }
}

impl ControlCounter {
    /// A fresh nine-digit interchange counter.
    pub fn new() -> Self {
        Self::with_width(9)
    }

    /// `width` is clamped to 1..=18 digits.
    pub fn with_width(width: u8) -> Self {
        Self {
            last_issued: 0,
            width: width.clamp(1, 18),
        }
    }

    pub fn starting_after(mut self, last_issued: u64) -> Self {
        self.last_issued = last_issued;
        self
    }

    pub fn last_issued(&self) -> u64 {
        self.last_issued
    }

    pub fn limit(&self) -> u64 {
        10u64.pow(u32::from(self.width)) - 1
    }

    pub fn next(&mut self) -> Result<String> {
        if self.last_issued >= self.limit() {
            return Err(InterchangeError::CounterExhausted(self.last_issued));
        }
        self.last_issued += 1;
        Ok(format!("{:0width$}", self.last_issued, width = usize::from(self.width)))
    }
}

pub fn next_control_number(counter: &mut ControlCounter) -> Result<String> {
    counter.next()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlScope {
    Interchange,
    Group,
    Transaction,
}

impl ControlScope {
    fn width(self) -> u8 {
        match self {
            Self::Interchange => 9,
            Self::Group | Self::Transaction => 4,
        }
    }

    fn key(self) -> &'static str {
        match self {
            Self::Interchange => "interchange",
            Self::Group => "group",
            Self::Transaction => "transaction",
        }
    }
}

/// One counter per (sender, scope) pair. Serializes to a flat JSON object
/// keyed `"<sender>/<scope>"`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ControlRegistry {
    counters: BTreeMap<String, ControlCounter>,
}

impl ControlRegistry {
    pub fn next(&mut self, sender: &str, scope: ControlScope) -> Result<String> {
        self.counters
            .entry(format!("{sender}/{}", scope.key()))
            .or_insert_with(|| ControlCounter::with_width(scope.width()))
            .next()
    }
}
