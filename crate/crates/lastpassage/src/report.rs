//! Verdict-carrying result record shared by every statistical and numerical
//! check in the crate.
//!
//! Reports serialize to JSON with sorted metadata keys, so a rerun with the
//! same seed reproduces the output byte for byte.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    /// The check could not decide (for example, too few samples for the
    /// normal approximation behind a z-test).
    #[serde(rename = "INCONCLUSIVE")]
    Inconclusive,
}

impl Verdict {
    pub fn from_bool(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Pass => write!(f, "PASS"),
            Verdict::Fail => write!(f, "FAIL"),
            Verdict::Inconclusive => write!(f, "INCONCLUSIVE"),
        }
    }
}

/// Outcome of one check: the statistic that was computed, the p-value or
/// error magnitude it was judged by, the sample or probe count, and the
/// verdict, plus free-form key/value context (thresholds, parameters).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub p_value_or_error: f64,
    pub n: u64,
    pub verdict: Verdict,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl TestReport {
    pub fn new(name: impl Into<String>, statistic: f64, p_value_or_error: f64, n: u64, verdict: Verdict) -> Self {
        TestReport {
            name: name.into(),
            statistic,
            p_value_or_error,
            n,
            verdict,
            metadata: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_lossless() {
        let r = TestReport::new("unit", 0.123456789012345, 0.05, 1000, Verdict::Pass)
            .with("alpha", 0.01)
            .with("note", "round trip");
        let s = serde_json::to_string(&r).unwrap();
        let back: TestReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back.name, r.name);
        assert_eq!(back.statistic, r.statistic);
        assert_eq!(back.p_value_or_error, r.p_value_or_error);
        assert_eq!(back.n, r.n);
        assert_eq!(back.verdict, r.verdict);
        assert_eq!(back.metadata, r.metadata);
        // serialization is deterministic
        assert_eq!(s, serde_json::to_string(&back).unwrap());
    }

    #[test]
    fn verdict_serializes_to_uppercase_strings() {
        assert_eq!(serde_json::to_string(&Verdict::Pass).unwrap(), "\"PASS\"");
        assert_eq!(serde_json::to_string(&Verdict::Fail).unwrap(), "\"FAIL\"");
        assert_eq!(
            serde_json::to_string(&Verdict::Inconclusive).unwrap(),
            "\"INCONCLUSIVE\""
        );
    }
}
