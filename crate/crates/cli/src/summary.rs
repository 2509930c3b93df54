use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// One invariant check with the claim it instantiates.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Suite {
    pub name: String,
    pub claim: String,
    pub passed: bool,
    pub metrics: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Suite {
    pub fn new(name: &str, claim: &str) -> Self {
        Suite {
            name: name.into(),
            claim: claim.into(),
            passed: true,
            metrics: BTreeMap::new(),
            notes: vec![],
        }
    }

    pub fn metric(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.metrics.insert(key.into(), value.into());
        self
    }

    pub fn check(mut self, ok: bool) -> Self {
        self.passed &= ok;
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }
}

/// Contents of `summary.json`; free of timestamps and paths.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Summary {
    pub schema: u32,
    pub kind: String,
    pub seed: u64,
    pub config_sha256: String,
    pub passed: bool,
    pub suites: Vec<Suite>,
    pub artifacts: Vec<String>,
}

impl Summary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }

    pub fn failed(&self) -> impl Iterator<Item = &Suite> {
        self.suites.iter().filter(|s| !s.passed)
    }
}
