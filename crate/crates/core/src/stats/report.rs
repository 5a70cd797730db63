use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::KsResult;

/// One record of a statistical test report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub schema_version: u32,
    pub test: String,
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
    /// Wall-clock time, left empty unless timing was requested so that
    /// reruns stay byte-identical.
    pub runtime_ms: Option<u64>,
}

impl TestReport {
    pub fn new(
        test: impl Into<String>,
        params: &[(&str, f64)],
        seed: u64,
        statistic: f64,
        threshold: f64,
        pass: bool,
    ) -> Self {
        Self {
            schema_version: crate::SCHEMA_VERSION,
            test: test.into(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            seed,
            statistic,
            threshold,
            pass,
            runtime_ms: None,
        }
    }

    pub fn from_ks(test: impl Into<String>, params: &[(&str, f64)], seed: u64, ks: &KsResult) -> Self {
        Self::new(test, params, seed, ks.statistic, ks.critical_1pct, ks.pass)
    }

    pub fn with_runtime(mut self, runtime_ms: u64) -> Self {
        self.runtime_ms = Some(runtime_ms);
        self
    }
}
