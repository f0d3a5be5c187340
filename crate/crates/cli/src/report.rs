//! Versioned JSON reports.

use serde::Serialize;

pub const SCHEMA: u32 = 1;

/// How a residual is compared with its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    /// residual ≤ threshold
    #[serde(rename = "<=")]
    AtMost,
    /// residual ≥ threshold (witness checks)
    #[serde(rename = ">=")]
    AtLeast,
}

impl Relation {
    pub fn holds(self, residual: f64, threshold: f64) -> bool {
        match self {
            Relation::AtMost => residual <= threshold,
            Relation::AtLeast => residual >= threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    /// `null` when the check could not be evaluated.
    pub residual: Option<f64>,
    pub threshold: f64,
    pub relation: Relation,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorPayload>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorPayload {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub schema: u32,
    pub suite: String,
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<CheckRecord>,
}

impl SuiteReport {
    /// Sorts records by name and derives the overall flag.
    pub fn new(suite: impl Into<String>, seed: u64, mut checks: Vec<CheckRecord>) -> Self {
        checks.sort_by(|a, b| a.name.cmp(&b.name));
        let pass = checks.iter().all(|c| c.pass);
        SuiteReport {
            schema: SCHEMA,
            suite: suite.into(),
            seed,
            pass,
            checks,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports contain only serializable data")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(name: &str, pass: bool) -> CheckRecord {
        CheckRecord {
            name: name.into(),
            residual: Some(0.0),
            threshold: 1.0,
            relation: Relation::AtMost,
            pass,
            error: None,
            runtime_ms: None,
        }
    }

    #[test]
    fn overall_flag_and_order() {
        let r = SuiteReport::new("s", 1, vec![record("b", true), record("a", true)]);
        assert!(r.pass);
        assert_eq!(r.checks[0].name, "a");
        assert!(!SuiteReport::new("s", 1, vec![record("a", true), record("b", false)]).pass);
    }

    #[test]
    fn json_shape() {
        let json = SuiteReport::new("s", 3, vec![record("a", true)]).to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["checks"][0]["relation"], "<=");
        assert!(v["checks"][0].get("runtime_ms").is_none());
        assert!(v["checks"][0].get("error").is_none());
    }

    #[test]
    fn relations() {
        assert!(Relation::AtMost.holds(1.0, 1.0) && !Relation::AtMost.holds(f64::NAN, 1.0));
        assert!(Relation::AtLeast.holds(0.3, 0.2) && !Relation::AtLeast.holds(0.1, 0.2));
    }
}
