//! `report.json`: one entry per invariant check with its measured value.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "in")]
    Within,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub relation: Relation,
    /// Bound, or lower bound for [`Relation::Within`].
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
}

impl Check {
    pub fn le(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), passed: value <= threshold, value, relation: Relation::Le, threshold, upper: None }
    }

    pub fn ge(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), passed: value >= threshold, value, relation: Relation::Ge, threshold, upper: None }
    }

    pub fn gt(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), passed: value > threshold, value, relation: Relation::Gt, threshold, upper: None }
    }

    pub fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            passed: value > lo && value < hi,
            value,
            relation: Relation::Within,
            threshold: lo,
            upper: Some(hi),
        }
    }

    /// `true` counts as 1, `false` as 0; passes when `value == want`.
    pub fn flag(name: &str, value: bool, want: bool) -> Self {
        let v = if value { 1.0 } else { 0.0 };
        let w = if want { 1.0 } else { 0.0 };
        Self { name: name.into(), passed: value == want, value: v, relation: Relation::Within, threshold: w, upper: Some(w) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    /// Files written, relative to the output directory.
    pub artifacts: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ExperimentReport {
    pub fn new(experiment: &str) -> Self {
        Self { experiment: experiment.into(), passed: true, checks: Vec::new(), artifacts: Vec::new(), error: None }
    }

    pub fn push(&mut self, check: Check) {
        self.passed &= check.passed;
        self.checks.push(check);
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    InvariantFailure,
    NumericalFailure,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::InvariantFailure => 1,
            Status::NumericalFailure => 3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub experiment: String,
    pub seed: u64,
    pub status: Status,
    pub passed: bool,
    pub experiments: Vec<ExperimentReport>,
}

impl Report {
    pub fn new(experiment: &str, seed: u64, experiments: Vec<ExperimentReport>) -> Self {
        let numerical = experiments.iter().any(|e| e.error.is_some());
        let passed = experiments.iter().all(|e| e.passed && e.error.is_none());
        let status = if numerical {
            Status::NumericalFailure
        } else if passed {
            Status::Ok
        } else {
            Status::InvariantFailure
        };
        Self { experiment: experiment.into(), seed, status, passed, experiments }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_and_status() {
        assert!(Check::le("a", 1.0, 1.0).passed);
        assert!(!Check::gt("b", 0.0, 0.0).passed);
        assert!(!Check::le("nan", f64::NAN, 1.0).passed);
        assert!(Check::within("c", 0.5, 0.0, 1.0).passed);
        let mut e = ExperimentReport::new("x");
        e.push(Check::ge("d", 0.0, 1.0));
        assert_eq!(Report::new("x", 1, vec![e.clone()]).status, Status::InvariantFailure);
        e.error = Some("boom".into());
        assert_eq!(Report::new("x", 1, vec![e]).status.exit_code(), 3);
    }
}
