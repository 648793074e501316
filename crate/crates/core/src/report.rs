//! Verification outcomes and the JSON report format.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::series::TruncSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

/// First offending coefficient of a nonzero difference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Residual {
    pub exponent: Vec<u32>,
    pub coefficient: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult {
    pub id: String,
    pub inputs: BTreeMap<String, String>,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<Residual>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Wall time; only recorded when timings are requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ms: Option<u64>,
}

impl CaseResult {
    pub fn new(id: impl Into<String>, inputs: BTreeMap<String, String>) -> Self {
        CaseResult { id: id.into(), inputs, status: Status::Pass, residual: None, note: None, ms: None }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn fail(mut self, note: impl Into<String>) -> Self {
        self.status = Status::Fail;
        self.note = Some(note.into());
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        let note = note.into();
        self.note = Some(match self.note.take() {
            Some(old) => format!("{old}; {note}"),
            None => note,
        });
        self
    }

    /// Record `lhs − rhs`, compared modulo total degree `n`. A failing
    /// comparison keeps the first residual seen.
    pub fn compare(mut self, label: &str, lhs: &TruncSeries, rhs: &TruncSeries, n: u32) -> Self {
        if self.status == Status::Fail {
            return self;
        }
        let order = lhs.order().min(rhs.order());
        if order < n {
            return self.fail(format!("{label}: effective order {order} below {n}"));
        }
        match lhs.try_sub(rhs) {
            Ok(d) => {
                if let Some((exponent, c)) = d.truncate(n).first_nonzero() {
                    self.status = Status::Fail;
                    self.residual = Some(Residual { exponent, coefficient: c.to_string(), block: None });
                    self.note = Some(label.to_string());
                }
                self
            }
            Err(e) => self.fail(format!("{label}: {e}")),
        }
    }

    /// Require `flag`, failing with `label` otherwise.
    pub fn require(self, label: &str, flag: bool) -> Self {
        if flag || self.status == Status::Fail {
            self
        } else {
            self.fail(label.to_string())
        }
    }

    pub fn error(self, label: &str, err: impl std::fmt::Display) -> Self {
        self.fail(format!("{label}: {err}"))
    }
}

/// Build an ordered input map from pairs.
pub fn inputs<const K: usize>(pairs: [(&str, String); K]) -> BTreeMap<String, String> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub suite: String,
    pub config_echo: serde_json::Value,
    pub environment: BTreeMap<String, String>,
    pub cases: Vec<CaseResult>,
    pub summary: Summary,
}

impl Report {
    pub fn new(suite: &str, config_echo: serde_json::Value, environment: BTreeMap<String, String>, cases: Vec<CaseResult>) -> Self {
        let pass = cases.iter().filter(|c| c.passed()).count();
        let fail = cases.len() - pass;
        Report { suite: suite.to_string(), config_echo, environment, cases, summary: Summary { pass, fail } }
    }

    pub fn all_passed(&self) -> bool {
        self.summary.fail == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}
