//! Run reports: one human-readable rendering for the terminal and the same
//! content as JSON for scripting. Field order is fixed so identical inputs
//! produce identical bytes.

use std::collections::BTreeMap;
use std::fmt::Display;

use serde::Serialize;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
}

impl Status {
    pub fn of(pass: bool) -> Status {
        if pass {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerdictLine {
    pub check: String,
    pub status: Status,
    pub detail: String,
}

#[derive(Serialize)]
pub struct RunReport {
    pub command: String,
    pub params: BTreeMap<String, String>,
    pub verdicts: Vec<VerdictLine>,
    pub counts: BTreeMap<String, String>,
    /// Only present under --timings; omitted otherwise so reports stay
    /// byte-identical across runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u128>,
    /// Free-form payload (traces, dumps); printed after the summary.
    #[serde(skip_serializing_if = "String::is_empty")]
    pub body: String,
}

impl RunReport {
    pub fn new(command: &str) -> RunReport {
        RunReport {
            command: command.into(),
            params: BTreeMap::new(),
            verdicts: Vec::new(),
            counts: BTreeMap::new(),
            elapsed_ms: None,
            body: String::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Display) {
        self.params.insert(key.into(), value.to_string());
    }

    pub fn count(&mut self, key: &str, value: impl Display) {
        self.counts.insert(key.into(), value.to_string());
    }

    pub fn verdict(&mut self, check: &str, status: Status, detail: impl Display) {
        self.verdicts.push(VerdictLine {
            check: check.into(),
            status,
            detail: detail.to_string(),
        });
    }

    /// 0 all Pass, 2 any Fail, 3 NotApplicable but no Fail.
    pub fn exit_code(&self) -> i32 {
        if self.verdicts.iter().any(|v| v.status == Status::Fail) {
            2
        } else if self.verdicts.iter().any(|v| v.status == Status::NotApplicable) {
            3
        } else {
            0
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("command: {}\n", self.command));
        for (k, v) in &self.params {
            out.push_str(&format!("param {k} = {v}\n"));
        }
        for v in &self.verdicts {
            let status = match v.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::NotApplicable => "NOT-APPLICABLE",
            };
            out.push_str(&format!("check {}: {status}", v.check));
            if !v.detail.is_empty() {
                out.push_str(&format!(" ({})", v.detail));
            }
            out.push('\n');
        }
        for (k, v) in &self.counts {
            out.push_str(&format!("count {k} = {v}\n"));
        }
        if let Some(ms) = self.elapsed_ms {
            out.push_str(&format!("elapsed-ms: {ms}\n"));
        }
        if !self.body.is_empty() {
            out.push_str(&self.body);
            if !self.body.ends_with('\n') {
                out.push('\n');
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report fields serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_code_prefers_failures_over_inapplicability() {
        let mut rep = RunReport::new("t");
        assert_eq!(rep.exit_code(), 0);
        rep.verdict("a", Status::Pass, "");
        assert_eq!(rep.exit_code(), 0);
        rep.verdict("b", Status::NotApplicable, "");
        assert_eq!(rep.exit_code(), 3);
        rep.verdict("c", Status::Fail, "");
        assert_eq!(rep.exit_code(), 2);
    }

    #[test]
    fn rendering_is_deterministic_and_json_omits_empty_fields() {
        let mut rep = RunReport::new("t");
        rep.param("z", 1);
        rep.param("a", 2);
        rep.count("n", 7);
        rep.verdict("ok", Status::Pass, "fine");
        let text = rep.render();
        // params print in key order regardless of insertion order
        let a = text.find("param a").unwrap();
        let z = text.find("param z").unwrap();
        assert!(a < z);
        assert!(text.contains("check ok: PASS (fine)"));
        assert!(text.contains("count n = 7"));
        let json = rep.to_json();
        assert!(!json.contains("elapsed_ms"));
        assert!(!json.contains("body"));
        assert_eq!(json, rep.to_json());

        rep.elapsed_ms = Some(3);
        rep.body = "payload".into();
        let json = rep.to_json();
        assert!(json.contains("elapsed_ms"));
        assert!(json.contains("payload"));
        assert!(rep.render().ends_with("payload\n"));
    }
}
