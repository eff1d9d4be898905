//! Report files.
//!
//! Everything that varies between two runs of the same input lives under the
//! top-level `timing` key; the rest is a pure function of the input.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::scenario::SCHEMA;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    /// the gap is carried by terms flagged in the tables
    Suspect,
    Fail,
    /// computed, nothing to compare against
    Info,
    /// preconditions not met; nothing was judged
    Skipped,
    Error,
}

impl Outcome {
    pub fn is_failure(self) -> bool {
        matches!(self, Outcome::Fail | Outcome::Error)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<usize>,
    /// SHA-256 of the inputs that determine this record
    pub inputs_digest: String,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub detail: Value,
}

impl CheckRecord {
    pub fn new(check: impl Into<String>, inputs: &Value) -> CheckRecord {
        CheckRecord {
            check: check.into(),
            instance: None,
            point: None,
            inputs_digest: matsumoto::expansion::tables::sha256_hex(inputs.to_string().as_bytes()),
            outcome: Outcome::Info,
            residual: None,
            tolerance: None,
            samples: None,
            message: None,
            detail: Value::Null,
        }
    }

    pub fn error(mut self, message: impl ToString) -> CheckRecord {
        self.outcome = Outcome::Error;
        self.message = Some(message.to_string());
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub pass: usize,
    pub suspect: usize,
    pub fail: usize,
    pub info: usize,
    pub skipped: usize,
    pub error: usize,
}

impl Summary {
    pub fn of(records: &[CheckRecord]) -> Summary {
        let mut s = Summary::default();
        for r in records {
            match r.outcome {
                Outcome::Pass => s.pass += 1,
                Outcome::Suspect => s.suspect += 1,
                Outcome::Fail => s.fail += 1,
                Outcome::Info => s.info += 1,
                Outcome::Skipped => s.skipped += 1,
                Outcome::Error => s.error += 1,
            }
        }
        s
    }

    pub fn all_passed(&self) -> bool {
        self.fail == 0 && self.error == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub tool: String,
    pub version: String,
    pub os: String,
    pub arch: String,
    pub term_data_sha256: String,
}

impl Environment {
    pub fn current() -> Environment {
        Environment {
            tool: "matsumoto".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            term_data_sha256: matsumoto::expansion::tables::TERM_DATA_SHA256.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub generated_at: String,
    pub threads: usize,
    pub total_ms: f64,
    /// one entry per check record, same order
    pub wall_ms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    /// `run`, `verify_appendix` or `theorem_suite`
    pub command: String,
    pub environment: Environment,
    /// scenario echo for `run`, suite parameters otherwise
    pub input: Value,
    pub input_digest: String,
    pub checks: Vec<CheckRecord>,
    pub summary: Summary,
    pub timing: Timing,
}

impl Report {
    pub fn new(
        command: &str,
        input: Value,
        checks: Vec<(CheckRecord, f64)>,
        threads: usize,
        total_ms: f64,
    ) -> Report {
        let (checks, wall_ms): (Vec<_>, Vec<_>) = checks.into_iter().unzip();
        Report {
            schema: SCHEMA.into(),
            command: command.into(),
            environment: Environment::current(),
            input_digest: matsumoto::expansion::tables::sha256_hex(input.to_string().as_bytes()),
            input,
            summary: Summary::of(&checks),
            checks,
            timing: Timing {
                generated_at: chrono::Utc::now()
                    .to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
                threads,
                total_ms,
                wall_ms,
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// 0 when nothing failed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.summary.all_passed() {
            0
        } else {
            1
        }
    }
}

/// The report with its `timing` field removed, for comparisons across runs.
pub fn without_timing(report_json: &str) -> serde_json::Result<Value> {
    let mut v: Value = serde_json::from_str(report_json)?;
    if let Some(map) = v.as_object_mut() {
        map.remove("timing");
    }
    Ok(v)
}
