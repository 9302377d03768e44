use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::ScenarioError;

/// One sweep point or one check. Bound checks fill both `lhs` and `rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub index: usize,
    pub check: String,
    pub epsilon: Option<f64>,
    pub alpha: Option<f64>,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub holds: bool,
    pub tv_jump: Option<f64>,
    pub value_gap: Option<f64>,
    pub set_before: Vec<usize>,
    pub set_after: Vec<usize>,
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
}

impl RunRecord {
    pub(crate) fn new(index: usize, check: &str) -> Self {
        Self {
            index,
            check: check.to_string(),
            epsilon: None,
            alpha: None,
            lhs: None,
            rhs: None,
            holds: false,
            tv_jump: None,
            value_gap: None,
            set_before: Vec::new(),
            set_after: Vec::new(),
            error: None,
            extra: BTreeMap::new(),
        }
    }

    pub(crate) fn failed(mut self, err: impl std::fmt::Display) -> Self {
        self.holds = false;
        self.error = Some(err.to_string());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub expected: String,
    pub observed: String,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub scenario_id: String,
    pub experiment: String,
    pub tool_version: String,
    pub seed: u64,
    pub runs: Vec<RunRecord>,
    pub verdicts: Vec<Verdict>,
    pub all_hold: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// Left out of the JSON so that replays are byte-identical.
    #[serde(skip)]
    pub wall_clock: Duration,
}

impl ExperimentReport {
    pub fn failed_verdicts(&self) -> impl Iterator<Item = &Verdict> {
        self.verdicts.iter().filter(|v| !v.holds)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
            origin: "report".into(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_COLUMNS).expect("in-memory write");
        for r in &self.runs {
            w.write_record(csv_row(r)).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}

/// Column order of the CSV report.
pub const CSV_COLUMNS: [&str; 12] = [
    "index",
    "check",
    "epsilon",
    "alpha",
    "lhs",
    "rhs",
    "holds",
    "tv_jump",
    "value_gap",
    "set_before",
    "set_after",
    "error",
];

fn csv_row(r: &RunRecord) -> [String; 12] {
    let num = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    let set = |s: &[usize]| s.iter().map(usize::to_string).collect::<Vec<_>>().join(";");
    [
        r.index.to_string(),
        r.check.clone(),
        num(r.epsilon),
        num(r.alpha),
        num(r.lhs),
        num(r.rhs),
        r.holds.to_string(),
        num(r.tv_jump),
        num(r.value_gap),
        set(&r.set_before),
        set(&r.set_after),
        r.error.clone().unwrap_or_default(),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Csv,
}

pub fn render_report(report: &ExperimentReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => report.to_json(),
        ReportFormat::Csv => report.to_csv(),
    }
}

pub fn write_report(
    report: &ExperimentReport,
    format: ReportFormat,
    path: impl AsRef<Path>,
) -> Result<(), ScenarioError> {
    let path = path.as_ref();
    std::fs::write(path, render_report(report, format))
        .map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))
}
