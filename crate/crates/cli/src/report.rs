//! Report records, summary and serialization.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::config::{ExperimentConfig, Suite, Tolerances};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Recorded for context (coarse sweep points); never decides the outcome.
    Info,
    /// The check could not be evaluated; counts as a failure.
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Record {
    pub suite: Suite,
    pub check: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<String>,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<i64>,
    pub residual: Option<f64>,
    pub tolerance: Option<f64>,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Record {
    pub fn new(suite: Suite, check: impl Into<String>) -> Self {
        Self {
            suite,
            check: check.into(),
            gamma: None,
            cutoff: None,
            h: None,
            m: None,
            n: None,
            residual: None,
            tolerance: None,
            status: Status::Info,
            detail: None,
        }
    }

    pub fn gamma(mut self, g: &str) -> Self {
        self.gamma = Some(g.to_string());
        self
    }

    pub fn cutoff(mut self, m: usize) -> Self {
        self.cutoff = Some(m);
        self
    }

    pub fn h(mut self, h: f64) -> Self {
        self.h = Some(h);
        self
    }

    pub fn indices(mut self, m: Option<i64>, n: Option<i64>) -> Self {
        self.m = m;
        self.n = n;
        self
    }

    pub fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }

    /// Judge `residual <= tol`, or record it as info when `decisive` is false.
    pub fn judge(mut self, residual: f64, tol: f64, decisive: bool) -> Self {
        self.residual = Some(residual);
        self.tolerance = Some(tol);
        self.status = match (decisive, residual <= tol) {
            (false, _) => Status::Info,
            (true, true) => Status::Pass,
            (true, false) => Status::Fail,
        };
        self
    }

    pub fn failed(mut self, err: &dyn std::fmt::Display) -> Self {
        self.status = Status::Error;
        self.detail = Some(err.to_string());
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub checks: usize,
    pub passed: usize,
    pub failed: usize,
    pub errors: usize,
    pub info: usize,
    pub overall: Status,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub suites: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub mode: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub tolerances: Tolerances,
    pub records: Vec<Record>,
    pub summary: Summary,
    /// Wall-clock data; the only part of a report that varies between runs.
    pub timing: Timing,
}

impl Report {
    pub fn new(mode: &str, seed: u64, config: ExperimentConfig, tolerances: Tolerances, records: Vec<Record>, timing: Timing) -> Self {
        let count = |s: Status| records.iter().filter(|r| r.status == s).count();
        let (passed, failed, errors, info) = (count(Status::Pass), count(Status::Fail), count(Status::Error), count(Status::Info));
        let overall = if failed + errors == 0 { Status::Pass } else { Status::Fail };
        let summary = Summary { checks: records.len(), passed, failed, errors, info, overall };
        Self { mode: mode.to_string(), seed, config, tolerances, records, summary, timing }
    }

    pub fn passed(&self) -> bool {
        self.summary.overall == Status::Pass
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        serde_json::to_string_pretty(self).map_err(|e| CliError::Io(e.to_string()))
    }

    /// Flat comma-separated table of all records.
    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(["suite", "check", "gamma", "M", "h", "m", "n", "residual", "tolerance", "status", "detail"])
            .map_err(io)?;
        let opt = |v: Option<String>| v.unwrap_or_default();
        for r in &self.records {
            let suite = serde_json::to_value(r.suite).map_err(|e| CliError::Io(e.to_string()))?;
            let status = serde_json::to_value(r.status).map_err(|e| CliError::Io(e.to_string()))?;
            w.write_record([
                suite.as_str().unwrap_or_default().to_string(),
                r.check.clone(),
                opt(r.gamma.clone()),
                opt(r.cutoff.map(|v| v.to_string())),
                opt(r.h.map(|v| format!("{v:e}"))),
                opt(r.m.map(|v| v.to_string())),
                opt(r.n.map(|v| v.to_string())),
                opt(r.residual.map(|v| format!("{v:e}"))),
                opt(r.tolerance.map(|v| format!("{v:e}"))),
                status.as_str().unwrap_or_default().to_string(),
                opt(r.detail.clone()),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
    }

    /// One line per suite plus the overall verdict.
    pub fn write_summary(&self, out: &mut impl Write) -> std::io::Result<()> {
        let mut per: BTreeMap<String, (usize, usize, usize)> = BTreeMap::new();
        for r in &self.records {
            let key = serde_json::to_value(r.suite).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            let e = per.entry(key).or_default();
            match r.status {
                Status::Pass => e.0 += 1,
                Status::Fail | Status::Error => e.1 += 1,
                Status::Info => e.2 += 1,
            }
        }
        for (suite, (p, f, i)) in &per {
            writeln!(out, "{suite:<14} passed {p:>4}  failed {f:>4}  info {i:>4}")?;
        }
        for r in self.records.iter().filter(|r| matches!(r.status, Status::Fail | Status::Error)) {
            writeln!(
                out,
                "  FAIL {} {} m={:?} n={:?} h={:?} M={:?} residual={:?} {}",
                r.check,
                r.gamma.as_deref().unwrap_or(""),
                r.m,
                r.n,
                r.h,
                r.cutoff,
                r.residual,
                r.detail.as_deref().unwrap_or("")
            )?;
        }
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        writeln!(out, "overall: {verdict} ({} checks, {:.2} s)", self.summary.checks, self.timing.total_seconds)
    }
}
