//! Check records, suite reports and their json/csv/text renderings.

use crate::config::{Format, RunConfig};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    /// `|computed - expected| <= tolerance`.
    Within,
    /// `computed < expected`.
    Below,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub criterion: Option<u8>,
    pub computed: Option<f64>,
    pub expected: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn within(name: impl Into<String>, criterion: Option<u8>, computed: f64, expected: f64, tolerance: f64) -> Self {
        let pass = (computed - expected).abs() <= tolerance;
        Self::build(name.into(), criterion, computed, expected, tolerance, Relation::Within, pass)
    }

    pub fn below(name: impl Into<String>, criterion: Option<u8>, computed: f64, bound: f64) -> Self {
        let pass = computed < bound;
        Self::build(name.into(), criterion, computed, bound, 0.0, Relation::Below, pass)
    }

    /// Exact check on a count of violations.
    pub fn zero_count(name: impl Into<String>, criterion: Option<u8>, violations: usize) -> Self {
        Self::within(name, criterion, violations as f64, 0.0, 0.0)
    }

    /// A check whose computation failed.
    pub fn failed(name: impl Into<String>, criterion: Option<u8>, expected: f64, tolerance: f64, err: &Error) -> Self {
        Self {
            name: name.into(),
            criterion,
            computed: None,
            expected,
            tolerance,
            relation: Relation::Within,
            pass: false,
            note: Some(err.to_string()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    fn build(name: String, criterion: Option<u8>, computed: f64, expected: f64, tolerance: f64, relation: Relation, pass: bool) -> Self {
        let computed = computed.is_finite().then_some(computed);
        Self { name, criterion, computed, expected, tolerance, relation, pass: pass && computed.is_some(), note: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub pass: bool,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl SuiteReport {
    pub fn new(suite: impl Into<String>, checks: Vec<Check>, wall_time_s: Option<f64>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Self { suite: suite.into(), pass, checks, wall_time_s }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub pass: bool,
    pub suites: Vec<SuiteReport>,
    pub config: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

impl Report {
    pub fn new(command: impl Into<String>, config: &RunConfig, suites: Vec<SuiteReport>) -> Self {
        let pass = suites.iter().all(|s| s.pass);
        Self {
            tool: "gblab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed: config.seed,
            pass,
            suites,
            config: config.clone(),
            wall_time_s: None,
            timestamp: None,
        }
    }

    /// Drops wall times and the timestamp so that equal runs render identically.
    pub fn strip_timing(&mut self) {
        self.wall_time_s = None;
        self.timestamp = None;
        for s in &mut self.suites {
            s.wall_time_s = None;
        }
    }

    /// Recomputes the overall flags from the check records.
    pub fn recompute_pass(&mut self) {
        for s in &mut self.suites {
            s.pass = s.checks.iter().all(|c| c.pass);
        }
        self.pass = self.suites.iter().all(|s| s.pass);
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Input(e.to_string()))?;
                s.push('\n');
                Ok(s)
            }
            Format::Csv => Ok(self.to_csv()),
            Format::Text => Ok(self.to_text()),
        }
    }

    fn to_csv(&self) -> String {
        let mut out = String::from("suite,check,criterion,computed,expected,tolerance,relation,pass\n");
        for s in &self.suites {
            for c in &s.checks {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    csv_field(&s.suite),
                    csv_field(&c.name),
                    c.criterion.map(|k| k.to_string()).unwrap_or_default(),
                    c.computed.map(fmt_num).unwrap_or_default(),
                    fmt_num(c.expected),
                    fmt_num(c.tolerance),
                    relation_name(c.relation),
                    c.pass
                );
            }
        }
        out
    }

    fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {} seed={}", self.tool, self.command, self.seed);
        for s in &self.suites {
            let time = s.wall_time_s.map(|t| format!(" ({t:.2} s)")).unwrap_or_default();
            let _ = writeln!(out, "[{}] {}{}", verdict(s.pass), s.suite, time);
            for c in &s.checks {
                let computed = c.computed.map(fmt_num).unwrap_or_else(|| "n/a".into());
                let rel = match c.relation {
                    Relation::Within => format!("expected {} ± {}", fmt_num(c.expected), fmt_num(c.tolerance)),
                    Relation::Below => format!("expected < {}", fmt_num(c.expected)),
                };
                let note = c.note.as_deref().map(|n| format!("  [{n}]")).unwrap_or_default();
                let _ = writeln!(out, "  {} {}: {} ({}){}", verdict(c.pass), c.name, computed, rel, note);
            }
        }
        let _ = writeln!(out, "overall: {}", verdict(self.pass));
        out
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn relation_name(r: Relation) -> &'static str {
    match r {
        Relation::Within => "within",
        Relation::Below => "below",
    }
}

fn fmt_num(x: f64) -> String {
    format!("{x:e}")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
