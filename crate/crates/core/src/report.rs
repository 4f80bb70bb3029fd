//! Structured experiment results.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// One asserted inequality or identity: what was claimed, what was observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// The claimed bound or exact value.
    pub claimed: f64,
    /// The worst observed value.
    pub observed: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Check {
    /// `observed <= claimed`.
    pub fn at_most(name: impl Into<String>, observed: f64, claimed: f64) -> Self {
        Check {
            name: name.into(),
            claimed,
            observed,
            pass: observed <= claimed,
            detail: String::new(),
        }
    }

    /// `observed >= claimed`.
    pub fn at_least(name: impl Into<String>, observed: f64, claimed: f64) -> Self {
        Check {
            name: name.into(),
            claimed,
            observed,
            pass: observed >= claimed,
            detail: String::new(),
        }
    }

    /// `|observed - claimed| <= tol`.
    pub fn close(name: impl Into<String>, observed: f64, claimed: f64, tol: f64) -> Self {
        Check {
            name: name.into(),
            claimed,
            observed,
            pass: (observed - claimed).abs() <= tol,
            detail: format!("tolerance {tol:e}"),
        }
    }

    /// A boolean predicate; `observed` carries a count or witness value.
    pub fn holds(name: impl Into<String>, pass: bool, observed: f64) -> Self {
        Check {
            name: name.into(),
            claimed: 1.0,
            observed,
            pass,
            detail: String::new(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

/// Values, claimed-vs-observed checks and traces for one experiment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub checks: Vec<Check>,
    #[serde(default)]
    pub values: BTreeMap<String, f64>,
    /// Named columns for CSV export; all columns in a trace group share length.
    #[serde(default)]
    pub traces: BTreeMap<String, Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(name: impl Into<String>) -> Self {
        Report {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&mut self, check: Check) -> &mut Self {
        self.checks.push(check);
        self
    }

    pub fn value(&mut self, key: impl Into<String>, v: f64) -> &mut Self {
        self.values.insert(key.into(), v);
        self
    }

    pub fn trace(&mut self, key: impl Into<String>, v: Vec<f64>) -> &mut Self {
        self.traces.insert(key.into(), v);
        self
    }

    pub fn note(&mut self, note: impl Into<String>) -> &mut Self {
        self.notes.push(note.into());
        self
    }

    /// Merge another report's checks under a name prefix.
    pub fn absorb(&mut self, prefix: &str, other: Report) {
        for mut c in other.checks {
            c.name = format!("{prefix}{}", c.name);
            self.checks.push(c);
        }
        for (k, v) in other.values {
            self.values.insert(format!("{prefix}{k}"), v);
        }
        for (k, v) in other.traces {
            self.traces.insert(format!("{prefix}{k}"), v);
        }
        self.notes.extend(other.notes);
    }

    /// Render the trace columns as CSV with 17 significant digits.
    ///
    /// Columns of unequal length are padded with empty cells.
    pub fn traces_csv(&self) -> String {
        let keys: Vec<&String> = self.traces.keys().collect();
        let rows = self.traces.values().map(Vec::len).max().unwrap_or(0);
        let mut out = String::new();
        out.push_str(
            &keys
                .iter()
                .map(|k| k.as_str())
                .collect::<Vec<_>>()
                .join(","),
        );
        out.push('\n');
        for r in 0..rows {
            let cells: Vec<String> = keys
                .iter()
                .map(|k| {
                    self.traces[*k]
                        .get(r)
                        .map(|v| fmt17(*v))
                        .unwrap_or_default()
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Format with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Aggregate outcome of a battery run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub battery: String,
    pub seed: u64,
    /// Resolved battery parameters, defaults filled in.
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub params: serde_json::Value,
    pub pass: bool,
    pub reports: Vec<Report>,
}

impl RunResult {
    pub fn new(battery: impl Into<String>, seed: u64, reports: Vec<Report>) -> Self {
        let pass = reports.iter().all(Report::pass);
        RunResult {
            battery: battery.into(),
            seed,
            params: serde_json::Value::Null,
            pass,
            reports,
        }
    }

    pub fn with_params(mut self, params: serde_json::Value) -> Self {
        self.params = params;
        self
    }

    pub fn checks(&self) -> impl Iterator<Item = &Check> {
        self.reports.iter().flat_map(|r| r.checks.iter())
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks().filter(|c| !c.pass).collect()
    }
}
