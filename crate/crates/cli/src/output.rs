//! CSV tables and the run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use fcs_core::curve_space::fmt17;
use serde::Serialize;

use crate::checks::Check;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// A CSV table; numbers are written with 17 significant digits.
#[derive(Debug, Clone, Default)]
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

pub fn num(x: f64) -> String {
    fmt17(x)
}

pub fn opt(x: Option<f64>) -> String {
    x.map(fmt17).unwrap_or_default()
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        fs::write(path, self.render())
    }
}

pub fn checks_table(checks: &[(String, Check)]) -> Table {
    let mut t = Table::new(&["section", "check", "measured", "lower", "upper", "slack", "pass"]);
    for (section, c) in checks {
        t.push(vec![
            section.clone(),
            c.name.clone(),
            num(c.measured),
            opt(c.lower),
            opt(c.upper),
            num(c.slack()),
            c.pass.to_string(),
        ]);
    }
    t
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestCheck {
    pub section: String,
    pub name: String,
    pub measured: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub slack: f64,
    pub pass: bool,
}

/// Everything needed to reproduce and judge a run. All fields except `wall_clock_ms`
/// are deterministic for a given configuration.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub wall_clock_ms: u64,
    pub checks: Vec<ManifestCheck>,
    pub outputs: Vec<String>,
    pub all_pass: bool,
}

impl RunManifest {
    pub fn new(command: &str, config: BTreeMap<String, String>, checks: &[(String, Check)], outputs: Vec<String>) -> Self {
        let checks: Vec<ManifestCheck> = checks
            .iter()
            .map(|(section, c)| ManifestCheck {
                section: section.clone(),
                name: c.name.clone(),
                measured: c.measured,
                lower: c.lower,
                upper: c.upper,
                slack: c.slack(),
                pass: c.pass,
            })
            .collect();
        let all_pass = checks.iter().all(|c| c.pass);
        Self {
            artifact_version: ARTIFACT_VERSION.to_string(),
            command: command.to_string(),
            config,
            wall_clock_ms: 0,
            checks,
            outputs,
            all_pass,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}
