//! Experiment results: tables, fits, verdicts and their on-disk layout.
//!
//! A result directory holds `manifest.json`, `result.json` and one CSV per
//! table under `tables/`. The manifest records a SHA-256 of every table so
//! [`verify_result`] can detect edited outputs.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::numerics::SlopeFit;
use crate::{Error, Result};

/// Version tag mixed into every manifest hash. Bump it whenever a recipe's
/// numerical output changes for an unchanged config.
pub const CODE_VERSION: &str = concat!("geolab-", env!("CARGO_PKG_VERSION"), "+recipes.1");

/// A named table of stringly cells; numbers are written in shortest round-trip form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// How `geolab plot` should draw the table; absent means first two columns as a line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot: Option<PlotSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlotSpec {
    pub x: String,
    pub y: String,
    /// Column splitting the rows into one series per distinct value.
    pub group: Option<String>,
    pub log_x: bool,
    pub log_y: bool,
    pub scatter: bool,
}

impl PlotSpec {
    pub fn line(x: &str, y: &str) -> Self {
        Self {
            x: x.to_string(),
            y: y.to_string(),
            group: None,
            log_x: false,
            log_y: false,
            scatter: false,
        }
    }

    pub fn grouped(mut self, by: &str) -> Self {
        self.group = Some(by.to_string());
        self
    }

    pub fn loglog(mut self) -> Self {
        self.log_x = true;
        self.log_y = true;
        self
    }

    pub fn scatter(mut self) -> Self {
        self.scatter = true;
        self
    }
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            plot: None,
        }
    }

    pub fn with_plot(mut self, plot: PlotSpec) -> Self {
        self.plot = Some(plot);
        self
    }

    /// Append a row; panics on a width mismatch since that is a recipe bug.
    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row.into_iter().map(|c| c.to_string()).collect());
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// A table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    S(String),
    /// An absent value, written as an empty cell.
    None,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::F(x) => write!(f, "{x:?}"),
            Cell::I(i) => write!(f, "{i}"),
            Cell::S(s) => f.write_str(s),
            Cell::None => Ok(()),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::I(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::I(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::S(x.to_string())
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::S(x.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::None, Cell::F)
    }
}

/// Acceptance comparison of a verdict's value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Check {
    AtMost { bound: f64 },
    AtLeast { bound: f64 },
    Within { low: f64, high: f64 },
    /// A boolean outcome encoded as value 1 (true) or 0 (false).
    Holds,
}

impl Check {
    pub fn passes(&self, value: f64) -> bool {
        self.margin(value) >= 0.0
    }

    /// Distance from the value to the nearest violation; negative when failing.
    pub fn margin(&self, value: f64) -> f64 {
        if value.is_nan() {
            return f64::NEG_INFINITY;
        }
        match *self {
            Check::AtMost { bound } => bound - value,
            Check::AtLeast { bound } => value - bound,
            Check::Within { low, high } => (value - low).min(high - value),
            Check::Holds => {
                if value == 1.0 {
                    0.0
                } else {
                    -1.0
                }
            }
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Check::AtMost { bound } => write!(f, "<= {bound}"),
            Check::AtLeast { bound } => write!(f, ">= {bound}"),
            Check::Within { low, high } => write!(f, "in [{low}, {high}]"),
            Check::Holds => f.write_str("holds"),
        }
    }
}

/// JSON has no NaN or infinity; those values are stored as strings.
mod nonfinite {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// A named pass/fail outcome tied to a row range of one table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    /// Acceptance criterion number the verdict implements, if any.
    pub criterion: Option<u32>,
    #[serde(with = "nonfinite")]
    pub value: f64,
    pub check: Check,
    pub passed: bool,
    #[serde(with = "nonfinite")]
    pub margin: f64,
    pub table: String,
    /// Half-open row range of `table` the value was computed from.
    pub rows: (usize, usize),
    pub detail: String,
}

impl Verdict {
    pub fn new(name: &str, criterion: Option<u32>, value: f64, check: Check, table: &Table, rows: (usize, usize)) -> Self {
        Self {
            name: name.to_string(),
            criterion,
            value,
            check,
            passed: check.passes(value),
            margin: check.margin(value),
            table: table.name.clone(),
            rows,
            detail: String::new(),
        }
    }

    pub fn holds(name: &str, criterion: Option<u32>, ok: bool, table: &Table, rows: (usize, usize)) -> Self {
        Self::new(name, criterion, if ok { 1.0 } else { 0.0 }, Check::Holds, table, rows)
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    /// One human-readable status line.
    pub fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        let crit = self.criterion.map(|c| format!(" [criterion {c}]")).unwrap_or_default();
        let mut s = format!("{tag} {}{crit}: value {} {} (margin {:.3e})", self.name, self.value, self.check, self.margin);
        if !self.detail.is_empty() {
            s.push_str(" -- ");
            s.push_str(&self.detail);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    /// Canonical config echo: every key of the experiment's schema.
    pub config: BTreeMap<String, String>,
    pub code_version: String,
    /// SHA-256 of the canonical config text and the code version.
    pub hash: String,
    pub wall_time_secs: f64,
    /// SHA-256 of each table's CSV bytes.
    pub table_hashes: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub manifest: Manifest,
    pub tables: Vec<Table>,
    pub fits: BTreeMap<String, SlopeFit>,
    pub verdicts: Vec<Verdict>,
}

impl ExperimentResult {
    pub fn table(&self, name: &str) -> Result<&Table> {
        self.tables
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::MissingTable(name.to_string()))
    }

    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    /// Write the result directory layout under `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let tables = dir.join("tables");
        std::fs::create_dir_all(&tables).map_err(|e| Error::io(&tables, e))?;
        for t in &self.tables {
            let path = tables.join(format!("{}.csv", t.name));
            std::fs::write(&path, t.to_csv()).map_err(|e| Error::io(&path, e))?;
        }
        write_json(&dir.join("manifest.json"), &self.manifest)?;
        write_json(&dir.join("result.json"), self)
    }

    /// Load from a result directory or a `result.json` path.
    pub fn load(path: &Path) -> Result<Self> {
        let file = result_file(path);
        let text = std::fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// `result.json` inside a directory, or the path itself when it names a file.
pub fn result_file(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join("result.json")
    } else {
        path.to_path_buf()
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Manifest hash: a pure function of the canonical config and [`CODE_VERSION`].
pub fn config_hash(canonical: &str) -> String {
    let mut h = Sha256::new();
    h.update(CODE_VERSION.as_bytes());
    h.update(b"\n");
    h.update(canonical.as_bytes());
    hex::encode(h.finalize())
}

/// Outcome of re-checking a stored result.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub lines: Vec<String>,
    /// Integrity problems: hash mismatches, edited tables, inconsistent verdicts.
    pub problems: Vec<String>,
    pub all_passed: bool,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.all_passed && self.problems.is_empty()
    }
}

/// Re-evaluate every verdict from its stored value and check the manifest,
/// table hashes and (when present) the CSV files on disk.
pub fn verify_result(path: &Path) -> Result<VerifyReport> {
    let result = ExperimentResult::load(path)?;
    let mut problems = Vec::new();
    let canonical: String = result
        .manifest
        .config
        .iter()
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect();
    let mut h = Sha256::new();
    h.update(result.manifest.code_version.as_bytes());
    h.update(b"\n");
    h.update(canonical.as_bytes());
    if hex::encode(h.finalize()) != result.manifest.hash {
        problems.push("manifest hash does not match the config echo".to_string());
    }
    let dir = result_file(path).parent().map(Path::to_path_buf).unwrap_or_default();
    for t in &result.tables {
        let csv = t.to_csv();
        let expect = result.manifest.table_hashes.get(&t.name);
        if expect != Some(&sha256_hex(csv.as_bytes())) {
            problems.push(format!("table {} does not match its manifest hash", t.name));
        }
        let on_disk = dir.join("tables").join(format!("{}.csv", t.name));
        if let Ok(bytes) = std::fs::read(&on_disk) {
            if bytes != csv.as_bytes() {
                problems.push(format!("{} differs from the stored table", on_disk.display()));
            }
        }
    }
    let mut lines = Vec::new();
    let mut all_passed = true;
    for v in &result.verdicts {
        let recomputed = v.check.passes(v.value);
        if recomputed != v.passed {
            problems.push(format!("verdict {} is stored as {} but its value gives {}", v.name, v.passed, recomputed));
        }
        match result.tables.iter().find(|t| t.name == v.table) {
            Some(t) if v.rows.0 <= v.rows.1 && v.rows.1 <= t.len() => {}
            _ => problems.push(format!("verdict {} references rows {:?} of table {} which do not exist", v.name, v.rows, v.table)),
        }
        all_passed &= recomputed;
        let mut checked = v.clone();
        checked.passed = recomputed;
        checked.margin = v.check.margin(v.value);
        lines.push(checked.line());
    }
    Ok(VerifyReport {
        lines,
        problems,
        all_passed,
    })
}
