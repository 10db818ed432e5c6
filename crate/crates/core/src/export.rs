//! Plain-text artifacts: CSV tables, `key = value` summaries and a JSON
//! manifest describing every file written to an output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Named columns of equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub data: Vec<Vec<f64>>,
}

impl Table {
    pub fn new() -> Self {
        Table {
            columns: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn with(mut self, name: &str, values: &[f64]) -> Self {
        self.columns.push(name.to_string());
        self.data.push(values.to_vec());
        self
    }

    pub fn rows(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    fn check(&self) -> Result<()> {
        let rows = self.rows();
        if let Some((i, _)) = self.data.iter().enumerate().find(|(_, c)| c.len() != rows) {
            return Err(Error::InvalidArgument(format!(
                "column {} has {} rows, expected {rows}",
                self.columns[i],
                self.data[i].len()
            )));
        }
        Ok(())
    }
}

impl Default for Table {
    fn default() -> Self {
        Table::new()
    }
}

/// Format a value with 17 significant digits.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Header row plus one line per row, comma separated, LF terminated.
pub fn format_csv(table: &Table) -> Result<String> {
    table.check()?;
    let mut out = table.columns.join(",");
    out.push('\n');
    for r in 0..table.rows() {
        for (c, col) in table.data.iter().enumerate() {
            if c > 0 {
                out.push(',');
            }
            let _ = write!(out, "{:.16e}", col[r]);
        }
        out.push('\n');
    }
    Ok(out)
}

/// Parse a CSV written by [`format_csv`].
pub fn parse_csv(text: &str) -> Result<Table> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InsufficientData("empty CSV".into()))?;
    let columns: Vec<String> = header.split(',').map(str::to_string).collect();
    let mut data = vec![Vec::new(); columns.len()];
    for (n, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(Error::InvalidArgument(format!(
                "CSV row {} has {} fields",
                n + 1,
                fields.len()
            )));
        }
        for (col, f) in data.iter_mut().zip(fields) {
            col.push(
                f.trim()
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad number {f:?} in CSV row {}", n + 1)))?,
            );
        }
    }
    Ok(Table { columns, data })
}

/// Ordered `key = value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    pub entries: Vec<(String, String)>,
}

impl Summary {
    pub fn new() -> Self {
        Summary::default()
    }

    pub fn text(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn number(&mut self, key: &str, value: f64) -> &mut Self {
        self.text(key, format_value(value))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn parse(text: &str) -> Summary {
        Summary {
            entries: text
                .lines()
                .filter_map(|l| l.split_once(" = "))
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileKind {
    Csv,
    Summary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub kind: FileKind,
    pub rows: usize,
    pub columns: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Writes artifacts into one directory and keeps the manifest up to date.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    manifest: Manifest,
}

impl OutputDir {
    pub fn create(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(&root)?;
        Ok(OutputDir {
            root,
            manifest: Manifest::default(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    fn record(&mut self, entry: ManifestEntry) {
        self.manifest.files.retain(|e| e.file != entry.file);
        self.manifest.files.push(entry);
    }

    pub fn write_csv(&mut self, name: &str, table: &Table) -> Result<PathBuf> {
        let path = self.root.join(name);
        fs::write(&path, format_csv(table)?)?;
        self.record(ManifestEntry {
            file: name.to_string(),
            kind: FileKind::Csv,
            rows: table.rows(),
            columns: table.columns.clone(),
        });
        Ok(path)
    }

    pub fn write_summary(&mut self, name: &str, summary: &Summary) -> Result<PathBuf> {
        let path = self.root.join(name);
        fs::write(&path, summary.render())?;
        self.record(ManifestEntry {
            file: name.to_string(),
            kind: FileKind::Summary,
            rows: summary.entries.len(),
            columns: vec!["key".into(), "value".into()],
        });
        Ok(path)
    }

    /// Write `manifest.json` listing every file recorded so far.
    pub fn finish(&self) -> Result<PathBuf> {
        let path = self.root.join(MANIFEST_NAME);
        let mut text = serde_json::to_string_pretty(&self.manifest)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let t = Table::new()
            .with("t", &[0.0, 0.1, 1.0 / 3.0])
            .with("x", &[-1e-300, std::f64::consts::PI, 6.02e23]);
        let text = format_csv(&t).unwrap();
        assert!(text.starts_with("t,x\n"));
        assert!(!text.contains('\r'));
        assert!(text.contains("3.1415926535897931e0"));
        assert_eq!(parse_csv(&text).unwrap(), t);
    }

    #[test]
    fn ragged_tables_rejected() {
        let t = Table::new().with("a", &[1.0, 2.0]).with("b", &[1.0]);
        assert!(format_csv(&t).is_err());
    }

    #[test]
    fn summary_round_trip() {
        let mut s = Summary::new();
        s.text("scenario", "fig1").number("period", 8.5);
        let parsed = Summary::parse(&s.render());
        assert_eq!(parsed, s);
        assert_eq!(parsed.get("period"), Some("8.5000000000000000e0"));
    }
}
