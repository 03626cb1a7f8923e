//! Tabular output: CSV with a `#` header block, or JSON.
//!
//! Numbers are written with 15 significant digits in scientific notation,
//! `.` as decimal separator and LF line endings, so identical runs produce
//! identical bytes. The only run-dependent line is `# generated_unix`, which
//! `seedless` output omits.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const UNITS: &str =
    "time ns; angular frequency rad/ns (stored as value/2pi in GHz inside the config echo); rates 1/ns; phases rad; tau ps; energies meV; temperature K";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WriteOptions {
    pub format: Format,
    pub seedless: bool,
}

/// Column-oriented result with its metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub kind: String,
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(kind: &str, columns: &[&str]) -> Self {
        Self {
            kind: kind.to_string(),
            metadata: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.metadata.push((key.to_string(), value.to_string()));
        self
    }

    /// Records every `key = value` line of a TOML document under `config.`.
    pub fn meta_config(&mut self, toml_text: &str) -> &mut Self {
        let mut section = String::new();
        for line in toml_text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if line.starts_with('[') {
                section = line.trim_matches(|c| c == '[' || c == ']').to_string();
            } else if let Some((k, v)) = line.split_once('=') {
                let key = format!("config.{section}.{}", k.trim());
                self.metadata.push((key, v.trim().to_string()));
            }
        }
        self.meta("provenance", provenance(toml_text))
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn render(&self, opts: WriteOptions) -> String {
        match opts.format {
            Format::Csv => self.render_csv(opts.seedless),
            Format::Json => self.render_json(opts.seedless),
        }
    }

    fn header(&self, seedless: bool) -> Vec<(String, String)> {
        let mut h = vec![
            ("kind".to_string(), self.kind.clone()),
            ("generator".to_string(), format!("floqcav {}", env!("CARGO_PKG_VERSION"))),
            ("units".to_string(), UNITS.to_string()),
        ];
        if !seedless {
            let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            h.push(("generated_unix".to_string(), now.to_string()));
        }
        h.extend(self.metadata.iter().cloned());
        h
    }

    fn render_csv(&self, seedless: bool) -> String {
        let mut out = String::new();
        for (k, v) in self.header(seedless) {
            let _ = writeln!(out, "# {k} = {v}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| format_number(x)).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    fn render_json(&self, seedless: bool) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            metadata: serde_json::Map<String, serde_json::Value>,
            columns: &'a [String],
            rows: Vec<Vec<Option<f64>>>,
        }
        let metadata = self
            .header(seedless)
            .into_iter()
            .map(|(k, v)| (k, serde_json::Value::String(v)))
            .collect();
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().map(|&x| x.is_finite().then_some(x)).collect())
            .collect();
        let mut s = serde_json::to_string_pretty(&Doc { metadata, columns: &self.columns, rows })
            .expect("table serialises");
        s.push('\n');
        s
    }

    pub fn write_to(&self, path: &Path, opts: WriteOptions) -> io::Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let mut f = io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(self.render(opts).as_bytes())?;
        f.flush()
    }
}

/// `{:.14e}`: 15 significant digits.
pub fn format_number(x: f64) -> String {
    format!("{x:.14e}")
}

/// Version plus a short digest of the configuration text.
pub fn provenance(config_text: &str) -> String {
    let digest = Sha256::digest(config_text.as_bytes());
    let hex: String = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
    format!("floqcav-{}+cfg.{hex}", env!("CARGO_PKG_VERSION"))
}

/// Drops the run-dependent header line.
pub fn body_without_timestamp(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with("# generated_unix"))
        .map(|l| format!("{l}\n"))
        .collect()
}
