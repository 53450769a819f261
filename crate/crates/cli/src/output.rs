//! CSV writing in C-style scientific notation and the per-run output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// Formats `v` like C's `%.12e`: twelve fraction digits and a signed exponent
/// of at least two digits.
pub fn sci(v: f64) -> String {
    if v.is_nan() {
        return "nan".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let s = format!("{v:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// A CSV table assembled in memory and written once.
#[derive(Debug, Clone, Default)]
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut csv = Self::default();
        csv.row(header.iter().map(|h| h.to_string()));
        csv
    }

    pub fn row<I, S>(&mut self, cells: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let cells: Vec<String> = cells.into_iter().map(|c| c.as_ref().to_string()).collect();
        let _ = writeln!(self.text, "{}", cells.join(","));
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// One output directory per run. Files carry a `# generated <time>` first line
/// unless timestamps are suppressed.
#[derive(Debug, Clone)]
pub struct OutputDir {
    pub path: PathBuf,
    timestamp: Option<String>,
}

impl OutputDir {
    pub fn create(path: &Path, timestamp: bool) -> Result<Self, CliError> {
        fs::create_dir_all(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
        let timestamp = timestamp.then(|| {
            let secs = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs());
            format!("# generated unix {secs}\n")
        });
        Ok(Self { path: path.to_path_buf(), timestamp })
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    fn write(&self, name: &str, body: &str, stamped: bool) -> Result<(), CliError> {
        let path = self.file(name);
        let mut text = String::new();
        if stamped {
            if let Some(t) = &self.timestamp {
                text.push_str(t);
            }
        }
        text.push_str(body);
        fs::write(&path, text).map_err(|e| CliError::Io { path, source: e })
    }

    /// Writes a CSV with no timestamp, so its bytes depend only on the run.
    pub fn csv(&self, name: &str, csv: &Csv) -> Result<(), CliError> {
        self.write(name, csv.as_str(), false)
    }

    /// Writes a file headed by the timestamp line.
    pub fn stamped(&self, name: &str, body: &str) -> Result<(), CliError> {
        self.write(name, body, true)
    }
}
