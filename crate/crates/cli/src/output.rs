//! Atomic CSV/JSON emission with provenance sidecars.
//!
//! CSV conventions: one header row, '.' decimal separator, full double
//! precision (17 significant digits). Every file is written to a unique
//! temporary name and renamed into place.

use anyhow::{Context, Result};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Format a float with 17 significant digits.
pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("cannot create {}", parent.display()))?;
    }
    let tmp = path.with_extension(format!(
        "tmp.{}.{}",
        std::process::id(),
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.subsec_nanos())
            .unwrap_or(0)
    ));
    std::fs::write(&tmp, bytes).with_context(|| format!("cannot write {}", tmp.display()))?;
    std::fs::rename(&tmp, path)
        .with_context(|| format!("cannot publish {}", path.display()))?;
    Ok(())
}

/// CSV table accumulated row by row, then written atomically.
pub struct CsvTable {
    header: Vec<String>,
    body: String,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Self {
        CsvTable { header: columns.iter().map(|s| s.to_string()).collect(), body: String::new() }
    }

    pub fn push_row(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.header.len(), "row width mismatch");
        let mut first = true;
        for v in values {
            if !first {
                self.body.push(',');
            }
            let _ = write!(self.body, "{}", fmt(*v));
            first = false;
        }
        self.body.push('\n');
    }

    /// Mixed row for tables with leading integer columns.
    pub fn push_row_mixed(&mut self, ints: &[i64], values: &[f64]) {
        assert_eq!(ints.len() + values.len(), self.header.len(), "row width mismatch");
        let mut first = true;
        for i in ints {
            if !first {
                self.body.push(',');
            }
            let _ = write!(self.body, "{i}");
            first = false;
        }
        for v in values {
            if !first {
                self.body.push(',');
            }
            let _ = write!(self.body, "{}", fmt(*v));
            first = false;
        }
        self.body.push('\n');
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = self.header.join(",");
        text.push('\n');
        text.push_str(&self.body);
        write_atomic(path, text.as_bytes())
    }
}

/// Provenance written next to every output file.
#[derive(Debug, Serialize)]
pub struct Sidecar<'a, C: Serialize> {
    pub package_version: &'a str,
    pub matrix_construction_version: u32,
    pub experiment: &'a str,
    pub seed: u64,
    pub config: &'a C,
    /// (n_tr, value) evidence from the convergence sweep, when auto mode ran.
    pub ntr_evidence: Option<&'a [(usize, f64)]>,
    pub cache_hits: u64,
    pub cache_computes: u64,
    pub outputs: &'a [PathBuf],
}

pub fn write_sidecar<C: Serialize>(path: &Path, sidecar: &Sidecar<'_, C>) -> Result<()> {
    let text = serde_json::to_string_pretty(sidecar)?;
    write_atomic(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_uses_full_precision() {
        let mut t = CsvTable::new(&["a", "b"]);
        t.push_row(&[1.0 / 3.0, 2.0]);
        let dir = std::env::temp_dir().join(format!("rabi-out-test-{}", std::process::id()));
        let path = dir.join("t.csv");
        t.write(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("a,b\n"));
        assert!(text.contains("3.3333333333333331e-1"), "{text}");
        let _ = std::fs::remove_dir_all(&dir);
    }
}
