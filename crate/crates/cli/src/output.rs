//! Deterministic file emission and the run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Format;

/// Column-major numeric table with a fixed header.
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&'static str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// 17 significant digits, so values round-trip.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv(t: &Table) -> String {
    let mut s = t.columns.join(",");
    s.push('\n');
    for row in &t.rows {
        let cells: Vec<String> = row.iter().map(|&x| num(x)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

fn json_table(t: &Table) -> Result<String> {
    let rows: Vec<BTreeMap<&str, f64>> = t
        .rows
        .iter()
        .map(|row| t.columns.iter().copied().zip(row.iter().copied()).collect())
        .collect();
    Ok(serde_json::to_string_pretty(&rows)? + "\n")
}

/// Gnuplot data: first column against each of the others.
fn plot(t: &Table, col: usize) -> String {
    let mut s = format!("# {} {}\n", t.columns[0], t.columns[col]);
    for row in &t.rows {
        let _ = writeln!(s, "{} {}", num(row[0]), num(row[col]));
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Writes files under one directory and records their digests.
pub struct Emitter {
    dir: PathBuf,
    format: Format,
    files: Vec<FileEntry>,
}

impl Emitter {
    pub fn new(dir: &Path, format: Format) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, content: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(FileEntry {
            path: name.to_string(),
            bytes: content.len(),
            sha256: hex::encode(Sha256::digest(content.as_bytes())),
        });
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value)? + "\n";
        self.write(name, &text)
    }

    pub fn table(&mut self, t: &Table) -> Result<()> {
        match self.format {
            Format::Csv => self.write(&format!("{}.csv", t.name), &csv(t)),
            Format::Json => self.write(&format!("{}.json", t.name), &json_table(t)?),
            Format::Plot => {
                for col in 1..t.columns.len() {
                    let name = format!("{}_{}.dat", t.name, t.columns[col]);
                    self.write(&name, &plot(t, col))?;
                }
                Ok(())
            }
        }
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub command: &'a str,
    pub config: BTreeMap<&'static str, String>,
    pub library_version: &'static str,
    pub wall_time_s: f64,
    pub status: &'a str,
    pub files: &'a [FileEntry],
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> Table {
        let mut t = Table::new("demo", &["r", "H"]);
        t.push(vec![0.0, 0.5]);
        t.push(vec![-1.25, 1.0 / 3.0]);
        t
    }

    #[test]
    fn csv_uses_fixed_scientific_notation() {
        let s = csv(&table());
        assert_eq!(
            s,
            "r,H\n0.0000000000000000e0,5.0000000000000000e-1\n-1.2500000000000000e0,3.3333333333333331e-1\n"
        );
        let back: f64 = s
            .lines()
            .nth(2)
            .unwrap()
            .split(',')
            .nth(1)
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(back, 1.0 / 3.0);
    }

    #[test]
    fn plot_splits_columns() {
        assert_eq!(plot(&table(), 1).lines().count(), 3);
    }

    #[test]
    fn digests_match_written_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let mut e = Emitter::new(dir.path(), Format::Json).unwrap();
        e.table(&table()).unwrap();
        let f = &e.files()[0];
        let bytes = std::fs::read(dir.path().join(&f.path)).unwrap();
        assert_eq!(f.bytes, bytes.len());
        assert_eq!(f.sha256, hex::encode(Sha256::digest(&bytes)));
    }
}
