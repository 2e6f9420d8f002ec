//! Output directory handling, CSV tables, JSON envelopes and run manifests.
//!
//! CSV files are long format: a header row, one row per record, `.` as the
//! decimal separator and LF line endings. Numbers use the shortest
//! representation that round-trips, so equal inputs give equal bytes.

use std::path::{Component, Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Shortest round-trip text of `x`, switching to exponent form outside
/// [1e-4, 1e6).
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 {
        "0".to_string()
    } else if !x.is_finite() || (1e-4..1e6).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// In-memory CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| CliError::io("<csv buffer>", e.into_error()))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
    pub converged: bool,
}

/// A run's output directory. Every file lands directly inside it.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    records: Vec<OutputRecord>,
}

fn plain_name(name: &str) -> bool {
    let p = Path::new(name);
    let mut comps = p.components();
    matches!(comps.next(), Some(Component::Normal(_))) && comps.next().is_none()
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self { root: root.to_path_buf(), records: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn records(&self) -> &[OutputRecord] {
        &self.records
    }

    /// Write `bytes` to `<root>/<name>`; `name` must be a bare file name.
    pub fn write(&mut self, name: &str, bytes: &[u8], converged: bool) -> CliResult<PathBuf> {
        if !plain_name(name) {
            return Err(CliError::Usage(format!("output name `{name}` is not a plain file name")));
        }
        let path = self.root.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.records.push(OutputRecord {
            file: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            converged,
        });
        Ok(path)
    }

    pub fn write_table(&mut self, name: &str, table: &Table, converged: bool) -> CliResult<PathBuf> {
        let bytes = table.to_csv()?;
        self.write(name, &bytes, converged)
    }

    pub fn write_json(&mut self, name: &str, value: &Value, converged: bool) -> CliResult<PathBuf> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("json value serialises");
        bytes.push(b'\n');
        self.write(name, &bytes, converged)
    }

    /// Run manifest, written last.
    pub fn write_manifest(&mut self, provenance: &Value, wall_time_s: f64) -> CliResult<PathBuf> {
        let manifest = json!({
            "config_hash": provenance["config_hash"],
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "dispersion_model": provenance["dispersion_model"],
            "command": provenance["command"],
            "wall_time_s": wall_time_s,
            "outputs": self.records,
        });
        let path = self.root.join("manifest.json");
        let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serialises");
        bytes.push(b'\n');
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    /// Generic matplotlib script that plots every CSV written so far.
    pub fn write_plot_script(&mut self) -> CliResult<PathBuf> {
        let files: Vec<&str> =
            self.records.iter().filter(|r| r.file.ends_with(".csv")).map(|r| r.file.as_str()).collect();
        let list = files.iter().map(|f| format!("    {f:?},\n")).collect::<String>();
        let script = format!("{PLOT_HEAD}FILES = [\n{list}]\n{PLOT_BODY}");
        self.write("plot.py", script.as_bytes(), true)
    }
}

const PLOT_HEAD: &str = "\
#!/usr/bin/env python3
# Plots the CSV tables of one lgbright run. Run from the output directory.
import csv
import sys

import matplotlib.pyplot as plt

";

const PLOT_BODY: &str = r#"

def load(name):
    with open(name, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return rows


def num(v):
    try:
        return float(v)
    except ValueError:
        return None


for name in FILES:
    rows = load(name)
    if not rows:
        continue
    cols = [c for c in rows[0] if c != "kind" and num(rows[0][c]) is not None]
    if len(cols) < 2:
        continue
    x, y = cols[0], cols[-1]
    fig, ax = plt.subplots()
    kinds = sorted({r.get("kind", "data") for r in rows})
    for k in kinds:
        sel = [r for r in rows if r.get("kind", "data") == k]
        xs = [num(r[x]) for r in sel]
        ys = [num(r[y]) for r in sel]
        style = "-" if len(sel) > 20 else "o"
        ax.plot(xs, ys, style, label=k, markersize=3)
    ax.set_xlabel(x)
    ax.set_ylabel(y)
    ax.set_title(name)
    ax.legend()
    fig.savefig(name.rsplit(".", 1)[0] + ".png", dpi=150)
    plt.close(fig)

if "--show" in sys.argv:
    plt.show()
"#;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for x in [0.0, 0.7, 1.0, 1.2345678901234567, 3.2846e15, 2.5e-7, -4.0e-5, 123456.0] {
            assert_eq!(fmt_num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_num(0.7), "0.7");
        assert_eq!(fmt_num(3.2846e15), "3.2846e15");
    }

    #[test]
    fn csv_uses_lf_and_header() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        let s = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(s, "a,b\n1,\"x,y\"\n");
    }

    #[test]
    fn refuses_paths_outside_the_root() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        for bad in ["../x.csv", "/tmp/x.csv", "a/b.csv", "..", ""] {
            assert!(out.write(bad, b"x", true).is_err(), "{bad}");
        }
        out.write("ok.csv", b"x", true).unwrap();
        assert_eq!(out.records().len(), 1);
    }
}
