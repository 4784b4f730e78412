//! Artifact writers. Every file is written to a temporary sibling and renamed
//! into place, so an interrupted run never leaves a truncated file.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::CliError;

pub struct OutputDir {
    root: PathBuf,
    hash: String,
    counts: BTreeMap<String, usize>,
    formats: Vec<String>,
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}

impl OutputDir {
    pub fn create(root: &Path, config: &ExperimentConfig) -> Result<Self, CliError> {
        fs::create_dir_all(root)?;
        let out = Self {
            root: root.to_path_buf(),
            hash: config.hash(),
            counts: BTreeMap::new(),
            formats: config.output.formats.clone(),
        };
        write_atomic(&out.root.join("config.resolved.toml"), config.to_toml().as_bytes())?;
        Ok(out)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn counts(&self) -> &BTreeMap<String, usize> {
        &self.counts
    }

    fn wants(&self, format: &str) -> bool {
        self.formats.iter().any(|f| f == format)
    }

    /// One JSON object per line, each tagged with the config hash.
    pub fn jsonl<T: Serialize>(&mut self, name: &str, records: &[T]) -> Result<(), CliError> {
        if !self.wants("jsonl") {
            return Ok(());
        }
        let mut text = String::new();
        for r in records {
            let mut v = serde_json::to_value(r).map_err(|e| CliError::Internal(e.to_string()))?;
            if let Value::Object(map) = &mut v {
                map.insert("config_hash".into(), Value::String(self.hash.clone()));
            }
            text.push_str(&serde_json::to_string(&v).map_err(|e| CliError::Internal(e.to_string()))?);
            text.push('\n');
        }
        self.finish(&format!("{name}.jsonl"), text, records.len())
    }

    /// Comma-separated table with a leading `# config_hash` comment.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        if !self.wants("csv") {
            return Ok(());
        }
        let mut text = format!("# config_hash={}\n{}\n", self.hash, header.join(","));
        for row in rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.finish(&format!("{name}.csv"), text, rows.len())
    }

    /// Whitespace-separated blocks for gnuplot; blocks are separated by two
    /// blank lines so `index` selects them. Empty input writes nothing.
    pub fn plot(&mut self, name: &str, columns: &[&str], blocks: &[(String, Vec<Vec<f64>>)]) -> Result<(), CliError> {
        if !self.wants("dat") {
            return Ok(());
        }
        if blocks.iter().all(|(_, rows)| rows.is_empty()) {
            eprintln!("warning: no data for plot table {name}");
            return Ok(());
        }
        let mut text = format!("# config_hash={}\n# {}\n", self.hash, columns.join(" "));
        let mut count = 0;
        for (k, (label, rows)) in blocks.iter().enumerate() {
            if k > 0 {
                text.push_str("\n\n");
            }
            text.push_str(&format!("# {label}\n"));
            for row in rows {
                let cells: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
                text.push_str(&cells.join(" "));
                text.push('\n');
                count += 1;
            }
        }
        self.finish(&format!("{name}.dat"), text, count)
    }

    fn finish(&mut self, file: &str, text: String, count: usize) -> Result<(), CliError> {
        write_atomic(&self.root.join(file), text.as_bytes())?;
        self.counts.insert(file.to_string(), count);
        Ok(())
    }
}

#[derive(Serialize)]
pub struct RunManifest<'a> {
    pub config_hash: &'a str,
    pub artifact_version: &'a str,
    pub subcommand: &'a str,
    pub threads: usize,
    pub started_unix_seconds: u64,
    pub wall_clock_seconds: f64,
    pub record_counts: &'a BTreeMap<String, usize>,
    pub notes: &'a [String],
}

pub fn write_manifest(dir: &OutputDir, manifest: &RunManifest<'_>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(manifest).map_err(|e| CliError::Internal(e.to_string()))?;
    write_atomic(&dir.root().join("manifest.json"), text.as_bytes())
}

/// Shortest round-trip rendering, stable across runs.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn tables_carry_hash() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::default();
        let mut out = OutputDir::create(dir.path(), &cfg).unwrap();
        out.csv("t", &["a", "b"], &[vec!["1".into(), "2".into()]]).unwrap();
        out.plot("p", &["x", "y"], &[("s".into(), vec![vec![1.0, 2.0]])]).unwrap();
        out.plot("empty", &["x"], &[]).unwrap();
        let csv = fs::read_to_string(dir.path().join("t.csv")).unwrap();
        assert!(csv.starts_with(&format!("# config_hash={}", cfg.hash())));
        assert!(dir.path().join("p.dat").exists());
        assert!(!dir.path().join("empty.dat").exists());
        assert_eq!(out.counts()["t.csv"], 1);
    }
}
