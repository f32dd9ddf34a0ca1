//! Run persistence: deterministic CSV/JSON emission, content hashing, and the
//! RunRecord summary each experiment leaves behind.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub format: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub experiment: String,
    pub config_echo: String,
    pub config_hash: String,
    /// Wall-clock stamp; excluded from every hash.
    pub timestamp: String,
    pub outputs: Vec<OutputEntry>,
    pub summary: BTreeMap<String, f64>,
    pub summary_hash: String,
    pub failures: Vec<String>,
}

pub fn sha256_hex(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// 17-significant-digit decimal rendering used for all numeric output.
pub fn fmt_g17(v: f64) -> String {
    format!("{v:.16e}")
}

impl RunRecord {
    pub fn new(experiment: &str, config_echo: String) -> Self {
        let config_hash = sha256_hex(&config_echo);
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs().to_string())
            .unwrap_or_default();
        RunRecord {
            experiment: experiment.to_string(),
            config_echo,
            config_hash,
            timestamp,
            outputs: Vec::new(),
            summary: BTreeMap::new(),
            summary_hash: String::new(),
            failures: Vec::new(),
        }
    }

    pub fn put(&mut self, key: &str, value: f64) {
        self.summary.insert(key.to_string(), value);
    }

    pub fn fail(&mut self, message: impl Into<String>) {
        self.failures.push(message.into());
    }

    /// Hash over config hash + canonical summary rendering (timestamp and
    /// output paths excluded).
    pub fn seal(&mut self) {
        let mut text = String::new();
        let _ = writeln!(text, "config {}", self.config_hash);
        for (k, v) in &self.summary {
            let _ = writeln!(text, "{k} = {}", fmt_g17(*v));
        }
        self.summary_hash = sha256_hex(&text);
    }

    pub fn write_json(&self, dir: &Path) -> std::io::Result<PathBuf> {
        let path = dir.join(format!("{}_summary.json", self.experiment));
        let json = serde_json::to_string_pretty(self).expect("serializable");
        std::fs::write(&path, json)?;
        Ok(path)
    }
}

/// CSV with a header row, comma separator, 17 significant digits.
pub fn write_csv(
    dir: &Path,
    name: &str,
    header: &[&str],
    rows: &[Vec<f64>],
) -> std::io::Result<PathBuf> {
    let mut text = String::new();
    let _ = writeln!(text, "{}", header.join(","));
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| fmt_g17(*v)).collect();
        let _ = writeln!(text, "{}", line.join(","));
    }
    let path = dir.join(name);
    std::fs::write(&path, text)?;
    Ok(path)
}

/// Parse back a CSV written by `write_csv` (round-trip property).
pub fn read_csv(path: &Path) -> std::io::Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .unwrap_or("")
        .split(',')
        .map(|s| s.to_string())
        .collect();
    let mut rows = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line.split(',').map(|v| v.parse().unwrap_or(f64::NAN)).collect();
        rows.push(row);
    }
    Ok((header, rows))
}

/// Companion gnuplot script so profiles can be rendered externally.
pub fn write_plot_script(dir: &Path, name: &str, csvs: &[&str]) -> std::io::Result<PathBuf> {
    let mut text = String::from("set datafile separator ','\nset logscale xy\nset key autotitle columnhead\n");
    for csv in csvs {
        let _ = writeln!(text, "plot '{csv}' using 1:2 with lines");
        let _ = writeln!(text, "pause -1");
    }
    let path = dir.join(format!("{name}_plot.gp"));
    std::fs::write(&path, text)?;
    Ok(path)
}
