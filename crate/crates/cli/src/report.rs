//! JSON reports and CSV side tables under the output directory.

use std::fmt::Display;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), pass, detail: detail.into() }
    }
}

#[derive(Clone, Debug)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

/// Cell text for a table row.
pub fn cell(v: impl Display) -> String {
    v.to_string()
}

/// Everything needed to write one report.
pub struct Report {
    pub command: String,
    pub scene: Value,
    pub params: Value,
    pub result: Value,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn new(command: &str, scene: Value, params: Value) -> Self {
        Report { command: command.into(), scene, params, result: Value::Null, checks: Vec::new(), tables: Vec::new() }
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Hash of command, scene, parameters and crate version.
    pub fn hash(&self) -> String {
        let key = json!({
            "command": self.command,
            "scene": self.scene,
            "params": self.params,
            "version": env!("CARGO_PKG_VERSION"),
        });
        let digest = Sha256::digest(key.to_string().as_bytes());
        hex::encode(&digest[..8])
    }

    /// Write `<command>-<hash>.json` and one CSV per table; returns the JSON path.
    pub fn write(&self, dir: &Path) -> std::io::Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let stem = format!("{}-{}", self.command, self.hash());
        let mut names = Vec::new();
        for t in &self.tables {
            let name = format!("{stem}-{}.csv", t.name);
            std::fs::write(dir.join(&name), t.to_csv())?;
            names.push(name);
        }
        let doc = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "scene_hash": self.hash(),
            "scene": self.scene,
            "params": self.params,
            "result": self.result,
            "checks": self.checks,
            "tables": names,
        });
        let path = dir.join(format!("{stem}.json"));
        let mut text = serde_json::to_string_pretty(&doc).map_err(std::io::Error::other)?;
        text.push('\n');
        std::fs::write(&path, text)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_inputs_write_identical_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let make = || {
            let mut r = Report::new("capacity", json!({"set": 1}), json!({"kmax": 200}));
            r.result = json!({"capacity": 0.5123});
            let mut t = Table::new("delta", &["k", "delta_k"]);
            t.push(vec![cell(2), cell(1.5)]);
            r.tables.push(t);
            r
        };
        let a = make().write(dir.path()).unwrap();
        let first = std::fs::read(&a).unwrap();
        let b = make().write(dir.path()).unwrap();
        assert_eq!(a, b);
        assert_eq!(first, std::fs::read(&b).unwrap());
        let csv = std::fs::read_to_string(dir.path().join(format!("capacity-{}-delta.csv", make().hash()))).unwrap();
        assert_eq!(csv, "k,delta_k\n2,1.5\n");
        let mut other = make();
        other.params = json!({"kmax": 100});
        assert_ne!(other.hash(), make().hash());
    }
}
