//! `key=value` run manifests and file fingerprints.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.kv";

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(format!("sha256:{}", hex::encode(Sha256::digest(&bytes))))
}

/// Writes through a sibling temporary file so a failed run never leaves a
/// truncated artifact behind.
pub fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    let io_err = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err)?;
    }
    let file_name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{file_name}.tmp"));
    std::fs::write(&tmp, content).map_err(io_err)?;
    std::fs::rename(&tmp, path).map_err(io_err)
}

/// Ordered key-value pairs; keys are unique and values are single lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        let mut m = Manifest::default();
        m.set("toolkit", "emoxling");
        m.set("version", env!("CARGO_PKG_VERSION"));
        m.set("command", command);
        m
    }

    /// Replaces an existing key in place or appends.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string().replace(['\n', '\r'], " ");
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    /// Records path and content hash of an input file.
    pub fn add_input(&mut self, name: &str, path: &Path) -> Result<(), CliError> {
        self.set(&format!("input.{name}.path"), path.display());
        self.set(&format!("input.{name}.sha256"), sha256_file(path)?);
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    pub fn parse(content: &str) -> Result<Self, CliError> {
        let mut m = Manifest::default();
        for (i, line) in content.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Manifest(format!("line {}: expected key=value", i + 1)))?;
            if m.get(k).is_some() {
                return Err(CliError::Manifest(format!("line {}: duplicate key `{k}`", i + 1)));
            }
            m.entries.push((k.to_string(), v.to_string()));
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let content = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&content)
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        write_file(&dir.join(MANIFEST_FILE), &self.to_text())
    }

    /// Every recorded input whose current content hash differs.
    pub fn changed_inputs(&self) -> Result<Vec<String>, CliError> {
        let mut changed = Vec::new();
        for (k, v) in &self.entries {
            if let Some(name) = k.strip_prefix("input.").and_then(|r| r.strip_suffix(".sha256")) {
                let path = self
                    .get(&format!("input.{name}.path"))
                    .ok_or_else(|| CliError::Manifest(format!("no path for input `{name}`")))?;
                if sha256_file(Path::new(path))? != *v {
                    changed.push(name.to_string());
                }
            }
        }
        Ok(changed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut m = Manifest::new("run");
        m.set("seed", 3);
        m.set("config", "{\"a\":\"x=y\"}");
        m.set("seed", 4);
        let parsed = Manifest::parse(&m.to_text()).unwrap();
        assert_eq!(parsed, m);
        assert_eq!(parsed.get("seed"), Some("4"));
        assert_eq!(parsed.get("config"), Some("{\"a\":\"x=y\"}"));
        assert!(Manifest::parse("a=1\na=2\n").is_err());
        assert!(Manifest::parse("novalue\n").is_err());
    }

    #[test]
    fn fingerprints_detect_changes() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("data.tsv");
        std::fs::write(&f, "abc").unwrap();
        assert_eq!(
            sha256_file(&f).unwrap(),
            "sha256:ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        let mut m = Manifest::new("run");
        m.add_input("train", &f).unwrap();
        assert!(m.changed_inputs().unwrap().is_empty());
        std::fs::write(&f, "abd").unwrap();
        assert_eq!(m.changed_inputs().unwrap(), ["train"]);
    }

    #[test]
    fn write_file_creates_parents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a/b/out.txt");
        write_file(&p, "x").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "x");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    proptest::proptest! {
        #[test]
        fn text_round_trip(entries in proptest::collection::btree_map("[a-z][a-z0-9_.]{0,15}", "\\PC*", 0..12)) {
            let mut m = Manifest::default();
            for (k, v) in &entries {
                m.set(k, v);
            }
            let parsed = Manifest::parse(&m.to_text()).unwrap();
            proptest::prop_assert_eq!(&parsed, &m);
            for (k, v) in &entries {
                proptest::prop_assert_eq!(parsed.get(k), Some(v.as_str()));
            }
        }
    }
}
