//! Output directory handling: CSV and JSON writers and the run manifest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::failure::Failure;

pub const MANIFEST: &str = "manifest.json";

/// Full-precision decimal: 17 significant digits round-trip any `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Record of one invocation, written last into the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub inputs: Vec<String>,
    pub out_dir: String,
    pub seed: u64,
    pub version: String,
    /// RFC 3339, UTC. The only field that differs between identical runs.
    pub timestamp: String,
    /// File names relative to `out_dir`, in the order they were written.
    pub outputs: Vec<String>,
}

/// Output directory that remembers what was written into it.
pub struct OutDir {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self, Failure> {
        std::fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn note(&mut self, name: &str) {
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::io(&path, e))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Failure::io(&path, e))?;
        self.note(name);
        Ok(())
    }

    pub fn csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<(), Failure>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let path = self.path(name);
        let fail = |e: csv::Error| Failure::io(&path, e);
        let mut w = csv::Writer::from_path(&path).map_err(fail)?;
        w.write_record(header).map_err(fail)?;
        for row in rows {
            w.write_record(&row).map_err(fail)?;
        }
        w.flush().map_err(|e| Failure::io(&path, e))?;
        self.note(name);
        Ok(())
    }

    pub fn finish(mut self, subcommand: &str, inputs: Vec<String>, seed: u64) -> Result<RunManifest, Failure> {
        let manifest = RunManifest {
            subcommand: subcommand.to_string(),
            inputs,
            out_dir: self.dir.display().to_string(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            outputs: self.written.clone(),
        };
        self.json(MANIFEST, &manifest)?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            let digits = s.split('e').next().unwrap().chars().filter(char::is_ascii_digit).count();
            assert_eq!(digits, 17);
        }
    }
}
