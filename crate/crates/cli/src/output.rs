//! Input digests, the result envelope and overwrite-guarded output.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const TOOL: &str = "medgraph";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reads an input file and records its digest. A missing or unreadable file is a usage error.
pub fn read_input(path: &Path, inputs: &mut Vec<InputDigest>) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::usage("missing_file", e.to_string()).at(path.display().to_string()))?;
    inputs.push(InputDigest { path: path.display().to_string(), sha256: sha256_hex(&bytes) });
    String::from_utf8(bytes).map_err(|_| CliError::usage("bad_encoding", "input is not UTF-8").at(path.display().to_string()))
}

/// Wrapper written around every JSON result.
#[derive(Debug, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: Option<u64>,
    pub inputs: &'a [InputDigest],
    pub result: T,
}

impl<'a, T: Serialize> Envelope<'a, T> {
    pub fn new(command: &'static str, seed: Option<u64>, inputs: &'a [InputDigest], result: T) -> Self {
        Envelope { tool: TOOL, version: VERSION, command, seed, inputs, result }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("results serialize");
        s.push('\n');
        s
    }
}

/// 17 significant digits, the format of every float in CSV artifacts.
pub fn sig17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// Where single-document output goes: stdout or a file that is only replaced with `--force`.
#[derive(Debug, Clone)]
pub struct Sink {
    pub path: Option<PathBuf>,
    pub force: bool,
}

impl Sink {
    pub fn emit(&self, text: &str) -> CliResult<()> {
        match &self.path {
            Some(p) => write_guarded(p, text.as_bytes(), self.force),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| CliError::domain("io", e))
            }
        }
    }
}

/// Writes `bytes` to `path`, refusing to replace an existing file unless `force`.
pub fn write_guarded(path: &Path, bytes: &[u8], force: bool) -> CliResult<()> {
    if path.exists() && !force {
        return Err(CliError::usage("exists", "output exists; pass --force to overwrite").at(path.display().to_string()));
    }
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::domain("io", e).at(parent.display().to_string()))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::domain("io", e).at(path.display().to_string()))
}

/// An output directory whose files are all checked before any is written.
#[derive(Debug)]
pub struct OutDir {
    pub dir: PathBuf,
    pub force: bool,
}

/// A file written into an [`OutDir`], with its digest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Artifact {
    pub file: String,
    pub sha256: String,
}

impl OutDir {
    /// Fails before any work when one of `names` already exists and `force` is off.
    pub fn prepare(dir: &Path, names: &[&str], force: bool) -> CliResult<Self> {
        if !force {
            for name in names {
                let p = dir.join(name);
                if p.exists() {
                    return Err(CliError::usage("exists", "output exists; pass --force to overwrite").at(p.display().to_string()));
                }
            }
        }
        Ok(OutDir { dir: dir.to_path_buf(), force })
    }

    pub fn write(&self, name: &str, text: &str) -> CliResult<Artifact> {
        write_guarded(&self.dir.join(name), text.as_bytes(), self.force)?;
        Ok(Artifact { file: self.dir.join(name).display().to_string(), sha256: sha256_hex(text.as_bytes()) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 12345.678] {
            let s = sig17(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            assert_eq!(s.split('e').next().unwrap().chars().filter(|c| c.is_ascii_digit()).count(), 17);
        }
        assert_eq!(sig17(f64::NAN), "NaN");
    }

    #[test]
    fn guarded_write_refuses_existing_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.json");
        write_guarded(&p, b"1", false).unwrap();
        let err = write_guarded(&p, b"2", false).unwrap_err();
        assert_eq!(err.code, "exists");
        write_guarded(&p, b"2", true).unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"2");
    }
}
