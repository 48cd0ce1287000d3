use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Output directory that remembers every artifact written into it.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::Io(format!("{}: {e}", root.display())))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write_with<F>(&mut self, name: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> splitstate::Result<()>,
    {
        let path = self.root.join(name);
        let file = File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        body(&mut w)?;
        w.flush()
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value).map_err(|e| splitstate::Error::Io(e.to_string()))?;
            writeln!(w)?;
            Ok(())
        })
    }

    /// Writes `manifest.json` last, listing everything before it.
    pub fn finish(mut self, manifest: Manifest) -> Result<Vec<String>, CliError> {
        let manifest = Manifest {
            outputs: self.files.clone(),
            ..manifest
        };
        self.write_json("manifest.json", &manifest)?;
        Ok(self.files)
    }
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub splitstate: &'static str,
    pub cli: &'static str,
}

/// Everything needed to rerun a job exactly.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: &'static str,
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub versions: Versions,
    pub config: Value,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &'static str, raw_config: &[u8], config: Value, seed: Option<u64>) -> Self {
        Self {
            command,
            config_sha256: sha256_hex(raw_config),
            seed,
            versions: Versions {
                splitstate: splitstate::VERSION,
                cli: env!("CARGO_PKG_VERSION"),
            },
            config,
            outputs: Vec::new(),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
