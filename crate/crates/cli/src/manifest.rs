use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST_NAME: &str = "run_manifest.txt";

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let mut file = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// `key = value` record of one command run: its settings plus SHA-256
/// digests of the files it read and wrote.
#[derive(Debug, Clone, Default)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        let mut m = Self::default();
        m.set("command", command);
        m.set("version", env!("CARGO_PKG_VERSION"));
        m
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    fn digest(&mut self, prefix: &str, label: &str, path: &Path) -> Result<(), CliError> {
        let hash = sha256_file(path)
            .map_err(|e| CliError::input(format!("cannot hash {}: {e}", path.display())))?;
        self.set(format!("{prefix}.{label}"), format!("{} sha256:{hash}", path.display()));
        Ok(())
    }

    pub fn input(&mut self, label: &str, path: &Path) -> Result<(), CliError> {
        self.digest("input", label, path)
    }

    pub fn output(&mut self, label: &str, path: &Path) -> Result<(), CliError> {
        self.digest("output", label, path)
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join(MANIFEST_NAME);
        File::create(&path)
            .and_then(|mut f| f.write_all(self.render().as_bytes()))
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
    }
}
