//! Run manifests: `<output>.manifest.json` next to each output file.
//!
//! A manifest records the command, the tool version, the effective options
//! and a SHA-256 of every input and output. It has no timestamps, so two
//! identical runs write identical manifests.

use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> io::Result<Self> {
        let data = std::fs::read(path)?;
        Ok(FileDigest {
            path: path.display().to_string(),
            bytes: data.len() as u64,
            sha256: hex::encode(Sha256::digest(&data)),
        })
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub command: &'a str,
    pub version: &'a str,
    pub config: &'a C,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

pub fn write<C: Serialize>(command: &str, config: &C, inputs: &[&Path], outputs: &[&Path]) -> io::Result<PathBuf> {
    let digest = |paths: &[&Path]| paths.iter().map(|p| FileDigest::of(p)).collect::<io::Result<Vec<_>>>();
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config,
        inputs: digest(inputs)?,
        outputs: digest(outputs)?,
    };
    let path = manifest_path(outputs[0]);
    let mut text = serde_json::to_string_pretty(&manifest).map_err(io::Error::other)?;
    text.push('\n');
    std::fs::write(&path, text)?;
    Ok(path)
}
