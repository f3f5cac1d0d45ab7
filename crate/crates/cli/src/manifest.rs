use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    Ok(sha256_bytes(&std::fs::read(path)?))
}

/// Digest of a directory's files, sorted by name, excluding its manifest.
pub fn sha256_dir(dir: &Path) -> std::io::Result<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_file())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n != MANIFEST)
        .collect();
    names.sort();
    let mut h = Sha256::new();
    for n in names {
        h.update(n.as_bytes());
        h.update([0]);
        h.update(sha256_file(&dir.join(&n))?.as_bytes());
    }
    Ok(hex::encode(h.finalize()))
}

/// Deterministic seed from the command name and its input digests, used when
/// `--seed` is omitted.
pub fn derive_seed(command: &str, inputs: &BTreeMap<String, String>) -> u64 {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    for (k, v) in inputs {
        h.update(k.as_bytes());
        h.update(v.as_bytes());
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub seed_derived: bool,
    /// File name → sha256 of every consumed input.
    pub inputs: BTreeMap<String, String>,
    /// sha256 of the fit manifest this run consumed, if any.
    pub fit_manifest_sha256: Option<String>,
    pub config: Value,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: Value) -> Self {
        RunManifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: None,
            seed_derived: false,
            inputs: BTreeMap::new(),
            fit_manifest_sha256: None,
            config,
            outputs: Vec::new(),
        }
    }

    pub fn add_input(&mut self, label: &str, path: &Path) -> std::io::Result<()> {
        let digest = if path.is_dir() { sha256_dir(path)? } else { sha256_file(path)? };
        self.inputs.insert(label.to_string(), digest);
        Ok(())
    }

    /// Uses `explicit` or derives a seed from the inputs, printing the
    /// derived value so the run can be repeated.
    pub fn resolve_seed(&mut self, explicit: Option<u64>) -> u64 {
        let seed = explicit.unwrap_or_else(|| {
            let s = derive_seed(&self.command, &self.inputs);
            eprintln!("no --seed given; derived seed {s}");
            self.seed_derived = true;
            s
        });
        self.seed = Some(seed);
        seed
    }

    /// Lists the files in `dir` (recursively, relative) and writes the manifest.
    pub fn write(mut self, dir: &Path) -> std::io::Result<()> {
        let mut outputs = Vec::new();
        list_files(dir, dir, &mut outputs)?;
        outputs.retain(|p| p != MANIFEST);
        outputs.sort();
        self.outputs = outputs;
        let mut text = serde_json::to_string_pretty(&self).map_err(std::io::Error::other)?;
        text.push('\n');
        std::fs::write(dir.join(MANIFEST), text)
    }
}

fn list_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> std::io::Result<()> {
    for e in std::fs::read_dir(dir)? {
        let p = e?.path();
        if p.is_dir() {
            list_files(root, &p, out)?;
        } else if let Ok(rel) = p.strip_prefix(root) {
            out.push(rel.to_string_lossy().replace('\\', "/"));
        }
    }
    Ok(())
}
