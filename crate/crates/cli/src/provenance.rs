//! Reproducibility headers: a hash over the effective configuration and
//! input checksums, written as `#` comment lines at the top of reports.

use std::fs::File;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone)]
pub struct Provenance {
    /// Canonical JSON of the options and input checksums.
    pub config: String,
    pub config_sha256: String,
    pub inputs: Vec<(String, PathBuf, String)>,
}

pub fn file_sha256(path: &Path) -> io::Result<String> {
    let mut hasher = Sha256::new();
    io::copy(&mut File::open(path)?, &mut hasher)?;
    Ok(hex::encode(hasher.finalize()))
}

impl Provenance {
    /// `options` should hold only settings that affect results; output
    /// paths and thread counts stay out so they do not change the hash.
    pub fn new(options: Value, inputs: &[(&str, &Path)]) -> io::Result<Self> {
        let mut checked = Vec::with_capacity(inputs.len());
        for &(role, path) in inputs {
            checked.push((role.to_owned(), path.to_path_buf(), file_sha256(path)?));
        }
        let input_hashes: Vec<Value> = checked
            .iter()
            .map(|(role, _, sum)| json!({ "role": role, "sha256": sum }))
            .collect();
        // serde_json maps are sorted by key, so this rendering is canonical
        let config = json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "options": options,
            "inputs": input_hashes,
        })
        .to_string();
        let config_sha256 = hex::encode(Sha256::digest(config.as_bytes()));
        Ok(Provenance {
            config,
            config_sha256,
            inputs: checked,
        })
    }

    pub fn header_lines(&self) -> Vec<String> {
        let mut lines = vec![
            format!("# affembed {}", env!("CARGO_PKG_VERSION")),
            format!("# config_sha256 {}", self.config_sha256),
            format!("# config {}", self.config),
        ];
        for (role, path, sum) in &self.inputs {
            lines.push(format!("# input {role} {} sha256 {sum}", path.display()));
        }
        lines
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_tracks_options_and_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("in.txt");
        std::fs::write(&f, "a 1 0\n").unwrap();
        let p = |opts: Value| {
            Provenance::new(opts, &[("embeddings", &f)])
                .unwrap()
                .config_sha256
        };
        assert_eq!(p(json!({"k": 10})), p(json!({"k": 10})));
        assert_ne!(p(json!({"k": 10})), p(json!({"k": 20})));
        let before = p(json!({"k": 10}));
        std::fs::write(&f, "a 1 1\n").unwrap();
        assert_ne!(before, p(json!({"k": 10})));
    }

    #[test]
    fn known_digest() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("abc");
        std::fs::write(&f, "abc").unwrap();
        assert_eq!(
            file_sha256(&f).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
