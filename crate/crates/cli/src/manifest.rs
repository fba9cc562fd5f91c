use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliResult;
use crate::rgr::write_atomic;

/// Record written next to every artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    /// SHA-256 over the command, its options and the bytes of every input.
    pub config_hash: String,
    pub seed: Option<u64>,
    pub version: String,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    /// Command-specific details (pipeline provenance and the like).
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
}

/// Hash of a command, its options (as canonical JSON) and the contents of its inputs.
pub fn config_hash(command: &str, options: &serde_json::Value, inputs: &[(&Path, &[u8])]) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0]);
    h.update(options.to_string().as_bytes());
    for (path, bytes) in inputs {
        h.update([0]);
        h.update(path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default().as_bytes());
        h.update([0]);
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Path of the manifest that accompanies `artifact`.
pub fn manifest_path(artifact: &Path) -> PathBuf {
    if artifact.is_dir() {
        return artifact.join("manifest.json");
    }
    let mut name = artifact.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    artifact.with_file_name(name)
}

pub fn write_manifest(artifact: &Path, m: &RunManifest) -> CliResult<()> {
    let text = serde_json::to_string_pretty(m).expect("manifest serializes");
    write_atomic(&manifest_path(artifact), text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_depends_on_every_part() {
        let opts = serde_json::json!({"snr": 5.0});
        let p = Path::new("scene.json");
        let base = config_hash("simulate", &opts, &[(p, b"abc")]);
        assert_eq!(base.len(), 64);
        assert_eq!(base, config_hash("simulate", &opts, &[(p, b"abc")]));
        assert_ne!(base, config_hash("simulate", &opts, &[(p, b"abd")]));
        assert_ne!(base, config_hash("simulate", &serde_json::json!({"snr": 6.0}), &[(p, b"abc")]));
        assert_ne!(base, config_hash("process", &opts, &[(p, b"abc")]));
    }

    #[test]
    fn manifest_sits_next_to_the_artifact() {
        assert_eq!(manifest_path(Path::new("/tmp/x/out.rgr1")), PathBuf::from("/tmp/x/out.rgr1.manifest.json"));
    }
}
