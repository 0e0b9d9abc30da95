//! Output directory with atomic writes and a hashed manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Context, LabResult};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub core_version: String,
    pub command: String,
    pub seed: u64,
    pub threads: usize,
    pub config: Value,
    pub config_sha256: String,
    pub wall_time_s: f64,
    pub artifacts: Vec<ArtifactEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `bytes` to `path` through a temporary file in the same directory
/// followed by a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> LabResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp =
        tempfile::NamedTempFile::new_in(dir).context(format!("creating temporary file in {}", dir.display()))?;
    tmp.write_all(bytes).context(format!("writing {}", path.display()))?;
    tmp.as_file().sync_all().context(format!("syncing {}", path.display()))?;
    tmp.persist(path).map_err(|e| e.error).context(format!("renaming into {}", path.display()))?;
    Ok(())
}

/// Collects the artifacts of one run.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    entries: Vec<ArtifactEntry>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> LabResult<Self> {
        std::fs::create_dir_all(dir).context(format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), entries: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn entries(&self) -> &[ArtifactEntry] {
        &self.entries
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> LabResult<PathBuf> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.entries.retain(|e| e.path != name);
        self.entries.push(ArtifactEntry {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(path)
    }

    pub fn write_json(&mut self, name: &str, value: &Value) -> LabResult<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Writes the manifest listing every artifact written so far.
    pub fn finish(self, mut manifest: Manifest) -> LabResult<PathBuf> {
        manifest.artifacts = self.entries;
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        let path = self.dir.join(MANIFEST);
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn writes_and_lists() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = Artifacts::new(&dir.path().join("out")).unwrap();
        a.write("x.csv", b"a\n1\n").unwrap();
        a.write("x.csv", b"a\n2\n").unwrap();
        assert_eq!(a.entries().len(), 1);
        let m = Manifest {
            tool: "t".into(),
            version: "0".into(),
            core_version: "0".into(),
            command: "c".into(),
            seed: 1,
            threads: 1,
            config: Value::Null,
            config_sha256: String::new(),
            wall_time_s: 0.0,
            artifacts: vec![],
        };
        let p = a.finish(m).unwrap();
        let back: Manifest = serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
        assert_eq!(back.artifacts[0].sha256, sha256_hex(b"a\n2\n"));
        assert_eq!(std::fs::read(dir.path().join("out/x.csv")).unwrap(), b"a\n2\n");
    }
}
