use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Provenance record written as `manifest.json` next to each run's artifacts.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub tool_version: String,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(config_hash: String, seeds: Vec<u64>, started: DateTime<Utc>) -> Self {
        Self {
            command: std::env::args().collect(),
            config_hash,
            seeds,
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            started: stamp(started),
            finished: String::new(),
            outputs: Vec::new(),
        }
    }

    /// Stamps the finish time, lists the files already in `dir` and writes
    /// the manifest there.
    pub fn finish(mut self, dir: &Path) -> io::Result<PathBuf> {
        self.finished = stamp(Utc::now());
        let path = dir.join("manifest.json");
        let mut outputs: Vec<PathBuf> = fs::read_dir(dir)?
            .map(|e| e.map(|e| e.path()))
            .collect::<io::Result<_>>()?;
        outputs.push(path.clone());
        outputs.sort();
        self.outputs = outputs;
        fs::write(&path, serde_json::to_string_pretty(&self)? + "\n")?;
        Ok(path)
    }
}

fn stamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Compact JSON with object keys sorted at every level.
pub fn canonical_json(value: &Value) -> String {
    match value {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            let body: Vec<String> = keys
                .into_iter()
                .map(|k| format!("{}:{}", Value::String(k.clone()), canonical_json(&map[k])))
                .collect();
            format!("{{{}}}", body.join(","))
        }
        Value::Array(items) => format!("[{}]", items.iter().map(canonical_json).collect::<Vec<_>>().join(",")),
        other => other.to_string(),
    }
}

/// SHA-256 of the canonical JSON form, as lowercase hex.
pub fn config_hash(value: &Value) -> String {
    Sha256::digest(canonical_json(value).as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// `<root>/<name>/<UTC timestamp>`, suffixed if a run in the same
/// millisecond already claimed it.
pub fn artifact_dir(root: &Path, name: &str, now: DateTime<Utc>) -> io::Result<PathBuf> {
    let base = root.join(name);
    fs::create_dir_all(&base)?;
    let stamp = now.format("%Y%m%dT%H%M%S%.3fZ").to_string();
    let mut dir = base.join(&stamp);
    let mut n = 1;
    loop {
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
                dir = base.join(format!("{stamp}-{n}"));
                n += 1;
            }
            Err(e) => return Err(e),
        }
    }
}
