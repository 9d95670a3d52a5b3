use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dsp::{is_allowed_rate, ALLOWED_RATES};
use crate::error::{Error, Result};

/// Column names, in the order they are written.
pub const COLUMNS: [&str; 7] = [
    "utterance_id",
    "audio_path",
    "ssl_feature_path",
    "mos_label",
    "system_id",
    "sample_rate_hz",
    "n_ratings",
];
const REQUIRED: [&str; 6] = [
    "utterance_id",
    "audio_path",
    "ssl_feature_path",
    "mos_label",
    "system_id",
    "sample_rate_hz",
];

/// One row of a manifest. Paths are stored as written; relative paths are
/// resolved against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub utterance_id: String,
    pub audio_path: String,
    pub ssl_feature_path: String,
    pub mos_label: f64,
    pub system_id: Option<String>,
    pub sample_rate_hz: u32,
    pub n_ratings: Option<u32>,
}

impl ManifestEntry {
    fn validate(&self) -> Result<()> {
        if self.utterance_id.is_empty() {
            return Err(Error::Validation("empty utterance_id".into()));
        }
        if self.audio_path.is_empty() || self.ssl_feature_path.is_empty() {
            return Err(Error::Validation("empty path".into()));
        }
        if !(1.0..=5.0).contains(&self.mos_label) {
            return Err(Error::Validation(format!(
                "mos_label {} outside [1, 5]",
                self.mos_label
            )));
        }
        if !is_allowed_rate(self.sample_rate_hz) {
            return Err(Error::Validation(format!(
                "sample_rate_hz {} not in {ALLOWED_RATES:?}",
                self.sample_rate_hz
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    /// Directory relative paths are resolved against.
    pub base_dir: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(base_dir: impl Into<PathBuf>, entries: Vec<ManifestEntry>) -> Self {
        Self {
            base_dir: base_dir.into(),
            entries,
        }
    }

    pub fn resolve(&self, path: &str) -> PathBuf {
        let p = Path::new(path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Same base directory, different rows.
    pub fn with_entries(&self, entries: Vec<ManifestEntry>) -> Self {
        Self::new(self.base_dir.clone(), entries)
    }
}

/// Parse manifest CSV text. `base_dir` anchors relative paths.
pub fn parse_manifest(text: &str, base_dir: impl Into<PathBuf>) -> Result<Manifest> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    for col in REQUIRED {
        if !headers.iter().any(|h| h == col) {
            return Err(Error::Schema(format!("missing column `{col}`")));
        }
    }

    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for (i, record) in reader.deserialize::<ManifestEntry>().enumerate() {
        // header is line 1
        let line = i + 2;
        let entry = record.map_err(|e| Error::Validation(format!("row {line}: {e}")))?;
        let entry = ManifestEntry {
            system_id: entry.system_id.filter(|s| !s.is_empty()),
            ..entry
        };
        entry
            .validate()
            .map_err(|e| Error::Validation(format!("row {line} (`{}`): {}", entry.utterance_id, detail(e))))?;
        if !seen.insert(entry.utterance_id.clone()) {
            return Err(Error::Duplicate(entry.utterance_id));
        }
        entries.push(entry);
    }
    Ok(Manifest::new(base_dir, entries))
}

fn detail(e: Error) -> String {
    match e {
        Error::Validation(s) => s,
        other => other.to_string(),
    }
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_manifest(&text, base)
}

pub fn write_manifest(entries: &[ManifestEntry], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for e in entries {
        writer.serialize(e)?;
    }
    writer.flush()?;
    Ok(())
}
