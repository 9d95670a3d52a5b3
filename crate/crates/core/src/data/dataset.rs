use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Manifest, ManifestEntry};
use crate::dsp::{self, AudioClip, LogSpectrogram, StftConfig, SPEC_RATE_HZ};
use crate::error::{Error, Result};
use crate::model::ModelInput;
use crate::seed::sha256_hex;
use crate::sslf::{read_features_file, SslFeatureMatrix};

/// How audio becomes a spectrogram-branch input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureConfig {
    /// Fixed clip length after resampling, in seconds.
    pub clip_seconds: f64,
    pub stft: StftConfig,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            clip_seconds: 10.0,
            stft: StftConfig::default(),
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.clip_seconds > 0.0 && self.clip_seconds.is_finite()) {
            return Err(Error::Config("clip_seconds must be positive".into()));
        }
        self.stft.validate()
    }

    /// Short digest that keys spectrogram caches to this configuration.
    pub fn cache_key(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("config serializes"))[..12].to_string()
    }
}

/// Decode, resample to the spectrogram rate, fit the length and transform.
pub fn spectrogram_for_clip(clip: &AudioClip, cfg: &FeatureConfig) -> Result<LogSpectrogram> {
    let resampled = dsp::resample(clip, SPEC_RATE_HZ)?;
    let fitted = dsp::fit_length(&resampled, cfg.clip_seconds);
    dsp::stft_log_magnitude(&fitted, &cfg.stft)
}

pub fn read_audio(path: &Path, expected_rate: u32) -> Result<AudioClip> {
    let clip = dsp::decode_wav(&std::fs::read(path).map_err(|e| io_context(e, path))?)?;
    if clip.sample_rate_hz != expected_rate {
        return Err(Error::Validation(format!(
            "{} is {} Hz but the manifest says {expected_rate} Hz",
            path.display(),
            clip.sample_rate_hz
        )));
    }
    Ok(clip)
}

fn io_context(e: std::io::Error, path: &Path) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// Cache location for an entry's spectrogram under a configuration.
pub fn spectrogram_cache_path(manifest: &Manifest, entry: &ManifestEntry, cfg: &FeatureConfig) -> PathBuf {
    let safe: String = entry
        .utterance_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "-_.".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect();
    manifest
        .base_dir
        .join("spec")
        .join(format!("{safe}.{}.lspg", cfg.cache_key()))
}

/// Load a cached spectrogram, or compute it (and write the cache when `write_cache`).
pub fn entry_spectrogram(
    manifest: &Manifest,
    entry: &ManifestEntry,
    cfg: &FeatureConfig,
    write_cache: bool,
) -> Result<LogSpectrogram> {
    let cache = spectrogram_cache_path(manifest, entry, cfg);
    if let Ok(bytes) = std::fs::read(&cache) {
        match LogSpectrogram::read_from(&mut bytes.as_slice()) {
            Ok(spec) => return Ok(spec),
            Err(e) => log::warn!("ignoring unreadable cache {}: {e}", cache.display()),
        }
    }
    let clip = read_audio(&manifest.resolve(&entry.audio_path), entry.sample_rate_hz)?;
    let spec = spectrogram_for_clip(&clip, cfg)?;
    if write_cache {
        std::fs::create_dir_all(cache.parent().expect("cache path has a parent"))?;
        let mut buf = Vec::new();
        spec.write_to(&mut buf)?;
        let tmp = cache.with_extension("lspg.tmp");
        std::fs::write(&tmp, buf)?;
        std::fs::rename(&tmp, &cache)?;
    }
    Ok(spec)
}

/// One utterance with its model inputs resident in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub utterance_id: String,
    pub system_id: Option<String>,
    pub label: f64,
    pub ssl: SslFeatureMatrix,
    pub spec: Option<LogSpectrogram>,
}

impl Sample {
    pub fn input(&self) -> ModelInput<'_> {
        ModelInput {
            ssl: &self.ssl,
            spec: self.spec.as_ref(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
}

impl Dataset {
    /// Checks that every sample shares one SSL feature dimension.
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        if let Some(first) = samples.first() {
            let dim = first.ssl.dim;
            if let Some(bad) = samples.iter().find(|s| s.ssl.dim != dim) {
                return Err(Error::for_entry(
                    bad.utterance_id.clone(),
                    Error::Validation(format!("feature dim {} differs from the dataset's {dim}", bad.ssl.dim)),
                ));
            }
        }
        Ok(Self { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn ssl_dim(&self) -> Option<usize> {
        self.samples.first().map(|s| s.ssl.dim)
    }

    pub fn inputs(&self) -> Vec<ModelInput<'_>> {
        self.samples.iter().map(Sample::input).collect()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
        }
    }

    /// Drops the spectrogram inputs (for SSL-only models).
    pub fn without_spectrograms(mut self) -> Self {
        self.samples.iter_mut().for_each(|s| s.spec = None);
        self
    }
}

/// Read features for every manifest entry, in manifest order. Errors name the
/// offending utterance.
pub fn load_dataset(manifest: &Manifest, cfg: &FeatureConfig, with_spectrograms: bool) -> Result<Dataset> {
    cfg.validate()?;
    let samples = manifest
        .entries
        .par_iter()
        .map(|entry| {
            load_sample(manifest, entry, cfg, with_spectrograms)
                .map_err(|e| Error::for_entry(entry.utterance_id.clone(), e))
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(samples)
}

fn load_sample(manifest: &Manifest, entry: &ManifestEntry, cfg: &FeatureConfig, with_spec: bool) -> Result<Sample> {
    let ssl_path = manifest.resolve(&entry.ssl_feature_path);
    let ssl = read_features_file(&ssl_path).map_err(|e| match e {
        Error::Io(io) => io_context(io, &ssl_path),
        other => other,
    })?;
    let spec = if with_spec {
        Some(entry_spectrogram(manifest, entry, cfg, false)?)
    } else {
        None
    };
    Ok(Sample {
        utterance_id: entry.utterance_id.clone(),
        system_id: entry.system_id.clone(),
        label: entry.mos_label,
        ssl,
        spec,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::write_manifest;
    use crate::sslf::{pseudo_extract, write_features_file};

    fn tone(rate: u32, secs: f64) -> AudioClip {
        let n = (rate as f64 * secs) as usize;
        AudioClip::new(
            (0..n)
                .map(|i| 0.3 * (2.0 * std::f64::consts::PI * 440.0 * i as f64 / rate as f64).sin() as f32)
                .collect(),
            rate,
        )
    }

    fn fixture(dir: &Path, ids: &[&str], dims: &[usize]) -> Manifest {
        std::fs::create_dir_all(dir.join("wav")).unwrap();
        std::fs::create_dir_all(dir.join("sslf")).unwrap();
        let mut entries = Vec::new();
        for (id, &dim) in ids.iter().zip(dims) {
            let clip = tone(16000, 0.5);
            std::fs::write(dir.join(format!("wav/{id}.wav")), dsp::encode_wav_pcm16(&clip).unwrap()).unwrap();
            let feats = pseudo_extract(&clip, dim, 0).unwrap();
            write_features_file(&feats, &dir.join(format!("sslf/{id}.sslf"))).unwrap();
            entries.push(ManifestEntry {
                utterance_id: id.to_string(),
                audio_path: format!("wav/{id}.wav"),
                ssl_feature_path: format!("sslf/{id}.sslf"),
                mos_label: 3.0,
                system_id: Some("s".into()),
                sample_rate_hz: 16000,
                n_ratings: None,
            });
        }
        write_manifest(&entries, &dir.join("manifest.csv")).unwrap();
        crate::data::load_manifest(&dir.join("manifest.csv")).unwrap()
    }

    fn short_features() -> FeatureConfig {
        FeatureConfig {
            clip_seconds: 0.25,
            ..FeatureConfig::default()
        }
    }

    #[test]
    fn loads_in_manifest_order_with_spectrograms() {
        let dir = tempfile::tempdir().unwrap();
        let m = fixture(dir.path(), &["b", "a", "c"], &[6, 6, 6]);
        let ds = load_dataset(&m, &short_features(), true).unwrap();
        let ids: Vec<_> = ds.samples.iter().map(|s| s.utterance_id.as_str()).collect();
        assert_eq!(ids, ["b", "a", "c"]);
        let spec = ds.samples[0].spec.as_ref().unwrap();
        assert_eq!((spec.n_bins, spec.n_frames), (161, 74));
        assert_eq!(ds.ssl_dim(), Some(6));
    }

    #[test]
    fn missing_feature_file_names_the_utterance() {
        let dir = tempfile::tempdir().unwrap();
        let m = fixture(dir.path(), &["a", "b"], &[6, 6]);
        std::fs::remove_file(dir.path().join("sslf/b.sslf")).unwrap();
        match load_dataset(&m, &short_features(), false) {
            Err(err @ Error::Dataset { .. }) => {
                assert!(matches!(&err, Error::Dataset { entry, .. } if entry == "b"));
                assert_eq!(err.exit_code(), 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn inconsistent_dims_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let m = fixture(dir.path(), &["a", "b"], &[6, 7]);
        assert!(
            matches!(load_dataset(&m, &short_features(), false), Err(Error::Dataset { entry, .. }) if entry == "b")
        );
    }

    #[test]
    fn rate_mismatch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = fixture(dir.path(), &["a"], &[6]);
        m.entries[0].sample_rate_hz = 48000;
        assert!(load_dataset(&m, &short_features(), true).is_err());
    }

    #[test]
    fn cache_matches_fresh_computation() {
        let dir = tempfile::tempdir().unwrap();
        let m = fixture(dir.path(), &["a"], &[6]);
        let cfg = short_features();
        let fresh = entry_spectrogram(&m, &m.entries[0], &cfg, true).unwrap();
        assert!(spectrogram_cache_path(&m, &m.entries[0], &cfg).exists());
        std::fs::remove_file(dir.path().join("wav/a.wav")).unwrap();
        let cached = entry_spectrogram(&m, &m.entries[0], &cfg, false).unwrap();
        assert_eq!(fresh, cached);

        let other = FeatureConfig {
            clip_seconds: 0.5,
            ..cfg
        };
        assert_ne!(cfg.cache_key(), other.cache_key());
        assert!(entry_spectrogram(&m, &m.entries[0], &other, false).is_err());
    }
}
