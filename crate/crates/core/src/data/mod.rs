//! Manifests, splits, feature loading and the synthetic corpus generator.

mod dataset;
mod manifest;
mod split;
pub mod synth;

pub use dataset::{
    entry_spectrogram, load_dataset, read_audio, spectrogram_cache_path, spectrogram_for_clip, Dataset, FeatureConfig,
    Sample,
};
pub use manifest::{load_manifest, parse_manifest, write_manifest, Manifest, ManifestEntry, COLUMNS};
pub use split::{split_by_system, SplitLevel, SplitSpec};
pub use synth::{generate_synthetic, pseudo_mos, Recipe, SynthConfig};
