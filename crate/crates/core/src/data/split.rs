use std::collections::HashSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::ManifestEntry;
use crate::error::{Error, Result};
use crate::seed::rng_for;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitLevel {
    System,
    Utterance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub level: SplitLevel,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            seed: 0,
            level: SplitLevel::System,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction must be in (0, 1), got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }
}

/// Partition entries into (train, val), preserving manifest order on each side.
///
/// At system level the distinct systems are shuffled with the spec's seed and
/// the first `ceil(train_fraction * n_systems)` go to the training side; at
/// utterance level the same rule applies to individual utterances.
pub fn split_by_system(
    entries: &[ManifestEntry],
    spec: &SplitSpec,
) -> Result<(Vec<ManifestEntry>, Vec<ManifestEntry>)> {
    spec.validate()?;
    let keys: Vec<String> = match spec.level {
        SplitLevel::System => entries
            .iter()
            .map(|e| {
                e.system_id.clone().ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "utterance `{}` has no system_id for a system-level split",
                        e.utterance_id
                    ))
                })
            })
            .collect::<Result<_>>()?,
        SplitLevel::Utterance => entries.iter().map(|e| e.utterance_id.clone()).collect(),
    };

    let mut groups: Vec<&str> = Vec::new();
    let mut seen = HashSet::new();
    for k in &keys {
        if seen.insert(k.as_str()) {
            groups.push(k);
        }
    }
    groups.shuffle(&mut rng_for(spec.seed, "split"));
    let n_train = ((spec.train_fraction * groups.len() as f64).ceil() as usize).min(groups.len());
    let train_keys: HashSet<&str> = groups[..n_train].iter().copied().collect();

    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (e, k) in entries.iter().zip(&keys) {
        if train_keys.contains(k.as_str()) {
            train.push(e.clone());
        } else {
            val.push(e.clone());
        }
    }
    Ok((train, val))
}
