use super::AudioClip;

/// Repetitively pad (tile) or head-crop to exactly `round(target_seconds * rate)`
/// samples.
pub fn fit_length(clip: &AudioClip, target_seconds: f64) -> AudioClip {
    assert!(target_seconds > 0.0, "target_seconds must be positive");
    let target = (target_seconds * clip.sample_rate_hz as f64).round() as usize;
    AudioClip::new(fit_to_samples(&clip.samples, target), clip.sample_rate_hz)
}

/// Tile `samples` end-to-end until `target` samples are available, or keep
/// the first `target` samples of a longer input.
pub fn fit_to_samples(samples: &[f32], target: usize) -> Vec<f32> {
    assert!(!samples.is_empty(), "cannot fit an empty clip");
    samples.iter().copied().cycle().take(target).collect()
}
