//! Resample a synthetic 24 kHz clip to 48 kHz, fix its length and print the
//! log-magnitude spectrogram fed to the spectrogram branch.
//!
//! cargo run --example spectrogram

use samos::data::synth::{render, Recipe};
use samos::data::{spectrogram_for_clip, FeatureConfig};
use samos::seed::rng_for;

fn main() -> samos::Result<()> {
    let recipe = Recipe {
        sample_rate_hz: 24_000,
        snr_db: 20.0,
        lowpass_khz: None,
        clipping: false,
    };
    let clip = render(&recipe, 1.5, &mut rng_for(0, "example"));
    let cfg = FeatureConfig {
        clip_seconds: 1.0,
        ..FeatureConfig::default()
    };
    let spec = spectrogram_for_clip(&clip, &cfg)?;
    println!(
        "{} samples @ {} Hz -> {} bins x {} frames",
        clip.len(),
        clip.sample_rate_hz,
        spec.n_bins,
        spec.n_frames
    );

    // 48 kHz / 320-point FFT: 150 Hz per bin
    for (lo, hi) in [
        (0, 4_000),
        (4_000, 8_000),
        (8_000, 12_000),
        (12_000, 16_000),
        (16_000, 24_000),
    ] {
        let bins = lo / 150..=(hi / 150).min(spec.n_bins - 1);
        let n = bins.clone().count() * spec.n_frames;
        let mean: f64 = bins
            .flat_map(|b| (0..spec.n_frames).map(move |t| (b, t)))
            .map(|(b, t)| spec.get(b, t) as f64)
            .sum::<f64>()
            / n as f64;
        println!("{:>5}-{:<5} Hz  mean log-magnitude {mean:7.2}", lo, hi);
    }
    Ok(())
}
