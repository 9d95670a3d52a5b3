//! Synthetic MOS corpus.
//!
//! Every system fixes a degradation recipe (sampling rate, additive white
//! noise SNR, optional brick-wall low-pass, optional clipping) and every
//! utterance is a harmonic carrier rendered through it (see [`render`]).
//! Labels come from [`pseudo_mos`] plus Gaussian rater noise.

use std::f64::consts::PI;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{write_manifest, Manifest, ManifestEntry};
use crate::dsp::{self, AudioClip, SSL_RATE_HZ};
use crate::error::{Error, Result};
use crate::seed::rng_for;
use crate::sslf::{pseudo_extract, write_features_file};

pub const SNR_LEVELS_DB: [f64; 5] = [0.0, 5.0, 10.0, 20.0, 30.0];
/// `None` means no low-pass.
pub const LOWPASS_KHZ: [Option<f64>; 5] = [None, Some(4.0), Some(8.0), Some(12.0), Some(24.0)];
pub const SYNTH_RATES: [u32; 3] = [16000, 24000, 48000];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recipe {
    pub sample_rate_hz: u32,
    pub snr_db: f64,
    pub lowpass_khz: Option<f64>,
    pub clipping: bool,
}

impl Recipe {
    /// Audio bandwidth in kHz after rate and low-pass limits.
    pub fn bandwidth_khz(&self) -> f64 {
        let nyquist = self.sample_rate_hz as f64 / 2000.0;
        self.lowpass_khz.map_or(nyquist, |lp| lp.min(nyquist))
    }
}

/// Noise-free quality score of a recipe:
///
/// `1 + 0.8 * snr_db / 30 + 2.8 * clamp(log2(bw / 4) / log2(6), 0, 1) + 0.4 * (1 - clipping)`
///
/// where `bw` is the bandwidth in kHz, so 4 kHz scores 0 on the bandwidth
/// term and 24 kHz scores 1.
pub fn pseudo_mos(recipe: &Recipe) -> f64 {
    let bw = (recipe.bandwidth_khz() / 4.0).log2() / 6f64.log2();
    let clip = if recipe.clipping { 0.0 } else { 1.0 };
    1.0 + 0.8 * recipe.snr_db / 30.0 + 2.8 * bw.clamp(0.0, 1.0) + 0.4 * clip
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub n_systems: usize,
    pub utts_per_system: usize,
    pub seed: u64,
    pub clip_seconds: f64,
    /// Dimension of the pseudo SSL features.
    pub ssl_dim: usize,
    /// Projection seed of the pseudo extractor; keep it fixed across corpora
    /// that a single model should consume.
    pub extractor_seed: u64,
    pub rater_noise_std: f64,
    /// Added to every label before clamping (simulates a shifted domain).
    pub label_shift: f64,
    pub clipping_probability: f64,
    /// Prefix of system and utterance ids.
    pub id_prefix: String,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_systems: 20,
            utts_per_system: 25,
            seed: 0,
            clip_seconds: 10.0,
            ssl_dim: crate::sslf::DEFAULT_DIM,
            extractor_seed: 0,
            rater_noise_std: 0.1,
            label_shift: 0.0,
            clipping_probability: 0.3,
            id_prefix: "sys".into(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_systems == 0 || self.utts_per_system == 0 || self.ssl_dim == 0 {
            return Err(Error::Config(
                "n_systems, utts_per_system and ssl_dim must be positive".into(),
            ));
        }
        if !(self.clip_seconds >= 0.05 && self.clip_seconds.is_finite()) {
            return Err(Error::Config("clip_seconds must be at least 0.05".into()));
        }
        if !(0.0..=1.0).contains(&self.clipping_probability) || !(self.rater_noise_std >= 0.0) {
            return Err(Error::Config(
                "clipping_probability must be in [0, 1] and rater_noise_std >= 0".into(),
            ));
        }
        Ok(())
    }
}

pub fn system_recipe(cfg: &SynthConfig, system: usize) -> Recipe {
    let mut rng = rng_for(cfg.seed, &format!("system/{system}"));
    Recipe {
        sample_rate_hz: *SYNTH_RATES.choose(&mut rng).unwrap(),
        snr_db: *SNR_LEVELS_DB.choose(&mut rng).unwrap(),
        lowpass_khz: *LOWPASS_KHZ.choose(&mut rng).unwrap(),
        clipping: rng.gen_bool(cfg.clipping_probability),
    }
}

/// Upper edge of the band every system carries (the 16 kHz view).
pub const LOW_BAND_HZ: f64 = 7000.0;
/// High-band content starts here; `LOW_BAND_HZ..HIGH_BAND_HZ` is always empty.
pub const HIGH_BAND_HZ: f64 = 8000.0;
const LOW_PEAK: f64 = 0.2;

/// Sum of harmonics `f0 * k` inside `(lo, hi)` with amplitude `k^-0.7`, under
/// an amplitude envelope. Phasor recurrence instead of per-sample `sin`.
fn harmonics(f0: f64, lo: f64, hi: f64, phases: &[f64], env: &[f64], rate: u32) -> Vec<f64> {
    let mut x = vec![0.0; env.len()];
    for (k, &phase) in phases.iter().enumerate() {
        let k = (k + 1) as f64;
        let f = k * f0;
        if f <= lo || f >= hi {
            continue;
        }
        let amp = k.powf(-0.7);
        let step = Complex::from_polar(1.0, 2.0 * PI * f / rate as f64);
        let mut z = Complex::from_polar(amp, phase);
        for v in x.iter_mut() {
            *v += z.im;
            z *= step;
        }
    }
    x.iter_mut().zip(env).for_each(|(v, e)| *v *= e);
    x
}

fn peak(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Keep only spectral components at or below `LOW_BAND_HZ`, or above
/// `HIGH_BAND_HZ` and at or below `cutoff_hz`.
fn band_mask(x: &mut [f64], rate: u32, cutoff_hz: f64) {
    let n = x.len();
    let mut planner = FftPlanner::<f64>::new();
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let freq = k.min(n - k) as f64 * rate as f64 / n as f64;
        let keep = freq <= cutoff_hz && (freq <= LOW_BAND_HZ || freq > HIGH_BAND_HZ);
        if !keep {
            *c = Complex::default();
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    for (v, c) in x.iter_mut().zip(&buf) {
        *v = c.re / n as f64;
    }
}

/// Render one utterance through a recipe.
///
/// A harmonic carrier (f0 in 90-260 Hz, 3-5 Hz envelope) is split into a low
/// band (below 7 kHz, peak 0.2) and a high band (above 8 kHz, same harmonic
/// series). Clipping acts on the low band at half its peak. White noise is
/// scaled so the low band has the recipe SNR and has the same density in the
/// high band. Finally everything outside `[0, 7] ∪ (8, bw]` kHz is removed,
/// where bw is the low-pass cutoff or Nyquist. The statistics of the 0-8 kHz
/// content therefore depend on SNR, clipping and the 4 kHz low-pass only;
/// bandwidth beyond 8 kHz is visible only at rates above 16 kHz.
pub fn render(recipe: &Recipe, seconds: f64, rng: &mut impl Rng) -> AudioClip {
    let rate = recipe.sample_rate_hz;
    let n = (seconds * rate as f64).round() as usize;
    let nyquist = rate as f64 / 2.0;

    let f0: f64 = rng.gen_range(90.0..260.0);
    let phases: Vec<f64> = (0..(0.95 * nyquist / f0) as usize)
        .map(|_| rng.gen_range(0.0..2.0 * PI))
        .collect();
    let am_rate: f64 = rng.gen_range(3.0..5.0);
    let am_phase: f64 = rng.gen_range(0.0..2.0 * PI);
    let env: Vec<f64> = (0..n)
        .map(|i| 0.6 + 0.4 * (2.0 * PI * am_rate * i as f64 / rate as f64 + am_phase).sin())
        .collect();

    let mut low = harmonics(f0, 0.0, LOW_BAND_HZ, &phases, &env, rate);
    let high = harmonics(f0, HIGH_BAND_HZ, 0.95 * nyquist, &phases, &env, rate);
    let gain = LOW_PEAK / peak(&low).max(f64::MIN_POSITIVE);
    low.iter_mut().for_each(|v| *v *= gain);
    if recipe.clipping {
        let limit = 0.5 * LOW_PEAK;
        low.iter_mut().for_each(|v| *v = v.clamp(-limit, limit));
    }
    let signal_power = low.iter().map(|v| v * v).sum::<f64>() / n as f64;

    // white noise with the requested power inside the low band
    let low_fraction = LOW_BAND_HZ.min(nyquist) / nyquist;
    let noise_std = (signal_power / 10f64.powf(recipe.snr_db / 10.0) / low_fraction).sqrt();
    let noise = Normal::new(0.0, noise_std).expect("finite std");
    let mut x: Vec<f64> = low
        .iter()
        .zip(&high)
        .map(|(l, h)| l + gain * h + noise.sample(rng))
        .collect();

    let cutoff = recipe.lowpass_khz.map_or(nyquist, |lp| (lp * 1000.0).min(nyquist));
    band_mask(&mut x, rate, cutoff);
    AudioClip::new(x.into_iter().map(|v| v.clamp(-1.0, 1.0) as f32).collect(), rate)
}

/// Write `wav/`, `sslf/` and `manifest.csv` under `out_dir`; returns the manifest.
///
/// SSL features are extracted from the written (quantized) WAV after
/// resampling to 16 kHz and fitting to `clip_seconds`, the same route a real
/// feature exporter takes.
pub fn generate_synthetic(cfg: &SynthConfig, out_dir: &Path) -> Result<Manifest> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir.join("wav"))?;
    std::fs::create_dir_all(out_dir.join("sslf"))?;

    let jobs: Vec<(usize, usize)> = (0..cfg.n_systems)
        .flat_map(|s| (0..cfg.utts_per_system).map(move |u| (s, u)))
        .collect();
    let entries = jobs
        .par_iter()
        .map(|&(s, u)| synth_utterance(cfg, out_dir, s, u))
        .collect::<Result<Vec<_>>>()?;
    write_manifest(&entries, &out_dir.join("manifest.csv"))?;
    Ok(Manifest::new(out_dir, entries))
}

fn synth_utterance(cfg: &SynthConfig, out_dir: &Path, system: usize, utt: usize) -> Result<ManifestEntry> {
    let recipe = system_recipe(cfg, system);
    let system_id = format!("{}{system:03}", cfg.id_prefix);
    let utterance_id = format!("{system_id}_u{utt:03}");
    let mut rng = rng_for(cfg.seed, &format!("utterance/{utterance_id}"));

    let clip = render(&recipe, cfg.clip_seconds, &mut rng);
    let wav = dsp::encode_wav_pcm16(&clip)?;
    let audio_path = format!("wav/{utterance_id}.wav");
    std::fs::write(out_dir.join(&audio_path), &wav)?;

    let decoded = dsp::decode_wav(&wav)?;
    let ssl_clip = dsp::fit_length(&dsp::resample(&decoded, SSL_RATE_HZ)?, cfg.clip_seconds);
    let feats = pseudo_extract(&ssl_clip, cfg.ssl_dim, cfg.extractor_seed)?;
    let ssl_feature_path = format!("sslf/{utterance_id}.sslf");
    write_features_file(&feats, &out_dir.join(&ssl_feature_path))?;

    let rater = Normal::new(0.0, cfg.rater_noise_std).expect("finite std");
    let label = (pseudo_mos(&recipe) + cfg.label_shift + rater.sample(&mut rng)).clamp(1.0, 5.0);
    Ok(ManifestEntry {
        utterance_id,
        audio_path,
        ssl_feature_path,
        mos_label: label,
        system_id: Some(system_id),
        sample_rate_hz: recipe.sample_rate_hz,
        n_ratings: Some(10),
    })
}
