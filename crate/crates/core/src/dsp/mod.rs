//! Signal front-end: WAV I/O, resampling, length normalization and the
//! log-magnitude spectrogram consumed by the spectrogram branch.

mod length;
mod resample;
mod stft;
mod wav;

pub use length::{fit_length, fit_to_samples};
pub use resample::{resample, Resampler};
pub use stft::{stft_log_magnitude, LogSpectrogram, StftConfig, WindowKind};
pub use wav::{decode_wav, encode_wav_pcm16};

/// Sampling rates accepted at ingestion.
pub const ALLOWED_RATES: [u32; 5] = [8000, 16000, 24000, 44100, 48000];

/// Rate the SSL branch operates at.
pub const SSL_RATE_HZ: u32 = 16_000;
/// Rate the spectrogram branch operates at.
pub const SPEC_RATE_HZ: u32 = 48_000;

/// Mono waveform with its sampling rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f32>,
    pub sample_rate_hz: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f32>, sample_rate_hz: u32) -> Self {
        Self {
            samples,
            sample_rate_hz,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }
}

pub fn is_allowed_rate(rate: u32) -> bool {
    ALLOWED_RATES.contains(&rate)
}
