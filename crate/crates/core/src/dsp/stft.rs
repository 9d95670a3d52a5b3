use std::f64::consts::PI;
use std::io::{Read, Write};

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{AudioClip, SPEC_RATE_HZ};
use crate::error::{Error, Result};
use crate::io_util::read_exact_or_corrupt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    /// Periodic Hann.
    Hann,
    Rectangular,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StftConfig {
    pub window_len: usize,
    pub hop_len: usize,
    pub fft_size: usize,
    pub window_kind: WindowKind,
    pub log_floor_eps: f64,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            window_len: 320,
            hop_len: 160,
            fft_size: 320,
            window_kind: WindowKind::Hann,
            log_floor_eps: 1e-8,
        }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_len == 0 || self.hop_len == 0 {
            return Err(Error::Config("window and hop must be positive".into()));
        }
        if self.window_len > self.fft_size {
            return Err(Error::Config("window_len must not exceed fft_size".into()));
        }
        if self.hop_len > self.window_len {
            return Err(Error::Config("hop_len must not exceed window_len".into()));
        }
        if !(self.log_floor_eps > 0.0) {
            return Err(Error::Config("log_floor_eps must be positive".into()));
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Frames for `len` samples without centre padding.
    pub fn n_frames(&self, len: usize) -> usize {
        if len < self.window_len {
            0
        } else {
            1 + (len - self.window_len) / self.hop_len
        }
    }

    pub fn window(&self) -> Vec<f64> {
        let n = self.window_len;
        match self.window_kind {
            WindowKind::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
                .collect(),
            WindowKind::Rectangular => vec![1.0; n],
        }
    }
}

/// Log-magnitude spectrogram stored bin-major: `values[bin * n_frames + frame]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogSpectrogram {
    pub values: Vec<f32>,
    pub n_bins: usize,
    pub n_frames: usize,
    pub source_rate_hz: u32,
}

const CACHE_MAGIC: &[u8; 4] = b"LSPG";
const CACHE_VERSION: u32 = 1;

impl LogSpectrogram {
    pub fn get(&self, bin: usize, frame: usize) -> f32 {
        self.values[bin * self.n_frames + frame]
    }

    /// Cache layout: magic "LSPG", version u32, n_bins u32, n_frames u32,
    /// rate u32, then `n_bins * n_frames` little-endian f32 (bin-major).
    pub fn write_to(&self, sink: &mut impl Write) -> Result<()> {
        sink.write_all(CACHE_MAGIC)?;
        for v in [
            CACHE_VERSION,
            self.n_bins as u32,
            self.n_frames as u32,
            self.source_rate_hz,
        ] {
            sink.write_all(&v.to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(self.values.len() * 4);
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        sink.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(source: &mut impl Read) -> Result<Self> {
        let mut header = [0u8; 20];
        read_exact_or_corrupt(source, &mut header, "spectrogram header")?;
        if &header[..4] != CACHE_MAGIC {
            return Err(Error::Format("bad spectrogram cache magic".into()));
        }
        let word = |i: usize| u32::from_le_bytes(header[4 + 4 * i..8 + 4 * i].try_into().unwrap());
        if word(0) != CACHE_VERSION {
            return Err(Error::Format(format!("spectrogram cache version {}", word(0))));
        }
        let (n_bins, n_frames, rate) = (word(1) as usize, word(2) as usize, word(3));
        let mut payload = vec![0u8; n_bins * n_frames * 4];
        read_exact_or_corrupt(source, &mut payload, "spectrogram payload")?;
        let values: Vec<f32> = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite spectrogram value".into()));
        }
        Ok(Self {
            values,
            n_bins,
            n_frames,
            source_rate_hz: rate,
        })
    }
}

/// STFT without centre padding; `value[b][t] = ln(|X_t[b]| + eps)`.
pub fn stft_log_magnitude(clip: &AudioClip, cfg: &StftConfig) -> Result<LogSpectrogram> {
    cfg.validate()?;
    if clip.sample_rate_hz != SPEC_RATE_HZ {
        return Err(Error::InvalidInput(format!(
            "spectrogram expects {SPEC_RATE_HZ} Hz input, got {}",
            clip.sample_rate_hz
        )));
    }
    let n_frames = cfg.n_frames(clip.len());
    if n_frames == 0 {
        return Err(Error::InvalidInput(format!(
            "clip of {} samples is shorter than one {}-sample window",
            clip.len(),
            cfg.window_len
        )));
    }
    let n_bins = cfg.n_bins();
    let window = cfg.window();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(cfg.fft_size);
    let mut scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
    let mut buf = vec![Complex::default(); cfg.fft_size];
    let mut values = vec![0f32; n_bins * n_frames];

    for t in 0..n_frames {
        let frame = &clip.samples[t * cfg.hop_len..t * cfg.hop_len + cfg.window_len];
        buf.iter_mut().for_each(|c| *c = Complex::default());
        for (slot, (&s, &w)) in buf.iter_mut().zip(frame.iter().zip(&window)) {
            slot.re = s as f64 * w;
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for b in 0..n_bins {
            values[b * n_frames + t] = (buf[b].norm() + cfg.log_floor_eps).ln() as f32;
        }
    }

    Ok(LogSpectrogram {
        values,
        n_bins,
        n_frames,
        source_rate_hz: SPEC_RATE_HZ,
    })
}
