//! Precomputed SSL hidden states ("SSLF" files) and a deterministic stand-in
//! extractor.
//!
//! Layout, all integers little-endian:
//!
//! | bytes | field |
//! |---|---|
//! | 4 | magic `SSLF` |
//! | 4 | version (u32, = 1) |
//! | 4 | n_frames (u32) |
//! | 4 | dim (u32) |
//! | 4 | source layer (u32) |
//! | 2 | model id length (u16) |
//! | id_len | model id, UTF-8 |
//! | 4·n_frames·dim | f32 values, row-major (frame-major) |

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{num_complex::Complex, FftPlanner};

use crate::dsp::{AudioClip, SSL_RATE_HZ};
use crate::error::{Error, Result};
use crate::io_util::read_exact_or_corrupt;

pub const MAGIC: &[u8; 4] = b"SSLF";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 22;
pub const DEFAULT_DIM: usize = 1920;
pub const DEFAULT_LAYER: u32 = 9;
pub const PSEUDO_MODEL_ID: &str = "pseudo-extract/v1";

/// Samples per pseudo-extractor frame (20 ms at 16 kHz).
pub const PSEUDO_FRAME: usize = 320;
const PSEUDO_BANDS: usize = 16;
const PSEUDO_STATS: usize = PSEUDO_BANDS + 2;
/// Floor added to mean per-bin band energy (unnormalized 320-point FFT)
/// before the log, about 40 dB below the per-bin energy of a 0.05 RMS frame.
/// Keeps quantization noise and resampler stop-band residue out of the features.
const PSEUDO_ENERGY_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct SslFeatureMatrix {
    /// Row-major `[n_frames × dim]`.
    pub values: Vec<f32>,
    pub n_frames: usize,
    pub dim: usize,
    pub source_layer: u32,
    pub source_model_id: String,
}

impl SslFeatureMatrix {
    pub fn new(values: Vec<f32>, n_frames: usize, dim: usize) -> Result<Self> {
        if values.len() != n_frames * dim {
            return Err(Error::Shape(format!(
                "{} values for a {n_frames}x{dim} matrix",
                values.len()
            )));
        }
        Ok(Self {
            values,
            n_frames,
            dim,
            source_layer: DEFAULT_LAYER,
            source_model_id: String::new(),
        })
    }

    pub fn row(&self, frame: usize) -> &[f32] {
        &self.values[frame * self.dim..(frame + 1) * self.dim]
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.source_model_id.len() + 4 * self.values.len()
    }
}

pub fn write_features(m: &SslFeatureMatrix, sink: &mut impl Write) -> Result<()> {
    if m.values.len() != m.n_frames * m.dim {
        return Err(Error::Shape("value count disagrees with n_frames x dim".into()));
    }
    if m.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("refusing to write non-finite features".into()));
    }
    let id = m.source_model_id.as_bytes();
    let id_len = u16::try_from(id.len()).map_err(|_| Error::InvalidInput("model id too long".into()))?;

    let mut buf = Vec::with_capacity(m.encoded_len());
    buf.extend_from_slice(MAGIC);
    for v in [VERSION, m.n_frames as u32, m.dim as u32, m.source_layer] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&id_len.to_le_bytes());
    buf.extend_from_slice(id);
    for v in &m.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    sink.write_all(&buf)?;
    Ok(())
}

pub fn read_features(source: &mut impl Read) -> Result<SslFeatureMatrix> {
    let mut header = [0u8; HEADER_LEN];
    read_exact_or_corrupt(source, &mut header, "SSLF header")?;
    if &header[..4] != MAGIC {
        return Err(Error::Format(format!("bad SSLF magic {:?}", &header[..4])));
    }
    let word = |i: usize| u32::from_le_bytes(header[4 + 4 * i..8 + 4 * i].try_into().unwrap());
    let version = word(0);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported SSLF version {version}")));
    }
    let (n_frames, dim, layer) = (word(1) as usize, word(2) as usize, word(3));
    let id_len = u16::from_le_bytes([header[20], header[21]]) as usize;

    let mut id = vec![0u8; id_len];
    read_exact_or_corrupt(source, &mut id, "SSLF model id")?;
    let source_model_id = String::from_utf8(id).map_err(|_| Error::Format("SSLF model id is not UTF-8".into()))?;

    let n_values = n_frames
        .checked_mul(dim)
        .ok_or_else(|| Error::Format("SSLF dimensions overflow".into()))?;
    let mut payload = vec![0u8; n_values * 4];
    read_exact_or_corrupt(source, &mut payload, "SSLF payload")?;
    let values: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Validation(format!(
            "non-finite SSL feature at frame {}, dim {}",
            pos / dim.max(1),
            pos % dim.max(1)
        )));
    }
    Ok(SslFeatureMatrix {
        values,
        n_frames,
        dim,
        source_layer: layer,
        source_model_id,
    })
}

pub fn read_features_file(path: &std::path::Path) -> Result<SslFeatureMatrix> {
    let bytes = std::fs::read(path)?;
    read_features(&mut bytes.as_slice())
}

pub fn write_features_file(m: &SslFeatureMatrix, path: &std::path::Path) -> Result<()> {
    let mut buf = Vec::with_capacity(m.encoded_len());
    write_features(m, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

/// Per-frame window statistics: RMS, zero-crossing rate and 16 log band
/// energies over the 0–8 kHz range.
fn frame_stats(frame: &[f32], fft: &dyn rustfft::Fft<f64>, buf: &mut [Complex<f64>]) -> [f64; PSEUDO_STATS] {
    let n = frame.len();
    let mut stats = [0.0; PSEUDO_STATS];
    stats[0] = (frame.iter().map(|&s| (s as f64).powi(2)).sum::<f64>() / n as f64).sqrt();
    let crossings = frame.windows(2).filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0)).count();
    stats[1] = crossings as f64 / (n - 1) as f64;

    for (slot, &s) in buf.iter_mut().zip(frame) {
        *slot = Complex::new(s as f64, 0.0);
    }
    fft.process(buf);
    let per_band = (n / 2) / PSEUDO_BANDS;
    for band in 0..PSEUDO_BANDS {
        let lo = 1 + band * per_band;
        let energy: f64 = buf[lo..lo + per_band].iter().map(|c| c.norm_sqr()).sum::<f64>() / per_band as f64;
        stats[2 + band] = (energy + PSEUDO_ENERGY_FLOOR).ln();
    }
    stats
}

/// Deterministic stand-in for the real SSL backbone.
///
/// Frame `f` is a seeded Gaussian random projection of the statistics of
/// samples `[320 f, 320 f + 320)`. The frame count is `len / 320 - 1`, which
/// yields 499 frames for 10 s at 16 kHz like the real backbone.
pub fn pseudo_extract(clip: &AudioClip, dim: usize, seed: u64) -> Result<SslFeatureMatrix> {
    if clip.sample_rate_hz != SSL_RATE_HZ {
        return Err(Error::InvalidInput(format!(
            "pseudo extractor expects {SSL_RATE_HZ} Hz, got {}",
            clip.sample_rate_hz
        )));
    }
    if clip.len() < 2 * PSEUDO_FRAME {
        return Err(Error::InvalidInput(format!(
            "pseudo extractor needs at least {} samples, got {}",
            2 * PSEUDO_FRAME,
            clip.len()
        )));
    }
    if dim == 0 {
        return Err(Error::InvalidInput("feature dim must be positive".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (PSEUDO_STATS as f64).sqrt();
    let projection: Vec<f64> = (0..dim * PSEUDO_STATS)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * scale
        })
        .collect();

    let n_frames = clip.len() / PSEUDO_FRAME - 1;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(PSEUDO_FRAME);
    let mut buf = vec![Complex::default(); PSEUDO_FRAME];
    let mut values = Vec::with_capacity(n_frames * dim);
    for f in 0..n_frames {
        let stats = frame_stats(
            &clip.samples[f * PSEUDO_FRAME..(f + 1) * PSEUDO_FRAME],
            fft.as_ref(),
            &mut buf,
        );
        for row in projection.chunks_exact(PSEUDO_STATS) {
            let v: f64 = row.iter().zip(&stats).map(|(w, s)| w * s).sum();
            values.push(v as f32);
        }
    }

    Ok(SslFeatureMatrix {
        values,
        n_frames,
        dim,
        source_layer: DEFAULT_LAYER,
        source_model_id: PSEUDO_MODEL_ID.to_string(),
    })
}
