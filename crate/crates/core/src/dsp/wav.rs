use std::io::Cursor;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::AudioClip;
use crate::error::{Error, Result};

fn map_hound(err: hound::Error) -> Error {
    match err {
        hound::Error::Unsupported => Error::Unsupported("wav encoding not supported".into()),
        hound::Error::FormatError(msg) => Error::Format(msg.to_string()),
        hound::Error::IoError(e) => Error::Format(format!("truncated or unreadable wav: {e}")),
        other => Error::Format(other.to_string()),
    }
}

/// Decode RIFF/WAVE bytes (PCM16, PCM24 or float32; one or two channels)
/// to a mono clip. Channels are averaged.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioClip> {
    let reader = WavReader::new(Cursor::new(bytes)).map_err(map_hound)?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if !(1..=2).contains(&channels) {
        return Err(Error::Unsupported(format!("{channels} channels")));
    }

    let interleaved: Vec<f32> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f32 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(map_hound)?,
        (SampleFormat::Int, 24) => reader
            .into_samples::<i32>()
            .map(|s| s.map(|v| v as f32 / 8_388_608.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(map_hound)?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .collect::<std::result::Result<_, _>>()
            .map_err(map_hound)?,
        (fmt, bits) => {
            return Err(Error::Unsupported(format!("{fmt:?} with {bits} bits per sample")));
        }
    };

    let samples = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(2)
            .map(|frame| 0.5 * (frame[0] + frame[1]))
            .collect()
    };
    Ok(AudioClip::new(samples, spec.sample_rate))
}

/// Encode a mono clip as 16-bit PCM WAV. Samples are clamped to [-1, 1).
pub fn encode_wav_pcm16(clip: &AudioClip) -> Result<Vec<u8>> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate_hz,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut cursor = Cursor::new(Vec::new());
    {
        let mut writer = WavWriter::new(&mut cursor, spec).map_err(map_hound)?;
        for &s in &clip.samples {
            let q = (s.clamp(-1.0, 1.0) * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
            writer.write_sample(q).map_err(map_hound)?;
        }
        writer.finalize().map_err(map_hound)?;
    }
    Ok(cursor.into_inner())
}
