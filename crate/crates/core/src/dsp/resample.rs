//! Rational-ratio polyphase resampler with a Kaiser-windowed sinc kernel.
//!
//! For an up/down ratio `L/M` (reduced), output sample `n` sits at input
//! position `n * M / L`. That position has one of `L` fractional phases, so
//! the kernel is tabulated once per phase. The kernel spans 64 zero crossings
//! of the band-limiting sinc (wider in input samples when decimating).

use std::f64::consts::PI;

use super::AudioClip;
use crate::error::{Error, Result};

const HALF_CROSSINGS: f64 = 32.0;
const ROLLOFF: f64 = 0.9;
const KAISER_BETA: f64 = 8.0;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let half_sq = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        term *= half_sq / (k as f64 * k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

#[derive(Debug, Clone)]
pub struct Resampler {
    up: u64,
    down: u64,
    half_width: usize,
    /// `phases[p][k]` weights input offset `k - half_width + 1` for phase `p`.
    phases: Vec<Vec<f64>>,
}

impl Resampler {
    pub fn new(source_rate_hz: u32, target_rate_hz: u32) -> Result<Self> {
        if source_rate_hz == 0 || target_rate_hz == 0 {
            return Err(Error::InvalidInput("sample rates must be positive".into()));
        }
        let g = gcd(source_rate_hz as u64, target_rate_hz as u64);
        let up = target_rate_hz as u64 / g;
        let down = source_rate_hz as u64 / g;

        let band = (up as f64 / down as f64).min(1.0);
        let cutoff = ROLLOFF * band;
        let half_width = (HALF_CROSSINGS / band).ceil() as usize;
        let i0_beta = bessel_i0(KAISER_BETA);

        let phases = (0..up)
            .map(|p| {
                let frac = p as f64 / up as f64;
                let mut taps: Vec<f64> = (0..2 * half_width)
                    .map(|k| {
                        let offset = k as f64 - half_width as f64 + 1.0;
                        let x = frac - offset;
                        let r = x / half_width as f64;
                        let window = if r.abs() >= 1.0 {
                            0.0
                        } else {
                            bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / i0_beta
                        };
                        cutoff * sinc(cutoff * x) * window
                    })
                    .collect();
                // unity DC gain for every phase
                let sum: f64 = taps.iter().sum();
                taps.iter_mut().for_each(|t| *t /= sum);
                taps
            })
            .collect();

        Ok(Self {
            up,
            down,
            half_width,
            phases,
        })
    }

    pub fn is_identity(&self) -> bool {
        self.up == self.down
    }

    /// Number of output samples for `n` input samples: `round(n * L / M)`.
    pub fn output_len(&self, n: usize) -> usize {
        ((2 * n as u64 * self.up + self.down) / (2 * self.down)) as usize
    }

    pub fn process(&self, input: &[f32]) -> Vec<f32> {
        if self.is_identity() {
            return input.to_vec();
        }
        let n_in = input.len() as i64;
        let lead = self.half_width as i64 - 1;
        (0..self.output_len(input.len()))
            .map(|n| {
                let pos = n as u64 * self.down;
                let base = (pos / self.up) as i64;
                let taps = &self.phases[(pos % self.up) as usize];
                let first = base - lead;
                let lo = (-first).max(0) as usize;
                let hi = ((n_in - first).max(0) as usize).min(taps.len());
                let mut acc = 0.0f64;
                for (k, &w) in taps.iter().enumerate().take(hi).skip(lo) {
                    acc += w * input[(first + k as i64) as usize] as f64;
                }
                acc as f32
            })
            .collect()
    }
}

/// Band-limited conversion of `clip` to `target_rate_hz`.
pub fn resample(clip: &AudioClip, target_rate_hz: u32) -> Result<AudioClip> {
    if clip.is_empty() {
        return Err(Error::InvalidInput("cannot resample an empty clip".into()));
    }
    if clip.sample_rate_hz == target_rate_hz {
        return Ok(clip.clone());
    }
    let resampler = Resampler::new(clip.sample_rate_hz, target_rate_hz)?;
    Ok(AudioClip::new(resampler.process(&clip.samples), target_rate_hz))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sine(freq: f64, rate: u32, n: usize) -> Vec<f32> {
        (0..n)
            .map(|i| (2.0 * PI * freq * i as f64 / rate as f64).sin() as f32)
            .collect()
    }

    fn rms(x: &[f32]) -> f64 {
        (x.iter().map(|&v| (v as f64).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
    }

    /// Magnitude of the DFT of `x` at `freq` (direct correlation).
    fn dft_mag(x: &[f32], rate: u32, freq: f64) -> f64 {
        let (mut re, mut im) = (0.0, 0.0);
        for (i, &v) in x.iter().enumerate() {
            let ph = 2.0 * PI * freq * i as f64 / rate as f64;
            re += v as f64 * ph.cos();
            im -= v as f64 * ph.sin();
        }
        (re * re + im * im).sqrt()
    }

    #[test]
    fn length_follows_rate_ratio() {
        let clip = AudioClip::new(vec![0.0; 480_000], 48_000);
        assert_eq!(resample(&clip, 16_000).unwrap().len(), 160_000);
        let r = Resampler::new(44_100, 16_000).unwrap();
        assert_eq!(r.output_len(44_100), 16_000);
        assert_eq!(r.output_len(1000), (1000.0f64 * 16.0 / 44.1).round() as usize);
    }

    #[test]
    fn same_rate_is_identity() {
        let clip = AudioClip::new(sine(440.0, 24_000, 500), 24_000);
        assert_eq!(resample(&clip, 24_000).unwrap(), clip);
    }

    #[test]
    fn empty_clip_rejected() {
        let clip = AudioClip::new(vec![], 48_000);
        assert!(matches!(resample(&clip, 16_000), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn downsampled_sine_keeps_peak_and_level() {
        let input = sine(1000.0, 48_000, 48_000);
        let out = resample(&AudioClip::new(input.clone(), 48_000), 16_000).unwrap();
        // skip the filter's edge transients
        let core = &out.samples[200..out.len() - 200];
        let rel = (rms(core) - rms(&input)).abs() / rms(&input);
        assert!(rel < 0.01, "rms deviation {rel}");

        // peak-bin oracle over a 1 Hz grid
        let peak = (1..8000)
            .step_by(50)
            .chain(950..1051)
            .map(|f| (f, dft_mag(core, 16_000, f as f64)))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(peak, 1000);
    }

    #[test]
    fn passband_ripple_below_tenth_db() {
        for (src, dst) in [(48_000, 16_000), (16_000, 48_000), (24_000, 48_000), (44_100, 16_000)] {
            let nyq_out = src.min(dst) as f64 / 2.0;
            for frac in [0.05, 0.25, 0.5, 0.75] {
                let f = frac * nyq_out;
                let input = sine(f, src, src as usize);
                let out = resample(&AudioClip::new(input.clone(), src), dst).unwrap();
                let edge = out.len() / 10;
                let gain = rms(&out.samples[edge..out.len() - edge]) / rms(&input[src as usize / 10..]);
                let db = 20.0 * gain.log10();
                assert!(db.abs() < 0.1, "{src}->{dst} at {f} Hz: {db} dB");
            }
        }
    }

    #[test]
    fn stopband_is_attenuated_when_decimating() {
        let input = sine(12_000.0, 48_000, 48_000);
        let out = resample(&AudioClip::new(input.clone(), 48_000), 16_000).unwrap();
        let edge = 400;
        let level = rms(&out.samples[edge..out.len() - edge]) / rms(&input);
        assert!(20.0 * level.log10() < -60.0);
    }

    #[test]
    fn linear_in_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f32> = (0..4000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f32> = (0..4000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (a, b) = (0.7f32, -1.3f32);
        let mix: Vec<f32> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        for target in [16_000, 48_000] {
            let rx = resample(&AudioClip::new(x.clone(), 24_000), target).unwrap().samples;
            let ry = resample(&AudioClip::new(y.clone(), 24_000), target).unwrap().samples;
            let rm = resample(&AudioClip::new(mix.clone(), 24_000), target).unwrap().samples;
            let err: f64 = rm
                .iter()
                .zip(rx.iter().zip(&ry))
                .map(|(&m, (&p, &q))| (m as f64 - (a * p + b * q) as f64).powi(2))
                .sum::<f64>()
                / rm.len() as f64;
            assert!(err.sqrt() < 1e-6, "rms error {}", err.sqrt());
        }
    }
}
