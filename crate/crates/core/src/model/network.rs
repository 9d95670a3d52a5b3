//! Forward evaluation and exact reverse-mode gradients of the two-branch
//! MOS regressor.
//!
//! SSL branch:   `[T × D]` features → conv1d/ReLU stack → mean over time.
//! Spectrogram:  `[F × T]` log-magnitudes → (conv2d/ReLU/2×2 max-pool)* → mean
//!               over both axes.
//! Head:         concat → (dense/ReLU)* → two independent linear outputs for
//!               the posterior mean and the pre-activation of its variance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::arch::ArchitectureConfig;
use super::layers::{self, Conv2dGeom};
use super::params::{Gradients, Layout, ModelParams};
use crate::dsp::LogSpectrogram;
use crate::error::{Error, Result};
use crate::sslf::SslFeatureMatrix;

pub const SIGMA2_MIN: f64 = 1e-3;
pub const SIGMA2_MAX: f64 = 1e3;

/// Samples per gradient work unit. Fixed so that the floating-point
/// reduction order does not depend on the thread count.
const GRAD_CHUNK: usize = 4;

pub fn softplus(s: f64) -> f64 {
    if s > 0.0 {
        s + (-s).exp().ln_1p()
    } else {
        s.exp().ln_1p()
    }
}

fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// Variance from the raw head output: `clamp(ln(1 + e^s), 1e-3, 1e3)`.
pub fn positivity(s: f64) -> f64 {
    softplus(s).clamp(SIGMA2_MIN, SIGMA2_MAX)
}

fn positivity_grad(s: f64) -> f64 {
    let sp = softplus(s);
    if (SIGMA2_MIN..=SIGMA2_MAX).contains(&sp) {
        sigmoid(s)
    } else {
        0.0
    }
}

/// Per-sample Gaussian negative log-likelihood without the constant term.
pub fn gnll(label: f64, mu: f64, sigma2: f64) -> f64 {
    0.5 * (sigma2.ln() + (label - mu).powi(2) / sigma2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MosPrediction {
    pub mu: f64,
    pub sigma2: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ModelInput<'a> {
    pub ssl: &'a SslFeatureMatrix,
    pub spec: Option<&'a LogSpectrogram>,
}

fn check_finite(layer: &str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(i) => Err(Error::numeric(layer, format!("element {i} is {}", values[i]))),
    }
}

struct FpmTape {
    /// `acts[0]` is the transposed input, `acts[l + 1]` the post-ReLU output of layer `l`.
    acts: Vec<Vec<f64>>,
    lens: Vec<usize>,
}

struct SpmBlockTape {
    input: Vec<f64>,
    geom: Conv2dGeom,
    conv_out: Vec<f64>,
    arg: Vec<usize>,
}

struct SpmTape {
    blocks: Vec<SpmBlockTape>,
    final_area: usize,
}

struct Tape {
    fpm: FpmTape,
    spm: Option<SpmTape>,
    /// `head[0]` is the fused vector, `head[l + 1]` the post-ReLU output of layer `l`.
    head: Vec<Vec<f64>>,
    var_raw: f64,
    prediction: MosPrediction,
}

/// Parameters widened to f64 once, ready for repeated evaluation.
pub struct Network<'p> {
    params: &'p ModelParams,
    layout: Layout,
    weights: Vec<Vec<f64>>,
}

impl<'p> Network<'p> {
    pub fn new(params: &'p ModelParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            layout: Layout::new(&params.arch),
            weights: params
                .tensors
                .iter()
                .map(|t| t.data.iter().map(|&v| v as f64).collect())
                .collect(),
        })
    }

    pub fn arch(&self) -> &ArchitectureConfig {
        &self.params.arch
    }

    fn wb(&self, idx: usize) -> (&[f64], &[f64]) {
        (&self.weights[idx], &self.weights[idx + 1])
    }

    fn fpm_forward(&self, ssl: &SslFeatureMatrix) -> Result<(Vec<f64>, FpmTape)> {
        let arch = self.arch();
        if ssl.dim != arch.ssl_dim {
            return Err(Error::Shape(format!(
                "SSL features have dim {}, model expects {}",
                ssl.dim, arch.ssl_dim
            )));
        }
        let min_frames = arch.min_ssl_frames();
        if ssl.n_frames < min_frames {
            return Err(Error::Shape(format!(
                "{} SSL frames, feature processing needs at least {min_frames}",
                ssl.n_frames
            )));
        }

        // [T x D] -> [D x T]
        let (t, d) = (ssl.n_frames, ssl.dim);
        let mut input = vec![0.0; t * d];
        for f in 0..t {
            for (c, &v) in ssl.row(f).iter().enumerate() {
                input[c * t + f] = v as f64;
            }
        }

        let mut acts = vec![input];
        let mut lens = vec![t];
        let mut c_in = d;
        for (l, &c_out) in arch.fpm_channels.iter().enumerate() {
            let (w, b) = self.wb(self.layout.fpm[l]);
            let (mut y, t_out) = layers::conv1d_forward(
                acts.last().unwrap(),
                c_in,
                *lens.last().unwrap(),
                w,
                b,
                arch.fpm_kernel,
                arch.fpm_stride,
            );
            layers::relu_in_place(&mut y);
            check_finite(&format!("fpm.conv{l}"), &y)?;
            acts.push(y);
            lens.push(t_out);
            c_in = c_out;
        }
        let embed = layers::channel_mean(acts.last().unwrap(), c_in, *lens.last().unwrap());
        Ok((embed, FpmTape { acts, lens }))
    }

    fn spm_forward(&self, spec: &LogSpectrogram) -> Result<(Vec<f64>, SpmTape)> {
        let arch = self.arch();
        let need = arch.min_spec_extent();
        if spec.n_bins < need || spec.n_frames < need {
            return Err(Error::Shape(format!(
                "spectrogram {}x{} is smaller than the {need}x{need} receptive field",
                spec.n_bins, spec.n_frames
            )));
        }
        let mut x: Vec<f64> = spec.values.iter().map(|&v| v as f64).collect();
        let (mut c, mut h, mut w) = (1, spec.n_bins, spec.n_frames);
        let mut blocks = Vec::with_capacity(arch.spm_blocks.len());
        for (l, block) in arch.spm_blocks.iter().enumerate() {
            let geom = Conv2dGeom {
                c_in: c,
                h,
                w,
                c_out: block.out_channels,
                k: block.kernel,
                s: block.stride,
            };
            let (wt, b) = self.wb(self.layout.spm[l]);
            let mut conv_out = layers::conv2d_forward(&x, geom, wt, b);
            layers::relu_in_place(&mut conv_out);
            check_finite(&format!("spm.conv{l}"), &conv_out)?;
            let (ho, wo) = geom.out_hw();
            let (pooled, arg) = layers::maxpool2_forward(&conv_out, geom.c_out, ho, wo);
            blocks.push(SpmBlockTape {
                input: std::mem::replace(&mut x, pooled),
                geom,
                conv_out,
                arg,
            });
            (c, h, w) = (geom.c_out, ho / 2, wo / 2);
        }
        let embed = layers::channel_mean(&x, c, h * w);
        Ok((
            embed,
            SpmTape {
                blocks,
                final_area: h * w,
            },
        ))
    }

    fn forward_tape(&self, input: ModelInput<'_>) -> Result<Tape> {
        let arch = self.arch();
        let (mut fused, fpm) = self.fpm_forward(input.ssl)?;
        let spm = if arch.uses_spectrogram() {
            let spec = input
                .spec
                .ok_or_else(|| Error::InvalidInput("dual-branch model needs a spectrogram input".into()))?;
            let (embed, tape) = self.spm_forward(spec)?;
            fused.extend(embed);
            Some(tape)
        } else {
            None
        };

        let mut head = vec![fused];
        for (l, &idx) in self.layout.head.iter().enumerate() {
            let (w, b) = self.wb(idx);
            let mut z = layers::dense_forward(head.last().unwrap(), w, b);
            layers::relu_in_place(&mut z);
            check_finite(&format!("head.fc{l}"), &z)?;
            head.push(z);
        }
        let last = head.last().unwrap();
        let (w, b) = self.wb(self.layout.mu);
        let mu = layers::dense_forward(last, w, b)[0];
        let (w, b) = self.wb(self.layout.var);
        let var_raw = layers::dense_forward(last, w, b)[0];
        check_finite("head.mu", &[mu])?;
        check_finite("head.var", &[var_raw])?;

        Ok(Tape {
            fpm,
            spm,
            head,
            var_raw,
            prediction: MosPrediction {
                mu,
                sigma2: positivity(var_raw),
            },
        })
    }

    pub fn forward(&self, input: ModelInput<'_>) -> Result<MosPrediction> {
        Ok(self.forward_tape(input)?.prediction)
    }

    pub fn fpm_embedding(&self, ssl: &SslFeatureMatrix) -> Result<Vec<f64>> {
        Ok(self.fpm_forward(ssl)?.0)
    }

    pub fn spm_embedding(&self, spec: &LogSpectrogram) -> Result<Vec<f64>> {
        if !self.arch().uses_spectrogram() {
            return Err(Error::InvalidInput("ssl_only model has no spectrogram branch".into()));
        }
        Ok(self.spm_forward(spec)?.0)
    }

    /// Back-propagate `scale * gnll` of one sample into `grads`; returns the
    /// unscaled loss.
    fn backward_sample(&self, tape: &Tape, label: f64, scale: f64, grads: &mut Gradients) -> Result<f64> {
        let arch = self.arch();
        let MosPrediction { mu, sigma2 } = tape.prediction;
        let resid = label - mu;
        let loss = gnll(label, mu, sigma2);
        check_finite("loss", &[loss])?;

        let d_mu = -resid / sigma2 * scale;
        let d_sigma2 = 0.5 * (1.0 / sigma2 - resid * resid / (sigma2 * sigma2)) * scale;
        let d_var_raw = d_sigma2 * positivity_grad(tape.var_raw);

        let last = tape.head.last().unwrap();
        let (dw, db) = grads.pair_mut(self.layout.mu);
        let mut dz = layers::dense_backward(last, &self.weights[self.layout.mu], &[d_mu], dw, db);
        let (dw, db) = grads.pair_mut(self.layout.var);
        let dz_var = layers::dense_backward(last, &self.weights[self.layout.var], &[d_var_raw], dw, db);
        dz.iter_mut().zip(&dz_var).for_each(|(a, b)| *a += b);

        for (l, &idx) in self.layout.head.iter().enumerate().rev() {
            layers::relu_backward_in_place(&mut dz, &tape.head[l + 1]);
            let (dw, db) = grads.pair_mut(idx);
            dz = layers::dense_backward(&tape.head[l], &self.weights[idx], &dz, dw, db);
        }
        check_finite("head (backward)", &dz)?;

        let embed = arch.branch_embed_dim;
        let fpm = &tape.fpm;
        let n_layers = arch.fpm_channels.len();
        let mut d = layers::channel_mean_backward(&dz[..embed], fpm.lens[n_layers]);
        for l in (0..n_layers).rev() {
            layers::relu_backward_in_place(&mut d, &fpm.acts[l + 1]);
            let c_in = if l == 0 { arch.ssl_dim } else { arch.fpm_channels[l - 1] };
            let idx = self.layout.fpm[l];
            let (dw, db) = grads.pair_mut(idx);
            let dx = layers::conv1d_backward(
                &fpm.acts[l],
                c_in,
                fpm.lens[l],
                &self.weights[idx],
                arch.fpm_kernel,
                arch.fpm_stride,
                &d,
                fpm.lens[l + 1],
                dw,
                db,
                l > 0,
            );
            if let Some(dx) = dx {
                d = dx;
            }
        }

        if let Some(spm) = &tape.spm {
            let mut d = layers::channel_mean_backward(&dz[embed..], spm.final_area);
            for (l, block) in spm.blocks.iter().enumerate().rev() {
                let mut d_conv = layers::maxpool2_backward(&d, &block.arg, block.conv_out.len());
                layers::relu_backward_in_place(&mut d_conv, &block.conv_out);
                let idx = self.layout.spm[l];
                let (dw, db) = grads.pair_mut(idx);
                if let Some(dx) =
                    layers::conv2d_backward(&block.input, block.geom, &self.weights[idx], &d_conv, dw, db, l > 0)
                {
                    d = dx;
                }
            }
        }
        Ok(loss)
    }

    /// Mean GNLL over the batch and its exact gradient.
    pub fn loss_and_gradients(&self, batch: &[ModelInput<'_>], labels: &[f64]) -> Result<(Gradients, f64)> {
        validate_batch(batch, labels)?;
        let scale = 1.0 / batch.len() as f64;
        let partials: Vec<Result<(Gradients, f64)>> = batch
            .par_chunks(GRAD_CHUNK)
            .zip(labels.par_chunks(GRAD_CHUNK))
            .map(|(inputs, ys)| {
                let mut grads = Gradients::zeros_like(self.params);
                let mut loss = 0.0;
                for (input, &y) in inputs.iter().zip(ys) {
                    let tape = self.forward_tape(*input)?;
                    loss += self.backward_sample(&tape, y, scale, &mut grads)?;
                }
                Ok((grads, loss))
            })
            .collect();

        let mut iter = partials.into_iter();
        let (mut total, mut loss) = iter.next().expect("non-empty batch")?;
        for part in iter {
            let (g, l) = part?;
            total.add_assign(&g);
            loss += l;
        }
        for (name, values) in total.names.iter().zip(&total.values) {
            check_finite(&format!("{name} (gradient)"), values)?;
        }
        Ok((total, loss * scale))
    }

    /// Mean GNLL over the batch without gradients.
    pub fn loss(&self, batch: &[ModelInput<'_>], labels: &[f64]) -> Result<f64> {
        validate_batch(batch, labels)?;
        let preds = self.predict(batch)?;
        let total: f64 = preds.iter().zip(labels).map(|(p, &y)| gnll(y, p.mu, p.sigma2)).sum();
        Ok(total / batch.len() as f64)
    }

    /// Predictions in input order.
    pub fn predict(&self, batch: &[ModelInput<'_>]) -> Result<Vec<MosPrediction>> {
        batch.par_iter().map(|input| self.forward(*input)).collect()
    }
}

fn validate_batch(batch: &[ModelInput<'_>], labels: &[f64]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    if batch.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} inputs but {} labels",
            batch.len(),
            labels.len()
        )));
    }
    if labels.iter().any(|y| !y.is_finite()) {
        return Err(Error::InvalidInput("non-finite label".into()));
    }
    Ok(())
}

pub fn forward_fpm(params: &ModelParams, ssl: &SslFeatureMatrix) -> Result<Vec<f64>> {
    Network::new(params)?.fpm_embedding(ssl)
}

pub fn forward_spm(params: &ModelParams, spec: &LogSpectrogram) -> Result<Vec<f64>> {
    Network::new(params)?.spm_embedding(spec)
}

pub fn forward(params: &ModelParams, input: ModelInput<'_>) -> Result<MosPrediction> {
    Network::new(params)?.forward(input)
}

pub fn backward(params: &ModelParams, batch: &[ModelInput<'_>], labels: &[f64]) -> Result<(Gradients, f64)> {
    Network::new(params)?.loss_and_gradients(batch, labels)
}
