//! Non-intrusive speech quality (MOS) prediction from frozen SSL features
//! augmented with a 48 kHz log-spectrogram branch.
//!
//! The crate covers the whole pipeline: signal front-end ([`dsp`]), the SSL
//! feature file format ([`sslf`]), the two-branch network with exact
//! gradients ([`model`]), Adam training and pretrain/fine-tune ([`train`]),
//! MSE/LCC/SRCC evaluation ([`eval`]), manifests and synthetic corpora
//! ([`data`]), and the command workflows behind the `samos` binary
//! ([`workflow`]). See `examples/` for one runnable program per capability.

pub mod data;
pub mod dsp;
pub mod error;
pub mod eval;
mod io_util;
pub mod model;
pub mod seed;
pub mod sslf;
pub mod train;
pub mod workflow;

pub use error::{Error, Result};
