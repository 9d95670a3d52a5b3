//! The MOS regressor: feature processing (SSL branch), spectrogram
//! processing, fusion and the Gaussian-posterior mapping heads.

mod arch;
mod checkpoint;
mod layers;
mod network;
mod params;


pub use arch::{ArchitectureConfig, SpmBlock, Variant};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use network::{
    backward, forward, forward_fpm, forward_spm, gnll, positivity, softplus, ModelInput, MosPrediction, Network,
    SIGMA2_MAX, SIGMA2_MIN,
};
pub use params::{init_params, Gradients, ModelParams, Tensor};
