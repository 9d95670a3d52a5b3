//! Compare reverse-mode gradients of the GNLL loss with central finite
//! differences on the tiny architecture.
//!
//! cargo run --example gradient_check

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use samos::dsp::LogSpectrogram;
use samos::model::{backward, init_params, ArchitectureConfig, ModelInput, Network};
use samos::sslf::SslFeatureMatrix;

fn main() -> samos::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let arch = ArchitectureConfig::tiny();
    let params = init_params(&arch, 0)?;
    let ssl = SslFeatureMatrix::new(
        (0..30 * arch.ssl_dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        30,
        arch.ssl_dim,
    )?;
    let spec = LogSpectrogram {
        values: (0..12 * 16).map(|_| rng.gen_range(-3.0..0.0)).collect(),
        n_bins: 12,
        n_frames: 16,
        source_rate_hz: 48_000,
    };
    let inputs = [ModelInput {
        ssl: &ssl,
        spec: Some(&spec),
    }];
    let labels = [3.7];

    let (grads, loss) = backward(&params, &inputs, &labels)?;
    println!("loss {loss:.6}, {} parameters", params.n_params());
    let h = 1e-5f32;
    for (ti, t) in params.tensors.iter().enumerate() {
        let mut worst = 0.0f64;
        let mut probe = params.clone();
        for j in 0..t.len() {
            let w = t.data[j];
            probe.tensors[ti].data[j] = w + h;
            let lp = Network::new(&probe)?.loss(&inputs, &labels)?;
            probe.tensors[ti].data[j] = w - h;
            let lm = Network::new(&probe)?.loss(&inputs, &labels)?;
            probe.tensors[ti].data[j] = w;
            let numeric = (lp - lm) / ((w + h) as f64 - (w - h) as f64);
            let analytic = grads.values[ti][j];
            worst = worst.max((analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8));
        }
        println!("{:24} {:5} values  worst relative error {worst:.2e}", t.name, t.len());
    }
    Ok(())
}
