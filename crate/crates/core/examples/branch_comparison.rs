//! Dual-branch model against the SSL-only ablation on a corpus where part of
//! the quality signal lives above 8 kHz, out of reach of 16 kHz features.
//!
//! cargo run --release --example branch_comparison

use samos::data::{
    generate_synthetic, load_dataset, split_by_system, FeatureConfig, SplitLevel, SplitSpec, SynthConfig,
};
use samos::eval::evaluate;
use samos::model::{init_params, ArchitectureConfig};
use samos::train::{train, TrainConfig};

fn main() -> samos::Result<()> {
    let cfg = SynthConfig {
        clip_seconds: 1.0,
        ssl_dim: 32,
        ..SynthConfig::default()
    };
    let manifest = generate_synthetic(&cfg, &std::env::temp_dir().join("samos-example-branches"))?;
    let features = FeatureConfig {
        clip_seconds: 1.0,
        ..FeatureConfig::default()
    };
    let by_utt = |seed, train_fraction| SplitSpec {
        train_fraction,
        seed,
        level: SplitLevel::Utterance,
    };
    let (rest, test) = split_by_system(&manifest.entries, &by_utt(0, 0.8))?;
    let (tr, va) = split_by_system(&rest, &by_utt(1, 0.875))?;
    let load = |e| load_dataset(&manifest.with_entries(e), &features, true);
    let (tr, va, test) = (load(tr)?, load(va)?, load(test)?);

    let train_cfg = TrainConfig {
        lr: 1e-3,
        batch_size: 16,
        epochs: 20,
        ..TrainConfig::default()
    };
    let dual = ArchitectureConfig::desk(32);
    for arch in [dual.clone(), dual.ssl_only()] {
        let strip = |d: &samos::data::Dataset| {
            if arch.uses_spectrogram() {
                d.clone()
            } else {
                d.clone().without_spectrograms()
            }
        };
        let (params, _) = train(&init_params(&arch, 0)?, &strip(&tr), &strip(&va), &train_cfg)?;
        let (r, _) = evaluate(&params, &strip(&test))?;
        println!(
            "{:?}: utterance SRCC {:.3}, LCC {:.3}, MSE {:.3}",
            arch.variant,
            r.utt_srcc.unwrap_or(f64::NAN),
            r.utt_lcc.unwrap_or(f64::NAN),
            r.utt_mse
        );
    }
    Ok(())
}
