//! Pretrain on a large corpus, fine-tune on a small one whose labels are
//! shifted, and compare against training on the small corpus alone.
//!
//! cargo run --release --example two_step

use samos::data::{generate_synthetic, load_dataset, split_by_system, Dataset, FeatureConfig, SplitSpec, SynthConfig};
use samos::eval::evaluate;
use samos::model::{init_params, ArchitectureConfig};
use samos::train::{train, two_step_train, TrainConfig};

fn corpus(
    name: &str,
    seed: u64,
    systems: usize,
    utts: usize,
    shift: f64,
    split: Option<f64>,
) -> samos::Result<(Dataset, Dataset)> {
    let cfg = SynthConfig {
        n_systems: systems,
        utts_per_system: utts,
        seed,
        clip_seconds: 1.0,
        ssl_dim: 32,
        label_shift: shift,
        id_prefix: name.into(),
        ..SynthConfig::default()
    };
    let manifest = generate_synthetic(&cfg, &std::env::temp_dir().join("samos-example-two-step").join(name))?;
    let features = FeatureConfig {
        clip_seconds: 1.0,
        ..FeatureConfig::default()
    };
    let spec = SplitSpec {
        train_fraction: split.unwrap_or(0.5),
        ..SplitSpec::default()
    };
    let (a, b) = split_by_system(&manifest.entries, &spec)?;
    let a = if split.is_some() { a } else { manifest.entries.clone() };
    Ok((
        load_dataset(&manifest.with_entries(a), &features, true)?,
        load_dataset(&manifest.with_entries(b), &features, true)?,
    ))
}

fn main() -> samos::Result<()> {
    let (pre_tr, pre_va) = corpus("pre", 1, 40, 10, 0.0, Some(0.8))?;
    let (fine_tr, fine_va) = corpus("fine", 2, 16, 4, -0.5, Some(0.75))?;
    let (test, _) = corpus("test", 3, 10, 10, -0.5, None)?;

    let arch = ArchitectureConfig::desk(32);
    let stage = |epochs, seed| TrainConfig {
        lr: 1e-3,
        batch_size: 16,
        epochs,
        seed,
        ..TrainConfig::default()
    };
    let outcome = two_step_train(
        &arch,
        0,
        &pre_tr,
        &pre_va,
        &fine_tr,
        &fine_va,
        &stage(20, 1),
        &stage(10, 2),
    )?;
    let (small, _) = train(&init_params(&arch, 0)?, &fine_tr, &fine_va, &stage(20, 1))?;

    for (name, params) in [
        ("pretrain only", &outcome.stage1),
        ("two-step", &outcome.stage2),
        ("small corpus only", &small),
    ] {
        let (r, _) = evaluate(params, &test)?;
        println!(
            "{name:18} test MSE {:.3}  SRCC {:.3}",
            r.utt_mse,
            r.utt_srcc.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
