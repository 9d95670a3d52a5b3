//! Train the dual-branch model on a synthetic corpus, evaluate it on held-out
//! systems and save the checkpoint.
//!
//! cargo run --release --example train_and_evaluate

use samos::data::{generate_synthetic, load_dataset, split_by_system, FeatureConfig, SplitSpec, SynthConfig};
use samos::eval::{evaluate, format_table};
use samos::model::{init_params, load_checkpoint, save_checkpoint, ArchitectureConfig};
use samos::train::{train, TrainConfig};

fn main() -> samos::Result<()> {
    let dir = std::env::temp_dir().join("samos-example-train");
    let corpus = SynthConfig {
        n_systems: 20,
        utts_per_system: 20,
        clip_seconds: 1.0,
        ssl_dim: 32,
        ..SynthConfig::default()
    };
    let manifest = generate_synthetic(&corpus, &dir.join("data"))?;
    let features = FeatureConfig {
        clip_seconds: 1.0,
        ..FeatureConfig::default()
    };

    let (rest, test) = split_by_system(
        &manifest.entries,
        &SplitSpec {
            train_fraction: 0.75,
            ..SplitSpec::default()
        },
    )?;
    let (tr, va) = split_by_system(
        &rest,
        &SplitSpec {
            seed: 1,
            ..SplitSpec::default()
        },
    )?;
    let load = |entries| load_dataset(&manifest.with_entries(entries), &features, true);
    let (tr, va, test) = (load(tr)?, load(va)?, load(test)?);
    println!("train {} / val {} / test {} utterances", tr.len(), va.len(), test.len());

    let arch = ArchitectureConfig::desk(32);
    let init = init_params(&arch, 7)?;
    println!("{} parameters", init.n_params());
    let cfg = TrainConfig {
        lr: 1e-3,
        batch_size: 16,
        epochs: 25,
        ..TrainConfig::default()
    };
    let (params, record) = train(&init, &tr, &va, &cfg)?;
    for (e, (t, v)) in record.train_loss.iter().zip(&record.val_loss).enumerate() {
        println!("epoch {:2}  train {t:7.4}  val {v:7.4}", e + 1);
    }
    println!("selected epoch {}", record.selected_epoch);

    let path = dir.join("model.ckpt");
    save_checkpoint(&params, &path)?;
    let (report, _) = evaluate(&load_checkpoint(&path)?, &test)?;
    print!("{}", format_table(&report));
    Ok(())
}
