//! Repeat a small training run over several derived seeds and report
//! mean ± standard deviation of every metric.
//!
//! cargo run --release --example multi_seed

use samos::data::{
    generate_synthetic, load_dataset, split_by_system, FeatureConfig, SplitLevel, SplitSpec, SynthConfig,
};
use samos::eval::evaluate;
use samos::model::{init_params, ArchitectureConfig};
use samos::seed::derive_seed;
use samos::train::{multi_run, train, TrainConfig};

fn main() -> samos::Result<()> {
    let corpus = SynthConfig {
        n_systems: 16,
        utts_per_system: 16,
        clip_seconds: 0.5,
        ssl_dim: 16,
        ..SynthConfig::default()
    };
    let manifest = generate_synthetic(&corpus, &std::env::temp_dir().join("samos-example-multi"))?;
    let features = FeatureConfig {
        clip_seconds: 0.5,
        ..FeatureConfig::default()
    };
    // utterance-level hold-out: every system is seen in training
    let by_utt = |seed| SplitSpec {
        seed,
        level: SplitLevel::Utterance,
        ..SplitSpec::default()
    };
    let (rest, test) = split_by_system(&manifest.entries, &by_utt(0))?;
    let (tr, va) = split_by_system(&rest, &by_utt(1))?;
    let load = |e| load_dataset(&manifest.with_entries(e), &features, true);
    let (tr, va, test) = (load(tr)?, load(va)?, load(test)?);
    let arch = ArchitectureConfig::desk(16);

    let agg = multi_run(4, 2024, |seed| {
        let cfg = TrainConfig {
            lr: 1e-3,
            batch_size: 8,
            epochs: 20,
            seed: derive_seed(seed, "train"),
            ..TrainConfig::default()
        };
        let (params, _) = train(&init_params(&arch, derive_seed(seed, "init"))?, &tr, &va, &cfg)?;
        let (report, _) = evaluate(&params, &test)?;
        println!("seed {seed:>20}: utt SRCC {:.3}", report.utt_srcc.unwrap_or(f64::NAN));
        Ok(report)
    })?;
    print!("{}", samos::workflow::format_aggregate(&agg));
    Ok(())
}
