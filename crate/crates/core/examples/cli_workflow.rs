//! Drive the same workflow the `samos` binary runs: resolve a config from
//! overrides, synthesize data, run two-step training and evaluate.
//!
//! cargo run --release --example cli_workflow

use samos::workflow::{resolve_config, run, Command, Invocation};

fn main() -> samos::Result<()> {
    let root = std::env::temp_dir().join("samos-example-workflow");
    let at = |p: &str| root.join(p).display().to_string();
    let step = |command: Command, overrides: &[String]| -> samos::Result<()> {
        let config = resolve_config(None, overrides, Some(11))?;
        println!("{command:?}: config {}", &config.hash()[..12]);
        run(&Invocation {
            command,
            config,
            checkpoint: None,
            manifest: None,
        })
    };

    let synth = |dir: &str, seed: u64, shift: f64| {
        vec![
            format!("output_dir={}", at(dir)),
            "synth.n_systems=16".into(),
            "synth.utts_per_system=12".into(),
            "synth.clip_seconds=0.5".into(),
            "synth.ssl_dim=16".into(),
            format!("synth.seed={seed}"),
            format!("synth.label_shift={shift}"),
        ]
    };
    step(Command::SynthData, &synth("pre", 1, 0.0))?;
    step(Command::SynthData, &synth("fine", 2, -0.5))?;

    let experiment = [
        format!("output_dir={}", at("run")),
        "arch.preset=desk".into(),
        "arch.ssl_dim=16".into(),
        "features.clip_seconds=0.5".into(),
        format!("pretrain_data.manifest={}", at("pre/manifest.csv")),
        format!("finetune_data.manifest={}", at("fine/manifest.csv")),
        format!("eval_manifest={}", at("fine/manifest.csv")),
        "pretrain.epochs=20".into(),
        "pretrain.lr=0.001".into(),
        "pretrain.batch_size=8".into(),
        "finetune.epochs=5".into(),
        "finetune.lr=0.001".into(),
        "finetune.batch_size=8".into(),
    ];
    step(Command::TwoStep, &experiment)?;
    println!("artifacts in {}", at("run"));
    Ok(())
}
