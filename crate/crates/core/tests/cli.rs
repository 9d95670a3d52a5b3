use std::path::Path;
use std::process::{Command, Output};

use samos::data::{generate_synthetic, SynthConfig};
use samos::model::{init_params, load_checkpoint, save_checkpoint, ArchitectureConfig};
use samos::workflow::read_predictions;

const SUBCOMMANDS: [&str; 8] = [
    "featurize",
    "synth-data",
    "train",
    "finetune",
    "two-step",
    "evaluate",
    "predict",
    "export-report",
];

fn samos(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_samos"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Small corpus at `dir/data` with 16-dim features and 0.5 s clips.
fn corpus(dir: &Path) {
    let cfg = SynthConfig {
        n_systems: 4,
        utts_per_system: 4,
        seed: 1,
        clip_seconds: 0.5,
        ssl_dim: 16,
        ..SynthConfig::default()
    };
    generate_synthetic(&cfg, &dir.join("data")).unwrap();
}

const DESK: [&str; 6] = [
    "--set",
    "arch.preset=desk",
    "--set",
    "arch.ssl_dim=16",
    "--set",
    "features.clip_seconds=0.5",
];

fn desk_args<'a>(head: &[&'a str]) -> Vec<&'a str> {
    head.iter().copied().chain(DESK).collect()
}

fn desk_checkpoint(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("init.ckpt");
    save_checkpoint(&init_params(&ArchitectureConfig::desk(16), 3).unwrap(), &path).unwrap();
    path
}

#[test]
fn help_documents_every_flag() {
    let dir = tempfile::tempdir().unwrap();
    for sub in SUBCOMMANDS {
        let out = samos(dir.path(), &[sub, "--help"]);
        assert!(out.status.success(), "{sub}");
        let text = String::from_utf8_lossy(&out.stdout);
        for flag in ["--config", "--set", "--seed", "--out"] {
            assert!(text.contains(flag), "{sub} --help lacks {flag}:\n{text}");
        }
    }
    let text = String::from_utf8_lossy(&samos(dir.path(), &["evaluate", "--help"]).stdout).into_owned();
    assert!(text.contains("--checkpoint") && text.contains("--manifest"));
    let top = samos(dir.path(), &["--help"]);
    assert!(String::from_utf8_lossy(&top.stdout).contains("SAMOS_THREADS"));
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 5] = [
        &[],
        &["frobnicate"],
        &["train", "--set", "pretrain.epochz=3"],
        &["train", "--set", "no_equals_sign"],
        &["evaluate"],
    ];
    for args in cases {
        let out = samos(dir.path(), args);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", stderr(&out));
        assert!(!stderr(&out).is_empty());
    }
    let out = Command::new(env!("CARGO_BIN_EXE_samos"))
        .args(["synth-data", "--out", "x"])
        .current_dir(dir.path())
        .env("SAMOS_THREADS", "lots")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("SAMOS_THREADS"));
}

#[test]
fn evaluate_with_missing_features_names_the_utterance() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    std::fs::remove_file(dir.path().join("data/sslf/sys002_u001.sslf")).unwrap();
    let ckpt = desk_checkpoint(dir.path());
    let args = desk_args(&[
        "evaluate",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--manifest",
        "data/manifest.csv",
        "--out",
        "ev",
    ]);
    let out = samos(dir.path(), &args);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("sys002_u001"), "{}", stderr(&out));
}

#[test]
fn predict_matches_evaluate_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    let ckpt = desk_checkpoint(dir.path());
    let ck = ckpt.to_str().unwrap();
    let ev = samos(
        dir.path(),
        &desk_args(&[
            "evaluate",
            "--checkpoint",
            ck,
            "--manifest",
            "data/manifest.csv",
            "--out",
            "ev",
        ]),
    );
    assert!(ev.status.success(), "{}", stderr(&ev));
    assert!(String::from_utf8_lossy(&ev.stdout).contains("UTT_SRCC"));
    let pr = samos(
        dir.path(),
        &desk_args(&[
            "predict",
            "--checkpoint",
            ck,
            "--manifest",
            "data/manifest.csv",
            "--out",
            "pr",
        ]),
    );
    assert!(pr.status.success(), "{}", stderr(&pr));

    let a = read_predictions(&dir.path().join("ev/predictions.csv")).unwrap();
    let b = read_predictions(&dir.path().join("pr/predictions.csv")).unwrap();
    assert_eq!(a.len(), 16);
    for ((ia, ma, va), (ib, mb, vb)) in a.iter().zip(&b) {
        assert_eq!(ia, ib);
        assert_eq!(ma.to_bits(), mb.to_bits());
        assert_eq!(va.to_bits(), vb.to_bits());
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("ev/report.json")).unwrap()).unwrap();
    assert_eq!(report["n_utterances"], 16);
    assert_eq!(report["n_systems"], 4);
}

#[test]
fn train_finetune_and_export_report() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    let common = [
        "--set",
        "pretrain_data.manifest=data/manifest.csv",
        "--set",
        "finetune_data.manifest=data/manifest.csv",
        "--set",
        "pretrain_data.split.train_fraction=0.75",
        "--set",
        "finetune_data.split.train_fraction=0.75",
        "--set",
        "eval_manifest=data/manifest.csv",
        "--set",
        "pretrain.epochs=2",
        "--set",
        "finetune.epochs=1",
        "--set",
        "pretrain.batch_size=4",
    ];
    let mut args = desk_args(&["train", "--out", "t", "--seed", "5"]);
    args.extend(common);
    let out = samos(dir.path(), &args);
    assert!(out.status.success(), "{}", stderr(&out));
    for f in [
        "model.ckpt",
        "record.json",
        "resolved_config.json",
        "report.json",
        "predictions.csv",
    ] {
        assert!(dir.path().join("t").join(f).exists(), "{f}");
    }
    let record: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("t/record.json")).unwrap()).unwrap();
    assert_eq!(record["train_loss"].as_array().unwrap().len(), 2);

    let mut args = desk_args(&["finetune", "--out", "f", "--checkpoint", "t/model.ckpt"]);
    args.extend(common);
    let out = samos(dir.path(), &args);
    assert!(out.status.success(), "{}", stderr(&out));
    let before = load_checkpoint(&dir.path().join("t/model.ckpt")).unwrap();
    let after = load_checkpoint(&dir.path().join("f/model.ckpt")).unwrap();
    assert_eq!(before.arch, after.arch);
    assert_ne!(before.tensors, after.tensors);

    let out = samos(
        dir.path(),
        &["export-report", "--out", "agg", "t/report.json", "f/report.json"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("±") && stdout.contains("runs: 2"), "{stdout}");
    let agg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("agg/aggregate.json")).unwrap()).unwrap();
    assert_eq!(agg["utt_mse"]["n"], 2);

    let missing = samos(dir.path(), &desk_args(&["finetune", "--out", "g"]));
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn synth_data_then_featurize_writes_caches() {
    let dir = tempfile::tempdir().unwrap();
    let out = samos(
        dir.path(),
        &[
            "synth-data",
            "--out",
            "c",
            "--set",
            "synth.n_systems=2",
            "--set",
            "synth.utts_per_system=2",
            "--set",
            "synth.clip_seconds=0.25",
            "--set",
            "synth.ssl_dim=8",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let out = samos(
        dir.path(),
        &[
            "featurize",
            "--manifest",
            "c/manifest.csv",
            "--out",
            "c",
            "--set",
            "features.clip_seconds=0.25",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let caches = std::fs::read_dir(dir.path().join("c/spec")).unwrap().count();
    assert_eq!(caches, 4);
}

#[test]
fn non_finite_weights_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    let mut params = init_params(&ArchitectureConfig::desk(16), 3).unwrap();
    params.tensors[2].data[0] = f32::NAN;
    let name = params.tensors[2].name.clone();
    let path = dir.path().join("nan.ckpt");
    save_checkpoint(&params, &path).unwrap();
    let out = samos(
        dir.path(),
        &desk_args(&[
            "evaluate",
            "--checkpoint",
            path.to_str().unwrap(),
            "--manifest",
            "data/manifest.csv",
            "--out",
            "ev",
        ]),
    );
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains(&name));
}
