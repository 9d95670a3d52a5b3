//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Run with `cargo test --test acceptance`.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use samos::data::{
    generate_synthetic, load_dataset, split_by_system, Dataset, FeatureConfig, SplitLevel, SplitSpec, SynthConfig,
};
use samos::dsp::{stft_log_magnitude, AudioClip, LogSpectrogram, StftConfig};
use samos::eval::{evaluate, lcc, mse, srcc, EvalPair};
use samos::model::{
    backward, forward, gnll, init_params, read_checkpoint, write_checkpoint, ArchitectureConfig, ModelInput,
    ModelParams, Network,
};
use samos::sslf::{read_features, write_features, SslFeatureMatrix};
use samos::train::{train, two_step_train, TrainConfig};
use samos::Error;

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------- 1

fn random_ssl(rng: &mut ChaCha8Rng, frames: usize, dim: usize) -> SslFeatureMatrix {
    SslFeatureMatrix::new(
        (0..frames * dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        frames,
        dim,
    )
    .unwrap()
}

fn random_spec(rng: &mut ChaCha8Rng, bins: usize, frames: usize) -> LogSpectrogram {
    LogSpectrogram {
        values: (0..bins * frames).map(|_| rng.gen_range(-2.0..1.0)).collect(),
        n_bins: bins,
        n_frames: frames,
        source_rate_hz: 48_000,
    }
}

fn gradient_correctness() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let arch = ArchitectureConfig::tiny();
    let mut params = init_params(&arch, 1).unwrap();
    for t in &mut params.tensors {
        t.data.iter_mut().for_each(|v| *v = rng.gen_range(-0.5..0.5));
    }
    let ssl: Vec<_> = (0..3).map(|_| random_ssl(&mut rng, 24, arch.ssl_dim)).collect();
    let spec: Vec<_> = (0..3).map(|_| random_spec(&mut rng, 12, 14)).collect();
    let inputs: Vec<_> = ssl
        .iter()
        .zip(&spec)
        .map(|(s, p)| ModelInput { ssl: s, spec: Some(p) })
        .collect();
    let labels = [1.5, 3.2, 4.8];

    let (grads, _) = backward(&params, &inputs, &labels).unwrap();
    let h = 1e-5f32;
    let mut probe = params.clone();
    let (mut worst, mut at, mut count) = (0.0f64, String::new(), 0usize);
    for ti in 0..params.tensors.len() {
        for j in 0..params.tensors[ti].len() {
            let w = params.tensors[ti].data[j];
            probe.tensors[ti].data[j] = w + h;
            let lp = Network::new(&probe).unwrap().loss(&inputs, &labels).unwrap();
            probe.tensors[ti].data[j] = w - h;
            let lm = Network::new(&probe).unwrap().loss(&inputs, &labels).unwrap();
            probe.tensors[ti].data[j] = w;
            let numeric = (lp - lm) / ((w + h) as f64 - (w - h) as f64);
            let analytic = grads.values[ti][j];
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
            count += 1;
            if rel > worst {
                worst = rel;
                at = format!("{}[{j}]", grads.names[ti]);
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    check(
        worst < 1e-3 && secs < 60.0,
        format!("{count} parameters, worst relative error {worst:.2e} at {at}, {secs:.1} s"),
    )
}

// ---------------------------------------------------------------- 2

fn naive_log_dft(clip: &AudioClip, cfg: &StftConfig) -> Vec<f64> {
    let n = cfg.window_len;
    let window: Vec<f64> = (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / n as f64).cos()))
        .collect();
    let frames = (clip.len() - n) / cfg.hop_len + 1;
    let bins = cfg.fft_size / 2 + 1;
    let mut out = vec![0.0; bins * frames];
    for t in 0..frames {
        let x: Vec<f64> = (0..n)
            .map(|i| clip.samples[t * cfg.hop_len + i] as f64 * window[i])
            .collect();
        for k in 0..bins {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, v) in x.iter().enumerate() {
                let ph = -2.0 * PI * ((k * i) % cfg.fft_size) as f64 / cfg.fft_size as f64;
                re += v * ph.cos();
                im += v * ph.sin();
            }
            out[k * frames + t] = ((re * re + im * im).sqrt() + cfg.log_floor_eps).ln();
        }
    }
    out
}

fn dsp_conformance() -> Outcome {
    let started = Instant::now();
    let cfg = StftConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let clip = AudioClip::new((0..48_000).map(|_| rng.gen_range(-1.0..1.0)).collect(), 48_000);
        let fast = stft_log_magnitude(&clip, &cfg).unwrap();
        let slow = naive_log_dft(&clip, &cfg);
        if fast.values.len() != slow.len() {
            return Err(format!("length {} vs oracle {}", fast.values.len(), slow.len()));
        }
        for (a, b) in fast.values.iter().zip(&slow) {
            worst = worst.max((*a as f64 - b).abs());
        }
    }
    let ten = stft_log_magnitude(&AudioClip::new(vec![0.0; 480_000], 48_000), &cfg).unwrap();
    let secs = started.elapsed().as_secs_f64();
    check(
        worst < 1e-4 && (ten.n_bins, ten.n_frames) == (161, 2999) && secs < 30.0,
        format!(
            "20 clips, max abs error {worst:.2e}; 10 s shape {}x{}; {secs:.1} s",
            ten.n_bins, ten.n_frames
        ),
    )
}

// ---------------------------------------------------------------- 3

fn textbook_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
    let (mx, my) = (mean(x), mean(y));
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum::<f64>().sqrt();
    let sy: f64 = y.iter().map(|b| (b - my).powi(2)).sum::<f64>().sqrt();
    cov / (sx * sy)
}

/// Rank = count below + (count equal + 1) / 2.
fn textbook_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|a| {
            let below = v.iter().filter(|b| *b < a).count() as f64;
            let equal = v.iter().filter(|b| *b == a).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

fn as_pairs(x: &[f64], y: &[f64]) -> Vec<EvalPair> {
    x.iter()
        .zip(y)
        .enumerate()
        .map(|(i, (&p, &l))| EvalPair::new(format!("u{i:04}"), None, p, l))
        .collect()
}

fn metric_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for set in 0..1000 {
        let n = rng.gen_range(3..80);
        // every other set uses coarse values so ties occur
        let draw = |rng: &mut ChaCha8Rng| -> f64 {
            if set % 2 == 0 {
                rng.gen_range(1.0..5.0)
            } else {
                rng.gen_range(1..=5) as f64
            }
        };
        let x: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let y: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        if x.iter().all(|v| *v == x[0]) || y.iter().all(|v| *v == y[0]) {
            continue;
        }
        let pairs = as_pairs(&x, &y);
        let m = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n as f64;
        let diffs = [
            (mse(&pairs).unwrap() - m).abs(),
            (lcc(&pairs).unwrap() - textbook_pearson(&x, &y)).abs(),
            (srcc(&pairs).unwrap() - textbook_pearson(&textbook_ranks(&x), &textbook_ranks(&y))).abs(),
        ];
        worst = diffs.iter().fold(worst, |a, &b| a.max(b));
    }

    let mut closed_worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.gen_range(3..60);
        let x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let (rx, ry) = (textbook_ranks(&x), textbook_ranks(&y));
        let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b).powi(2)).sum();
        let nf = n as f64;
        let closed = 1.0 - 6.0 * d2 / (nf * (nf * nf - 1.0));
        closed_worst = closed_worst.max((srcc(&as_pairs(&x, &y)).unwrap() - closed).abs());
    }

    let small = srcc(&as_pairs(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0])).unwrap();
    check(
        worst < 1e-12 && closed_worst < 1e-12 && (small - 0.8).abs() < 1e-12,
        format!("oracle max diff {worst:.1e}; closed form max diff {closed_worst:.1e}; [1,2,3,4]/[1,3,2,4] -> {small}"),
    )
}

// ---------------------------------------------------------------- 4

const EXPERIMENT_SECONDS: f64 = 1.0;
const EXPERIMENT_DIM: usize = 32;

fn features() -> FeatureConfig {
    FeatureConfig {
        clip_seconds: EXPERIMENT_SECONDS,
        stft: StftConfig::default(),
    }
}

fn corpus(dir: &Path, name: &str, seed: u64, systems: usize, utts: usize, shift: f64) -> samos::data::Manifest {
    let cfg = SynthConfig {
        n_systems: systems,
        utts_per_system: utts,
        seed,
        clip_seconds: EXPERIMENT_SECONDS,
        ssl_dim: EXPERIMENT_DIM,
        label_shift: shift,
        id_prefix: name.to_string(),
        ..SynthConfig::default()
    };
    generate_synthetic(&cfg, &dir.join(name)).unwrap()
}

fn split(
    ds: &Dataset,
    manifest: &samos::data::Manifest,
    fraction: f64,
    seed: u64,
    level: SplitLevel,
) -> (Dataset, Dataset) {
    let spec = SplitSpec {
        train_fraction: fraction,
        seed,
        level,
    };
    let (a, b) = split_by_system(&manifest.entries, &spec).unwrap();
    let index = |side: &[samos::data::ManifestEntry]| -> Vec<usize> {
        side.iter()
            .map(|e| {
                manifest
                    .entries
                    .iter()
                    .position(|m| m.utterance_id == e.utterance_id)
                    .unwrap()
            })
            .collect()
    };
    (ds.subset(&index(&a)), ds.subset(&index(&b)))
}

fn experiment_config(seed: u64, epochs: usize) -> TrainConfig {
    TrainConfig {
        lr: 1e-3,
        batch_size: 16,
        epochs,
        seed,
        ..TrainConfig::default()
    }
}

fn fit(arch: &ArchitectureConfig, seed: u64, tr: &Dataset, va: &Dataset, epochs: usize) -> ModelParams {
    let init = init_params(arch, seed).unwrap();
    train(&init, tr, va, &experiment_config(seed + 1000, epochs)).unwrap().0
}

fn dual_vs_ssl_only() -> Outcome {
    let started = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let dual = ArchitectureConfig::desk(EXPERIMENT_DIM);
    let ssl_only = dual.clone().ssl_only();
    let (mut d_scores, mut s_scores) = (Vec::new(), Vec::new());
    for seed in 0..5u64 {
        let m = corpus(tmp.path(), &format!("c{seed}_"), seed, 20, 25, 0.0);
        let ds = load_dataset(&m, &features(), true).unwrap();
        let (pool, test) = split(&ds, &m, 0.8, seed, SplitLevel::Utterance);
        let mut pool_ids: Vec<usize> = (0..pool.len()).collect();
        pool_ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let (tr_idx, va_idx) = pool_ids.split_at(pool.len() * 7 / 8);
        let (tr, va) = (pool.subset(tr_idx), pool.subset(va_idx));

        let d = fit(&dual, seed, &tr, &va, 20);
        let s = fit(
            &ssl_only,
            seed,
            &tr.clone().without_spectrograms(),
            &va.clone().without_spectrograms(),
            20,
        );
        let d_srcc = evaluate(&d, &test).unwrap().0.utt_srcc.unwrap();
        let s_srcc = evaluate(&s, &test.clone().without_spectrograms())
            .unwrap()
            .0
            .utt_srcc
            .unwrap();
        println!("    4a seed {seed}: dual SRCC {d_srcc:.3}, ssl_only SRCC {s_srcc:.3}");
        d_scores.push(d_srcc);
        s_scores.push(s_srcc);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let gap = mean(&d_scores) - mean(&s_scores);
    check(
        gap >= 0.05,
        format!(
            "mean held-out SRCC dual {:.3} vs ssl_only {:.3} (gap {gap:.3}, need >= 0.05), {:.0} s",
            mean(&d_scores),
            mean(&s_scores),
            started.elapsed().as_secs_f64()
        ),
    )
}

fn two_step_benefit() -> Outcome {
    let started = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let arch = ArchitectureConfig::desk(EXPERIMENT_DIM);
    let mut wins = 0;
    for seed in 0..5u64 {
        let base = 100 + 10 * seed;
        let pre_m = corpus(tmp.path(), &format!("pre{seed}_"), base, 40, 10, 0.0);
        let fine_m = corpus(tmp.path(), &format!("fine{seed}_"), base + 1, 16, 4, -0.5);
        let test_m = corpus(tmp.path(), &format!("test{seed}_"), base + 2, 10, 10, -0.5);
        let pre = load_dataset(&pre_m, &features(), true).unwrap();
        let fine = load_dataset(&fine_m, &features(), true).unwrap();
        let test = load_dataset(&test_m, &features(), true).unwrap();
        let (pre_tr, pre_va) = split(&pre, &pre_m, 0.8, seed, SplitLevel::System);
        let (fine_tr, fine_va) = split(&fine, &fine_m, 0.75, seed, SplitLevel::System);
        assert!(fine.len() <= 64);

        let pre_cfg = experiment_config(seed + 1000, 20);
        let fine_cfg = experiment_config(seed + 2000, 10);
        let outcome = two_step_train(&arch, seed, &pre_tr, &pre_va, &fine_tr, &fine_va, &pre_cfg, &fine_cfg).unwrap();
        let small = fit(&arch, seed, &fine_tr, &fine_va, 20);
        let two_step_mse = evaluate(&outcome.stage2, &test).unwrap().0.utt_mse;
        let small_mse = evaluate(&small, &test).unwrap().0.utt_mse;
        println!("    4b seed {seed}: two-step MSE {two_step_mse:.3}, small-only MSE {small_mse:.3}");
        wins += usize::from(two_step_mse < small_mse);
    }
    check(
        wins >= 4,
        format!(
            "two-step wins {wins}/5 (need >= 4), {:.0} s",
            started.elapsed().as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- 5

fn gnll_sanity() -> Outcome {
    let at_mean = gnll(3.0, 3.0, 1.0);
    let unit = gnll(3.0, 2.0, 1.0);
    let arch = ArchitectureConfig::tiny();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ssl = random_ssl(&mut rng, 24, arch.ssl_dim);
    let spec = random_spec(&mut rng, 12, 14);
    let mut bad = 0;
    for draw in 0..1000u64 {
        let mut params = init_params(&arch, draw).unwrap();
        let scale = 10f32.powf(rng.gen_range(-2.0..2.0));
        for t in &mut params.tensors {
            t.data.iter_mut().for_each(|v| *v = rng.gen_range(-scale..scale));
        }
        let out = forward(
            &params,
            ModelInput {
                ssl: &ssl,
                spec: Some(&spec),
            },
        )
        .unwrap();
        if !(out.sigma2 > 0.0 && out.sigma2.is_finite()) {
            bad += 1;
        }
    }
    check(
        at_mean == 0.0 && (unit - 0.5).abs() < 1e-15 && bad == 0,
        format!("loss {at_mean} at the mean, {unit} at residual 1; {bad}/1000 draws with non-positive variance"),
    )
}

// ---------------------------------------------------------------- 6

fn samos(args: &[&str], dir: &Path, threads: &str) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_samos"))
        .args(args)
        .current_dir(dir)
        .env("SAMOS_THREADS", threads)
        .env("RUST_LOG", "warn")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "samos {args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

fn cli_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let synth = |out: &str, seed: &str, shift: &str| -> Result<(), String> {
        let seed = format!("synth.seed={seed}");
        let shift = format!("synth.label_shift={shift}");
        let args = [
            "synth-data",
            "--out",
            out,
            "--set",
            "synth.n_systems=8",
            "--set",
            "synth.utts_per_system=6",
            "--set",
            "synth.clip_seconds=1",
            "--set",
            "synth.ssl_dim=16",
            "--set",
            &seed,
            "--set",
            &shift,
        ];
        samos(&args, dir, "1")
    };
    synth("pre", "1", "0")?;
    synth("fine", "2", "-0.5")?;
    std::fs::write(
        dir.join("exp.conf"),
        "seed = 42\n\
         arch.preset = desk\n\
         arch.ssl_dim = 16\n\
         features.clip_seconds = 1\n\
         pretrain_data.manifest = pre/manifest.csv\n\
         finetune_data.manifest = fine/manifest.csv\n\
         finetune_data.split.train_fraction = 0.75\n\
         eval_manifest = fine/manifest.csv\n\
         pretrain.epochs = 3\n\
         pretrain.batch_size = 8\n\
         pretrain.lr = 0.001\n\
         finetune.epochs = 2\n\
         finetune.batch_size = 8\n",
    )
    .unwrap();
    samos(&["two-step", "--config", "exp.conf", "--out", "run_a"], dir, "1")?;
    samos(&["two-step", "--config", "exp.conf", "--out", "run_b"], dir, "3")?;
    let files = [
        "stage1.ckpt",
        "stage2.ckpt",
        "stage1_record.json",
        "stage2_record.json",
        "report.json",
        "report.txt",
        "predictions.csv",
    ];
    let mut differing = Vec::new();
    for f in files {
        let a = std::fs::read(dir.join("run_a").join(f)).map_err(|e| format!("{f}: {e}"))?;
        let b = std::fs::read(dir.join("run_b").join(f)).map_err(|e| format!("{f}: {e}"))?;
        if a != b {
            differing.push(f);
        }
    }
    check(
        differing.is_empty(),
        format!(
            "{} artifacts compared across 1 and 3 worker threads; differing: {differing:?}",
            files.len()
        ),
    )
}

// ---------------------------------------------------------------- 7

fn format_round_trips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut notes = Vec::new();

    let mut m = SslFeatureMatrix::new(
        (0..37 * 1920)
            .map(|_| f32::from_bits(rng.gen_range(0..0x7f00_0000u32)) * if rng.gen() { 1.0 } else { -1.0 })
            .collect(),
        37,
        1920,
    )
    .unwrap();
    m.source_model_id = "round-trip/model".into();
    let mut bytes = Vec::new();
    write_features(&m, &mut bytes).unwrap();
    let back = read_features(&mut bytes.as_slice()).unwrap();
    let sslf_exact = back
        .values
        .iter()
        .map(|v| v.to_bits())
        .eq(m.values.iter().map(|v| v.to_bits()))
        && back.source_model_id == m.source_model_id
        && (back.n_frames, back.dim, back.source_layer) == (m.n_frames, m.dim, m.source_layer);
    let mut again = Vec::new();
    write_features(&back, &mut again).unwrap();
    notes.push(format!("sslf bit-exact {}", sslf_exact && again == bytes));

    let mut bad_magic = bytes.clone();
    bad_magic[0] = b'X';
    let mut bad_version = bytes.clone();
    bad_version[4] = 9;
    let mut nan = bytes.clone();
    let off = bytes.len() - 4;
    nan[off..].copy_from_slice(&f32::NAN.to_le_bytes());
    let sslf_cases = [
        matches!(read_features(&mut &bad_magic[..]), Err(Error::Format(_))),
        matches!(read_features(&mut &bad_version[..]), Err(Error::Format(_))),
        matches!(read_features(&mut &bytes[..bytes.len() - 3]), Err(Error::Corruption(_))),
        matches!(read_features(&mut &bytes[..10]), Err(Error::Corruption(_))),
        matches!(read_features(&mut &nan[..]), Err(Error::Validation(_))),
    ];

    let mut params = init_params(&ArchitectureConfig::desk(32), 9).unwrap();
    params.tensors[0].data[0] = f32::MIN_POSITIVE / 8.0;
    let mut ck = Vec::new();
    write_checkpoint(&params, &mut ck).unwrap();
    let ck_back = read_checkpoint(&mut ck.as_slice()).unwrap();
    let ck_exact = ck_back.arch == params.arch
        && ck_back.init_seed == params.init_seed
        && ck_back.tensors.iter().zip(&params.tensors).all(|(a, b)| {
            a.name == b.name
                && a.shape == b.shape
                && a.data
                    .iter()
                    .map(|v| v.to_bits())
                    .eq(b.data.iter().map(|v| v.to_bits()))
        });
    let mut ck_again = Vec::new();
    write_checkpoint(&ck_back, &mut ck_again).unwrap();
    notes.push(format!("checkpoint bit-exact {}", ck_exact && ck_again == ck));

    let mut ck_magic = ck.clone();
    ck_magic[1] = 0;
    let mut ck_trailing = ck.clone();
    ck_trailing.push(0);
    let mut ck_header = ck.clone();
    ck_header[13] ^= 0x55;
    let ck_cases = [
        matches!(read_checkpoint(&mut &ck_magic[..]), Err(Error::Format(_))),
        matches!(read_checkpoint(&mut &ck[..ck.len() - 1]), Err(Error::Corruption(_))),
        matches!(read_checkpoint(&mut &ck_trailing[..]), Err(Error::Corruption(_))),
        matches!(read_checkpoint(&mut &ck_header[..]), Err(Error::Format(_))),
    ];
    let typed = sslf_cases.iter().chain(&ck_cases).filter(|&&ok| ok).count();
    let total = sslf_cases.len() + ck_cases.len();
    notes.push(format!(
        "{typed}/{total} corrupted streams raise the expected typed error"
    ));
    check(
        sslf_exact && again == bytes && ck_exact && ck_again == ck && typed == total,
        notes.join("; "),
    )
}

fn main() {
    let criteria: [(&str, &str, fn() -> Outcome); 8] = [
        ("1", "gradient correctness", gradient_correctness),
        ("2", "DSP conformance", dsp_conformance),
        ("3", "metric oracles", metric_oracles),
        ("4a", "dual-branch beats ssl_only", dual_vs_ssl_only),
        ("4b", "two-step beats small-corpus training", two_step_benefit),
        ("5", "GNLL sanity", gnll_sanity),
        ("6", "two-step CLI determinism", cli_determinism),
        ("7", "format round-trips", format_round_trips),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == id) {
            continue;
        }
        let result = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("AC{id} PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("AC{id} FAIL {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
