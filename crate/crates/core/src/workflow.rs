//! Declarative experiment configuration and the command implementations
//! behind the `samos` binary.
//!
//! A configuration is JSON (or `key.path = value` lines) describing the
//! architecture, feature extraction, data sources and the two training
//! stages. Every random stream is derived from the root `seed`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::data::{
    entry_spectrogram, generate_synthetic, load_dataset, load_manifest, split_by_system, Dataset, FeatureConfig,
    Manifest, SplitSpec, SynthConfig,
};
use crate::error::{Error, Result};
use crate::eval::{self, format_table, MetricsReport, Prediction};
use crate::model::{init_params, load_checkpoint, save_checkpoint, ArchitectureConfig, ModelParams, Variant};
use crate::seed::{derive_seed, sha256_hex};
use crate::sslf::read_features_file;
use crate::train::{self, AggregateReport, RunRecord, Selection, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchPreset {
    Full,
    Desk,
    Tiny,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArchSpec {
    pub preset: ArchPreset,
    /// Overrides the preset's SSL feature dimension.
    pub ssl_dim: Option<usize>,
    pub variant: Variant,
    /// Used when `preset` is `custom`.
    pub custom: Option<ArchitectureConfig>,
}

impl Default for ArchSpec {
    fn default() -> Self {
        Self {
            preset: ArchPreset::Full,
            ssl_dim: None,
            variant: Variant::DualBranch,
            custom: None,
        }
    }
}

impl ArchSpec {
    pub fn resolve(&self) -> Result<ArchitectureConfig> {
        let mut arch = match self.preset {
            ArchPreset::Full => ArchitectureConfig::full(),
            ArchPreset::Desk => ArchitectureConfig::desk(self.ssl_dim.unwrap_or(32)),
            ArchPreset::Tiny => ArchitectureConfig::tiny(),
            ArchPreset::Custom => self
                .custom
                .clone()
                .ok_or_else(|| Error::Config("arch.preset = custom requires arch.custom".into()))?,
        };
        if let Some(dim) = self.ssl_dim {
            arch.ssl_dim = dim;
        }
        arch.variant = self.variant;
        arch.validate()?;
        Ok(arch)
    }
}

/// Optimizer and schedule of one training stage; the seed comes from the
/// experiment's root seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StageConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub weight_decay: f64,
    pub scheduler_gamma: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub selection: Selection,
}

impl StageConfig {
    fn from_train(t: TrainConfig) -> Self {
        Self {
            lr: t.lr,
            beta1: t.beta1,
            beta2: t.beta2,
            weight_decay: t.weight_decay,
            scheduler_gamma: t.scheduler_gamma,
            batch_size: t.batch_size,
            epochs: t.epochs,
            selection: t.selection,
        }
    }

    pub fn pretrain() -> Self {
        Self::from_train(TrainConfig::pretrain())
    }

    pub fn finetune() -> Self {
        Self::from_train(TrainConfig::finetune())
    }

    pub fn with_seed(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            weight_decay: self.weight_decay,
            scheduler_gamma: self.scheduler_gamma,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed,
            selection: self.selection,
        }
    }
}

impl Default for StageConfig {
    fn default() -> Self {
        Self::pretrain()
    }
}

/// A training manifest and where its validation data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSource {
    pub manifest: PathBuf,
    /// Separate validation manifest; when absent `manifest` is split.
    #[serde(default)]
    pub val_manifest: Option<PathBuf>,
    #[serde(default)]
    pub split: SplitSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub arch: ArchSpec,
    pub features: FeatureConfig,
    pub pretrain_data: Option<DataSource>,
    pub finetune_data: Option<DataSource>,
    pub eval_manifest: Option<PathBuf>,
    pub pretrain: StageConfig,
    pub finetune: StageConfig,
    pub synth: SynthConfig,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            arch: ArchSpec::default(),
            features: FeatureConfig::default(),
            pretrain_data: None,
            finetune_data: None,
            eval_manifest: None,
            pretrain: StageConfig::pretrain(),
            finetune: StageConfig::finetune(),
            synth: SynthConfig::default(),
            output_dir: PathBuf::from("runs"),
        }
    }
}

impl ExperimentConfig {
    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("config serializes"))
    }

    pub fn init_seed(&self) -> u64 {
        derive_seed(self.seed, "init")
    }

    pub fn pretrain_config(&self) -> TrainConfig {
        self.pretrain.with_seed(derive_seed(self.seed, "pretrain"))
    }

    pub fn finetune_config(&self) -> TrainConfig {
        self.finetune.with_seed(derive_seed(self.seed, "finetune"))
    }
}

/// Set `path` (dot-separated) to `raw`, parsed as JSON when possible and as a
/// string otherwise. Unknown keys are rejected when the result is deserialized.
pub fn apply_override(config: &mut Value, path: &str, raw: &str) -> Result<()> {
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = config;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("malformed key `{path}`")));
    }
    for (i, key) in keys.iter().enumerate() {
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("`{}` is not a table", keys[..i].join("."))))?;
        if i + 1 == keys.len() {
            obj.insert(key.to_string(), value);
            return Ok(());
        }
        if !obj.contains_key(*key) && i == 0 {
            return Err(Error::Config(format!("unknown key `{path}`")));
        }
        node = obj.entry(key.to_string()).or_insert(Value::Null);
    }
    unreachable!("loop returns on the last key")
}

fn parse_overrides(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .map(|l| l.split_once(" #").map_or(l, |(body, _)| body).trim())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(split_assignment)
        .collect()
}

fn split_assignment(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("expected key=value, got `{s}`")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn config_error(e: serde_json::Error) -> Error {
    Error::Config(e.to_string())
}

/// Resolve defaults, an optional config file (JSON or key=value lines),
/// `key=value` overrides and an optional root seed, in that order.
pub fn resolve_config(path: Option<&Path>, overrides: &[String], seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut value = serde_json::to_value(ExperimentConfig::default()).expect("defaults serialize");
    if let Some(path) = path {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        if text.trim_start().starts_with('{') {
            let file: Value = serde_json::from_str(&text).map_err(config_error)?;
            // validates keys and fills defaults
            let parsed: ExperimentConfig = serde_json::from_value(file).map_err(config_error)?;
            value = serde_json::to_value(parsed).expect("config serializes");
        } else {
            for (k, v) in parse_overrides(&text)? {
                apply_override(&mut value, &k, &v)?;
            }
        }
    }
    for o in overrides {
        let (k, v) = split_assignment(o)?;
        apply_override(&mut value, &k, &v)?;
    }
    let mut config: ExperimentConfig = serde_json::from_value(value).map_err(config_error)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    config.features.validate()?;
    config.arch.resolve()?;
    config.pretrain_config().validate()?;
    config.finetune_config().validate()?;
    Ok(config)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Featurize,
    SynthData,
    Train,
    Finetune,
    TwoStep,
    Evaluate,
    Predict,
    ExportReport { reports: Vec<PathBuf> },
}

/// One resolved CLI invocation.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config: ExperimentConfig,
    pub checkpoint: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
}

pub fn run(inv: &Invocation) -> Result<()> {
    let cfg = &inv.config;
    log::info!("config hash {}", cfg.hash());
    let out = &cfg.output_dir;
    std::fs::create_dir_all(out)?;
    match &inv.command {
        Command::SynthData => {
            let m = generate_synthetic(&cfg.synth, out)?;
            log::info!("wrote {} utterances to {}", m.len(), out.display());
        }
        Command::Featurize => {
            let manifests = match &inv.manifest {
                Some(m) => vec![m.clone()],
                None => config_manifests(cfg),
            };
            if manifests.is_empty() {
                return Err(Error::Config(
                    "featurize needs --manifest or data sources in the config".into(),
                ));
            }
            for path in manifests {
                let n = featurize(&load_manifest(&path)?, &cfg.features)?;
                log::info!("{}: {n} utterances featurized", path.display());
            }
        }
        Command::Train => {
            write_resolved(cfg)?;
            let source = require(&cfg.pretrain_data, "pretrain_data")?;
            let arch = cfg.arch.resolve()?;
            let (tr, va) = load_source(source, cfg, &arch)?;
            let init = init_params(&arch, cfg.init_seed())?;
            let (params, record) = train::train(&init, &tr, &va, &cfg.pretrain_config())?;
            save_checkpoint(&params, &out.join("model.ckpt"))?;
            write_json(&record, &out.join("record.json"))?;
            log_record("train", &record);
            maybe_evaluate(cfg, &params, out)?;
        }
        Command::Finetune => {
            write_resolved(cfg)?;
            let source = require(&cfg.finetune_data, "finetune_data")?;
            let ckpt = inv
                .checkpoint
                .as_deref()
                .ok_or_else(|| Error::Config("finetune requires --checkpoint".into()))?;
            let start = load_checkpoint(ckpt)?;
            let (tr, va) = load_source(source, cfg, &start.arch)?;
            let (params, record) = train::train(&start, &tr, &va, &cfg.finetune_config())?;
            save_checkpoint(&params, &out.join("model.ckpt"))?;
            write_json(&record, &out.join("record.json"))?;
            log_record("finetune", &record);
            maybe_evaluate(cfg, &params, out)?;
        }
        Command::TwoStep => {
            write_resolved(cfg)?;
            let arch = cfg.arch.resolve()?;
            let (pre_tr, pre_va) = load_source(require(&cfg.pretrain_data, "pretrain_data")?, cfg, &arch)?;
            let (fine_tr, fine_va) = load_source(require(&cfg.finetune_data, "finetune_data")?, cfg, &arch)?;
            let outcome = train::two_step_train(
                &arch,
                cfg.init_seed(),
                &pre_tr,
                &pre_va,
                &fine_tr,
                &fine_va,
                &cfg.pretrain_config(),
                &cfg.finetune_config(),
            )?;
            save_checkpoint(&outcome.stage1, &out.join("stage1.ckpt"))?;
            save_checkpoint(&outcome.stage2, &out.join("stage2.ckpt"))?;
            write_json(&outcome.pretrain, &out.join("stage1_record.json"))?;
            write_json(&outcome.finetune, &out.join("stage2_record.json"))?;
            log_record("stage 1", &outcome.pretrain);
            log_record("stage 2", &outcome.finetune);
            maybe_evaluate(cfg, &outcome.stage2, out)?;
        }
        Command::Evaluate => {
            let params = load_checkpoint(require_checkpoint(inv)?)?;
            let manifest = eval_manifest(inv)?;
            let report = evaluate_manifest(&params, &manifest, &cfg.features, out)?;
            print!("{}", format_table(&report));
        }
        Command::Predict => {
            let params = load_checkpoint(require_checkpoint(inv)?)?;
            let manifest = eval_manifest(inv)?;
            let ds = load_for(&params.arch, &manifest, &cfg.features)?;
            let preds = eval::predict_dataset(&params, &ds)?;
            write_predictions(&preds, &out.join("predictions.csv"))?;
            log::info!("wrote {} predictions", preds.len());
        }
        Command::ExportReport { reports } => {
            let agg = aggregate_reports(reports)?;
            write_json(&agg, &out.join("aggregate.json"))?;
            let table = format_aggregate(&agg);
            std::fs::write(out.join("aggregate.txt"), &table)?;
            print!("{table}");
        }
    }
    Ok(())
}

fn require<'a, T>(v: &'a Option<T>, name: &str) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| Error::Config(format!("`{name}` is not set")))
}

fn require_checkpoint(inv: &Invocation) -> Result<&Path> {
    inv.checkpoint
        .as_deref()
        .ok_or_else(|| Error::Config("--checkpoint is required".into()))
}

fn eval_manifest(inv: &Invocation) -> Result<Manifest> {
    let path = inv
        .manifest
        .as_ref()
        .or(inv.config.eval_manifest.as_ref())
        .ok_or_else(|| Error::Config("pass --manifest or set eval_manifest".into()))?;
    load_manifest(path)
}

fn config_manifests(cfg: &ExperimentConfig) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for src in [&cfg.pretrain_data, &cfg.finetune_data].into_iter().flatten() {
        out.push(src.manifest.clone());
        out.extend(src.val_manifest.clone());
    }
    out.extend(cfg.eval_manifest.clone());
    out
}

fn write_resolved(cfg: &ExperimentConfig) -> Result<()> {
    #[derive(Serialize)]
    struct Resolved<'a> {
        config_hash: String,
        config: &'a ExperimentConfig,
    }
    write_json(
        &Resolved {
            config_hash: cfg.hash(),
            config: cfg,
        },
        &cfg.output_dir.join("resolved_config.json"),
    )
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn log_record(stage: &str, r: &RunRecord) {
    log::info!(
        "{stage}: {} epochs, {} steps, selected epoch {} (val loss {})",
        r.train_loss.len(),
        r.total_steps,
        r.selected_epoch,
        r.val_loss
            .get(r.selected_epoch.wrapping_sub(1))
            .map_or_else(|| format!("{:.4} at init", r.initial_val_loss), |v| format!("{v:.4}"))
    );
}

/// Validate SSL feature files and write spectrogram caches; returns the
/// number of utterances processed.
pub fn featurize(manifest: &Manifest, features: &FeatureConfig) -> Result<usize> {
    use rayon::prelude::*;
    features.validate()?;
    let dims = manifest
        .entries
        .par_iter()
        .map(|e| {
            let ssl = read_features_file(&manifest.resolve(&e.ssl_feature_path))?;
            entry_spectrogram(manifest, e, features, true)?;
            Ok(ssl.dim)
        })
        .zip(manifest.entries.par_iter())
        .map(|(r, e): (Result<usize>, _)| r.map_err(|err| Error::for_entry(e.utterance_id.clone(), err)))
        .collect::<Result<Vec<usize>>>()?;
    if let Some(bad) = dims.iter().position(|&d| d != dims[0]) {
        return Err(Error::for_entry(
            manifest.entries[bad].utterance_id.clone(),
            Error::Validation(format!("feature dim {} differs from {}", dims[bad], dims[0])),
        ));
    }
    Ok(dims.len())
}

/// Load a manifest for a given architecture (spectrograms only when used).
pub fn load_for(arch: &ArchitectureConfig, manifest: &Manifest, features: &FeatureConfig) -> Result<Dataset> {
    let ds = load_dataset(manifest, features, arch.uses_spectrogram())?;
    if let Some(dim) = ds.ssl_dim() {
        if dim != arch.ssl_dim {
            return Err(Error::Validation(format!(
                "features have dim {dim} but the model expects {}",
                arch.ssl_dim
            )));
        }
    }
    Ok(ds)
}

/// Training and validation datasets of a source.
pub fn load_source(
    source: &DataSource,
    cfg: &ExperimentConfig,
    arch: &ArchitectureConfig,
) -> Result<(Dataset, Dataset)> {
    let manifest = load_manifest(&source.manifest)?;
    let (train, val) = match &source.val_manifest {
        Some(v) => (manifest, load_manifest(v)?),
        None => {
            let (tr, va) = split_by_system(&manifest.entries, &source.split)?;
            (manifest.with_entries(tr), manifest.with_entries(va))
        }
    };
    if train.is_empty() || val.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{}: split left {} training and {} validation utterances",
            source.manifest.display(),
            train.len(),
            val.len()
        )));
    }
    Ok((
        load_for(arch, &train, &cfg.features)?,
        load_for(arch, &val, &cfg.features)?,
    ))
}

fn maybe_evaluate(cfg: &ExperimentConfig, params: &ModelParams, out: &Path) -> Result<()> {
    if let Some(path) = &cfg.eval_manifest {
        let report = evaluate_manifest(params, &load_manifest(path)?, &cfg.features, out)?;
        print!("{}", format_table(&report));
    }
    Ok(())
}

/// Evaluate and write `report.json`, `report.txt` and `predictions.csv`.
pub fn evaluate_manifest(
    params: &ModelParams,
    manifest: &Manifest,
    features: &FeatureConfig,
    out: &Path,
) -> Result<MetricsReport> {
    let ds = load_for(&params.arch, manifest, features)?;
    let (report, preds) = eval::evaluate(params, &ds)?;
    for note in &report.degenerate {
        log::warn!("{note}");
    }
    write_json(&report, &out.join("report.json"))?;
    std::fs::write(out.join("report.txt"), format_table(&report))?;
    write_predictions(&preds, &out.join("predictions.csv"))?;
    Ok(report)
}

/// `utterance_id,mu,sigma2` with shortest round-trip float formatting.
pub fn write_predictions(preds: &[Prediction], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["utterance_id", "mu", "sigma2"])?;
    for p in preds {
        w.write_record([p.utterance_id.clone(), p.mu.to_string(), p.sigma2.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_predictions(path: &Path) -> Result<Vec<(String, f64, f64)>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn aggregate_reports(paths: &[PathBuf]) -> Result<AggregateReport> {
    if paths.is_empty() {
        return Err(Error::Config("export-report needs at least one report".into()));
    }
    let runs = paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str::<MetricsReport>(&text).map_err(|e| Error::Format(format!("{}: {e}", p.display())))
        })
        .collect::<Result<Vec<_>>>()?;
    AggregateReport::from_runs(vec![], runs)
}

/// `mean ± std` table with the report's column names.
pub fn format_aggregate(agg: &AggregateReport) -> String {
    let cols = [
        ("UTT_MSE", Some(agg.utt_mse)),
        ("UTT_LCC", agg.utt_lcc),
        ("UTT_SRCC", agg.utt_srcc),
        ("SYS_MSE", agg.sys_mse),
        ("SYS_LCC", agg.sys_lcc),
        ("SYS_SRCC", agg.sys_srcc),
    ];
    let cells: Vec<(String, String)> = cols
        .iter()
        .map(|(h, v)| {
            let text = v.map_or_else(|| "-".into(), |m| format!("{:.3} ± {:.3}", m.mean, m.std));
            (h.to_string(), text)
        })
        .collect();
    let widths: Vec<usize> = cells
        .iter()
        .map(|(h, v)| h.chars().count().max(v.chars().count()))
        .collect();
    let line = |pick: &dyn Fn(&(String, String)) -> String| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| {
                let s = pick(c);
                format!("{}{s}", " ".repeat(w - s.chars().count()))
            })
            .collect::<Vec<_>>()
            .join("  ")
    };
    format!(
        "{}\n{}\nruns: {}\n",
        line(&|c| c.0.clone()),
        line(&|c| c.1.clone()),
        agg.runs.len()
    )
}
