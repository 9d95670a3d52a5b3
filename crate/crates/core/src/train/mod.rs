//! Adam with exponential learning-rate decay, the epoch loop with
//! validation-based checkpoint selection, the pretrain → fine-tune procedure
//! and multi-seed aggregation.

mod adam;
mod multi_run;

pub use adam::{adam_step, adam_update, AdamState, ADAM_EPS};
pub use multi_run::{mean_std, multi_run, AggregateReport, MeanStd};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{init_params, ArchitectureConfig, ModelParams, Network};
use crate::seed::{rng_for, sha256_hex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    BestValLoss,
    LastEpoch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub weight_decay: f64,
    /// Multiplicative decay applied after every optimizer step.
    pub scheduler_gamma: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub selection: Selection,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            weight_decay: 0.0,
            scheduler_gamma: 0.9999,
            batch_size: 64,
            epochs: 30,
            seed: 0,
            selection: Selection::BestValLoss,
        }
    }
}

impl TrainConfig {
    /// Pretraining defaults (30 epochs).
    pub fn pretrain() -> Self {
        Self::default()
    }

    /// Fine-tuning defaults (3 epochs, otherwise identical).
    pub fn finetune() -> Self {
        Self {
            epochs: 3,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scheduler_gamma > 0.0 && self.scheduler_gamma <= 1.0) {
            return Err(Error::Config("scheduler_gamma must be in (0, 1]".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.lr > 0.0) {
            return Err(Error::Config("lr must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("Adam betas must be in [0, 1)".into()));
        }
        if self.weight_decay < 0.0 {
            return Err(Error::Config("weight_decay must be non-negative".into()));
        }
        Ok(())
    }

    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("config serializes"))
    }
}

/// Learning rate after `step` optimizer steps.
pub fn lr_at_step(cfg: &TrainConfig, step: u64) -> f64 {
    cfg.lr * cfg.scheduler_gamma.powf(step as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub seed: u64,
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// Validation loss of the starting parameters.
    pub initial_val_loss: f64,
    /// Epoch whose parameters were returned; 0 means the starting parameters.
    pub selected_epoch: usize,
    pub selection: Selection,
    /// Optimizer step counter at the start of this run.
    pub first_step: u64,
    pub total_steps: u64,
}

/// Train from `init` with shuffled mini-batches and the mean GNLL objective.
pub fn train(
    init: &ModelParams,
    train_set: &Dataset,
    val_set: &Dataset,
    cfg: &TrainConfig,
) -> Result<(ModelParams, RunRecord)> {
    cfg.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::InvalidInput(
            "training and validation sets must be non-empty".into(),
        ));
    }

    let mut params = init.clone();
    let mut state = AdamState::new(&params);
    let mut rng = rng_for(cfg.seed, "shuffle");
    let val_inputs = val_set.inputs();
    let val_labels = val_set.labels();
    let initial_val_loss = Network::new(&params)?.loss(&val_inputs, &val_labels)?;

    let mut record = RunRecord {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        train_loss: Vec::with_capacity(cfg.epochs),
        val_loss: Vec::with_capacity(cfg.epochs),
        initial_val_loss,
        selected_epoch: 0,
        selection: cfg.selection,
        first_step: state.t,
        total_steps: 0,
    };
    let mut best: Option<(f64, ModelParams)> = None;
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let inputs: Vec<_> = batch.iter().map(|&i| train_set.samples[i].input()).collect();
            let labels: Vec<_> = batch.iter().map(|&i| train_set.samples[i].label).collect();
            let lr = lr_at_step(cfg, state.t);
            let (grads, loss) = Network::new(&params)?
                .loss_and_gradients(&inputs, &labels)
                .map_err(|e| annotate(e, epoch, state.t))?;
            adam_step(&mut params, &grads, &mut state, lr, cfg)?;
            epoch_loss += loss * batch.len() as f64;
        }
        let train_loss = epoch_loss / train_set.len() as f64;
        let val_loss = Network::new(&params)
            .and_then(|net| net.loss(&val_inputs, &val_labels))
            .map_err(|e| annotate(e, epoch, state.t))?;
        log::debug!("epoch {epoch}: train {train_loss:.5} val {val_loss:.5}");
        record.train_loss.push(train_loss);
        record.val_loss.push(val_loss);

        let improved = best.as_ref().is_none_or(|(b, _)| val_loss < *b);
        if cfg.selection == Selection::BestValLoss && improved {
            best = Some((val_loss, params.clone()));
            record.selected_epoch = epoch;
        }
    }
    record.total_steps = state.t;

    let chosen = match (cfg.selection, best) {
        (Selection::BestValLoss, Some((_, p))) => p,
        _ => {
            record.selected_epoch = cfg.epochs;
            params
        }
    };
    Ok((chosen, record))
}

fn annotate(err: Error, epoch: usize, step: u64) -> Error {
    match err {
        Error::Numeric { layer, detail } => Error::Numeric {
            layer,
            detail: format!("{detail} (epoch {epoch}, step {step})"),
        },
        other => other,
    }
}

#[derive(Debug, Clone)]
pub struct TwoStepOutcome {
    pub stage1: ModelParams,
    pub stage2: ModelParams,
    pub pretrain: RunRecord,
    pub finetune: RunRecord,
}

/// Pretrain from a fresh initialization, then fine-tune the selected stage-1
/// parameters with a fresh optimizer and learning-rate schedule.
#[allow(clippy::too_many_arguments)]
pub fn two_step_train(
    arch: &ArchitectureConfig,
    init_seed: u64,
    pretrain_set: &Dataset,
    pretrain_val: &Dataset,
    finetune_set: &Dataset,
    finetune_val: &Dataset,
    pre_cfg: &TrainConfig,
    fine_cfg: &TrainConfig,
) -> Result<TwoStepOutcome> {
    let init = init_params(arch, init_seed)?;
    let (stage1, pretrain) = train(&init, pretrain_set, pretrain_val, pre_cfg)?;
    let (stage2, finetune) = train(&stage1, finetune_set, finetune_val, fine_cfg)?;
    Ok(TwoStepOutcome {
        stage1,
        stage2,
        pretrain,
        finetune,
    })
}
