use rand::seq::SliceRandom;
use rayon::prelude::*;
use thiserror::Error;

use super::bptt::{sequence_gradients, BpttWorkspace};
use super::forward::decide;
use super::{Dims, Gate, LstmModel, LstmParams};
use crate::balance::{Label, WindowedDataset};
use crate::scalar::Real;
use crate::seed::{fnv1a, rng_for};
use crate::signal::{fit_normalization, SignalError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("training dataset is empty")]
    EmptyDataset,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("normalization: {0}")]
    Normalization(#[from] SignalError),
    #[error("training diverged (non-finite loss) in stage {stage}, epoch {epoch}")]
    Diverged { stage: usize, epoch: usize },
}

/// Optimizer and model-size settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub hidden_size: usize,
    pub momentum: f64,
    /// Learning rates applied in order, one stage each.
    pub lr_schedule: Vec<f64>,
    pub max_epochs_per_stage: usize,
    /// Epochs without relative loss improvement before a stage ends.
    pub patience_epochs: usize,
    pub progress_epsilon: f64,
    pub batch_size: usize,
    pub init_scale: f64,
    /// Added to the forget-gate bias after initialization.
    pub forget_bias: f64,
    /// Global gradient-norm clip.
    pub clip_norm: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_size: 20,
            momentum: 0.125,
            lr_schedule: vec![0.01, 0.001, 0.0001, 0.00001],
            max_epochs_per_stage: 100,
            patience_epochs: 10,
            progress_epsilon: 1e-4,
            batch_size: 1,
            init_scale: 1.0,
            forget_bias: 0.0,
            clip_norm: Some(5.0),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::InvalidConfig(m.to_string()));
        if self.hidden_size == 0 {
            return bad("hidden_size must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1)");
        }
        if self.lr_schedule.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return bad("learning rates must be positive");
        }
        if self.lr_schedule.windows(2).any(|w| w[1] >= w[0]) {
            return bad("learning-rate schedule must be strictly decreasing");
        }
        if self.batch_size == 0 || self.max_epochs_per_stage == 0 || self.patience_epochs == 0 {
            return bad("batch_size, max_epochs_per_stage and patience_epochs must be positive");
        }
        if !(self.init_scale >= 0.0) || !(self.progress_epsilon >= 0.0) {
            return bad("init_scale and progress_epsilon must be non-negative");
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return bad("clip_norm must be positive");
            }
        }
        Ok(())
    }

    /// Canonical text form; hashed into model files and reports.
    pub fn canonical(&self) -> String {
        let lrs: Vec<String> = self.lr_schedule.iter().map(|r| format!("{r:e}")).collect();
        format!(
            "hidden_size={};momentum={:e};lr_schedule={};max_epochs_per_stage={};patience_epochs={};\
             progress_epsilon={:e};batch_size={};init_scale={:e};forget_bias={:e};clip_norm={};seed={}",
            self.hidden_size,
            self.momentum,
            lrs.join(","),
            self.max_epochs_per_stage,
            self.patience_epochs,
            self.progress_epsilon,
            self.batch_size,
            self.init_scale,
            self.forget_bias,
            self.clip_norm.map_or("none".to_string(), |c| format!("{c:e}")),
            self.seed
        )
    }

    pub fn fingerprint(&self) -> u64 {
        fnv1a(self.canonical().as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub stage: usize,
    pub learning_rate: f64,
    pub epoch: usize,
    /// Mean loss over the epoch's forward passes.
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

struct Sample<T> {
    inputs: Vec<T>,
    label: Label,
}

/// Trains a fresh model with staged momentum SGD.
///
/// Stage `s` runs at `lr_schedule[s]` for at most `max_epochs_per_stage`
/// epochs and ends early once `patience_epochs` consecutive epochs fail to
/// improve on the stage's best loss by more than `progress_epsilon`
/// (relative). Velocity restarts at zero each stage. Mini-batch gradients are
/// means over the batch, reduced in window order.
pub fn train<T: Real>(
    train_set: &WindowedDataset,
    config: &TrainConfig,
) -> Result<(LstmModel<T>, TrainHistory), TrainError> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let stats = fit_normalization(&train_set.flat_samples())?.cast::<T>();
    let dims = Dims::new(config.hidden_size, 1, 2);
    let mut params = LstmParams::<T>::uniform(dims, config.init_scale, &mut rng_for(config.seed, "init", &[]));
    if config.forget_bias != 0.0 {
        params.b_mut(Gate::F).iter_mut().for_each(|b| *b += T::lit(config.forget_bias));
    }
    let mut model = LstmModel::new(params, stats);
    model.window_size = Some(train_set.window_size);
    model.config_fingerprint = config.fingerprint();

    let samples: Vec<Sample<T>> = train_set
        .windows
        .iter()
        .map(|w| Sample {
            inputs: w.samples.iter().map(|&s| stats.apply(T::lit(s))).collect(),
            label: w.label,
        })
        .collect();

    let mut history = TrainHistory::default();
    let mut grad = LstmParams::<T>::zeros(dims);
    let mut workspace = BpttWorkspace::new();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let momentum = T::lit(config.momentum);
    for (stage, &lr) in config.lr_schedule.iter().enumerate() {
        let lr_t = T::lit(lr);
        let mut velocity = LstmParams::<T>::zeros(dims);
        let mut best = f64::INFINITY;
        let mut stale = 0usize;
        for epoch in 0..config.max_epochs_per_stage {
            let mut rng = rng_for(config.seed, "epoch-order", &[stage as u64, epoch as u64]);
            order.shuffle(&mut rng);
            let mut loss_sum = 0.0f64;
            let mut correct = 0usize;
            for batch in order.chunks(config.batch_size) {
                grad.fill_zero();
                if let [idx] = batch {
                    let s = &samples[*idx];
                    let (l, y_p) = sequence_gradients(&model, &s.inputs, s.label, &mut grad, &mut workspace);
                    loss_sum += l.as_f64();
                    correct += usize::from(decide(&y_p) == s.label);
                } else {
                    let results: Vec<(T, bool, LstmParams<T>)> = batch
                        .par_iter()
                        .map_init(BpttWorkspace::new, |ws, &idx| {
                            let s = &samples[idx];
                            let mut g = LstmParams::zeros(dims);
                            let (l, y_p) = sequence_gradients(&model, &s.inputs, s.label, &mut g, ws);
                            (l, decide(&y_p) == s.label, g)
                        })
                        .collect();
                    for (l, ok, g) in &results {
                        loss_sum += l.as_f64();
                        correct += usize::from(*ok);
                        grad.add_scaled(T::one(), g);
                    }
                    grad.scale(T::one() / T::from_usize_lossy(batch.len()));
                }
                if let Some(c) = config.clip_norm {
                    let norm = grad.l2_norm();
                    let c = T::lit(c);
                    if norm > c {
                        grad.scale(c / norm);
                    }
                }
                // v <- mu v - lr g ; w <- w + v
                velocity.scale(momentum);
                velocity.add_scaled(-lr_t, &grad);
                model.params.add_scaled(T::one(), &velocity);
            }
            let mean_loss = loss_sum / samples.len() as f64;
            if !mean_loss.is_finite() || !model.params.is_finite() {
                return Err(TrainError::Diverged { stage, epoch });
            }
            history.epochs.push(EpochRecord {
                stage,
                learning_rate: lr,
                epoch,
                loss: mean_loss,
                accuracy: correct as f64 / samples.len() as f64,
            });
            if mean_loss < best * (1.0 - config.progress_epsilon) {
                stale = 0;
            } else {
                stale += 1;
            }
            best = best.min(mean_loss);
            if stale >= config.patience_epochs {
                break;
            }
        }
    }
    Ok((model, history))
}
