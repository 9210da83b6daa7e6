#![allow(dead_code)]

use rand::Rng;
use slipcal::balance::{Finger, Label, Recording};
use slipcal::lstm::{sequence_gradients, sequence_loss, BpttWorkspace, Dims, LstmModel, LstmParams, TrainConfig};
use slipcal::seed::rng_for;
use slipcal::signal::NormalizationStats;
use slipcal::synth::{default_profiles, generate_corpus, SensorProfile, SynthConfig};

pub const FD_DELTA: f64 = 1e-5;

/// Worst finite-difference disagreement over a set of random instances.
#[derive(Debug, Clone, Copy, Default)]
pub struct GradCheck {
    pub max_rel: f64,
    /// Absolute error at the worst entry.
    pub abs_at_worst: f64,
    pub analytic_at_worst: f64,
    pub checked: usize,
}

/// Relative error with a denominator floor: gradients smaller than `floor`
/// are compared on an absolute scale.
pub fn rel_err(a: f64, n: f64, floor: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(floor)
}

pub fn random_instance(seed: u64, i: u64) -> (LstmModel<f64>, Vec<f64>, Label) {
    let mut rng = rng_for(seed, "fd-instance", &[i]);
    let hidden = rng.random_range(1..=8);
    let w = rng.random_range(1..=25);
    let dims = Dims::new(hidden, 1, 2);
    let params = LstmParams::uniform(dims, 0.5, &mut rng);
    let model = LstmModel::new(params, NormalizationStats::unit());
    let inputs: Vec<f64> = (0..w).map(|_| rng.random_range(-1.0..1.0)).collect();
    let label = if rng.random_bool(0.5) { Label::Slip } else { Label::NonSlip };
    (model, inputs, label)
}

/// Central differences over every parameter of `instances` random models.
pub fn finite_difference_check(instances: u64, seed: u64, floor: f64) -> GradCheck {
    let mut out = GradCheck::default();
    for i in 0..instances {
        let (mut model, inputs, label) = random_instance(seed, i);
        let mut grad = LstmParams::zeros(model.dims());
        let mut ws = BpttWorkspace::new();
        sequence_gradients(&model, &inputs, label, &mut grad, &mut ws);
        for k in 0..grad.as_slice().len() {
            let orig = model.params.as_slice()[k];
            model.params.as_mut_slice()[k] = orig + FD_DELTA;
            let up = sequence_loss(&model, &inputs, label);
            model.params.as_mut_slice()[k] = orig - FD_DELTA;
            let down = sequence_loss(&model, &inputs, label);
            model.params.as_mut_slice()[k] = orig;
            let numeric = (up - down) / (2.0 * FD_DELTA);
            let analytic = grad.as_slice()[k];
            let r = rel_err(analytic, numeric, floor);
            if r > out.max_rel {
                out = GradCheck {
                    max_rel: r,
                    abs_at_worst: (analytic - numeric).abs(),
                    analytic_at_worst: analytic,
                    checked: out.checked,
                };
            }
            out.checked += 1;
        }
    }
    out
}

/// Per-cell slip duration of the default synthetic corpus, seconds.
pub const DEFAULT_CELL_S: f64 = 10.0;

pub fn corpus(per_cell_s: f64, sensors: &[SensorProfile], seed: u64) -> Vec<Recording> {
    generate_corpus(&default_profiles(), &SynthConfig::default(), per_cell_s, sensors, seed).unwrap()
}

pub fn default_corpus(seed: u64) -> Vec<Recording> {
    corpus(DEFAULT_CELL_S, &[SensorProfile::new("s0", Finger::Index, 1.0)], seed)
}

/// Three learning-rate stages of at most 30 epochs each.
pub fn short_schedule() -> TrainConfig {
    TrainConfig {
        lr_schedule: vec![0.01, 0.001, 0.0001],
        max_epochs_per_stage: 30,
        ..TrainConfig::default()
    }
}
