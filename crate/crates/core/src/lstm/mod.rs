//! From-scratch LSTM binary classifier.
//!
//! One LSTM layer without peepholes, followed by `K` independent sigmoid
//! outputs read at the final timestep:
//!
//! ```text
//! z = tanh(W_z x + R_z y' + b_z)      i = sig(W_i x + R_i y' + b_i)
//! f = sig(W_f x + R_f y' + b_f)       o = sig(W_o x + R_o y' + b_o)
//! c = z * i + c' * f                  y = tanh(c) * o
//! y_p = sig(W_y y + b_y)
//! ```
//!
//! All parameters live in one flat buffer (see [`LstmParams`]) so optimizers
//! and gradient checks can treat the model as a plain vector.

mod bptt;
mod file;
mod forward;
mod train;

pub use bptt::{
    bptt_gradients, loss, sequence_gradients, sequence_loss, window_loss, BpttWorkspace, LOSS_EPS,
};
pub use file::{read_model, write_model, ModelFileError, MODEL_MAGIC};
pub use forward::{forward_step, predict_sequence, predict_window, LstmState, Prediction, StepTrace};
pub use train::{train, EpochRecord, TrainConfig, TrainError, TrainHistory};

use rand::Rng;

use crate::scalar::Real;
use crate::signal::NormalizationStats;

/// Layer sizes: hidden units `N`, inputs `M`, outputs `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub hidden: usize,
    pub input: usize,
    pub output: usize,
}

impl Dims {
    pub fn new(hidden: usize, input: usize, output: usize) -> Self {
        Self { hidden, input, output }
    }

    /// Total parameter count.
    pub fn len(&self) -> usize {
        let (n, m, k) = (self.hidden, self.input, self.output);
        4 * (n * m + n * n + n) + k * n + k
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Gates in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    /// Block input `z`.
    Z = 0,
    I = 1,
    F = 2,
    O = 3,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Z, Gate::I, Gate::F, Gate::O];

    pub fn symbol(self) -> &'static str {
        match self {
            Gate::Z => "z",
            Gate::I => "i",
            Gate::F => "f",
            Gate::O => "o",
        }
    }
}

/// Flat parameter (or gradient) buffer.
///
/// Layout, all matrices row-major:
/// `W_z W_i W_f W_o` (N x M each), `R_z R_i R_f R_o` (N x N each),
/// `b_z b_i b_f b_o` (N each), `W_y` (K x N), `b_y` (K).
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams<T> {
    dims: Dims,
    data: Vec<T>,
}

impl<T: Real> LstmParams<T> {
    pub fn zeros(dims: Dims) -> Self {
        Self {
            dims,
            data: vec![T::zero(); dims.len()],
        }
    }

    pub fn from_vec(dims: Dims, data: Vec<T>) -> Option<Self> {
        (data.len() == dims.len()).then_some(Self { dims, data })
    }

    pub fn uniform<R: Rng>(dims: Dims, scale: f64, rng: &mut R) -> Self {
        let data = (0..dims.len())
            .map(|_| T::lit(if scale > 0.0 { rng.random_range(-scale..=scale) } else { 0.0 }))
            .collect();
        Self { dims, data }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    fn w_off(&self, g: Gate) -> usize {
        g as usize * self.dims.hidden * self.dims.input
    }

    fn r_off(&self, g: Gate) -> usize {
        let (n, m) = (self.dims.hidden, self.dims.input);
        4 * n * m + g as usize * n * n
    }

    fn b_off(&self, g: Gate) -> usize {
        let (n, m) = (self.dims.hidden, self.dims.input);
        4 * (n * m + n * n) + g as usize * n
    }

    fn wy_off(&self) -> usize {
        let (n, m) = (self.dims.hidden, self.dims.input);
        4 * (n * m + n * n + n)
    }

    fn by_off(&self) -> usize {
        self.wy_off() + self.dims.output * self.dims.hidden
    }

    pub fn w(&self, g: Gate) -> &[T] {
        let o = self.w_off(g);
        &self.data[o..o + self.dims.hidden * self.dims.input]
    }

    pub fn w_mut(&mut self, g: Gate) -> &mut [T] {
        let o = self.w_off(g);
        let len = self.dims.hidden * self.dims.input;
        &mut self.data[o..o + len]
    }

    pub fn r(&self, g: Gate) -> &[T] {
        let o = self.r_off(g);
        &self.data[o..o + self.dims.hidden * self.dims.hidden]
    }

    pub fn r_mut(&mut self, g: Gate) -> &mut [T] {
        let o = self.r_off(g);
        let len = self.dims.hidden * self.dims.hidden;
        &mut self.data[o..o + len]
    }

    pub fn b(&self, g: Gate) -> &[T] {
        let o = self.b_off(g);
        &self.data[o..o + self.dims.hidden]
    }

    pub fn b_mut(&mut self, g: Gate) -> &mut [T] {
        let o = self.b_off(g);
        let len = self.dims.hidden;
        &mut self.data[o..o + len]
    }

    pub fn wy(&self) -> &[T] {
        let o = self.wy_off();
        &self.data[o..o + self.dims.output * self.dims.hidden]
    }

    pub fn wy_mut(&mut self) -> &mut [T] {
        let o = self.wy_off();
        let len = self.dims.output * self.dims.hidden;
        &mut self.data[o..o + len]
    }

    pub fn by(&self) -> &[T] {
        let o = self.by_off();
        &self.data[o..o + self.dims.output]
    }

    pub fn by_mut(&mut self) -> &mut [T] {
        let o = self.by_off();
        let len = self.dims.output;
        &mut self.data[o..o + len]
    }

    /// Named blocks in storage order, for serialization.
    pub fn blocks(&self) -> Vec<(String, usize, usize, &[T])> {
        let d = self.dims;
        let mut out = Vec::new();
        for g in Gate::ALL {
            out.push((format!("W_{}", g.symbol()), d.hidden, d.input, self.w(g)));
        }
        for g in Gate::ALL {
            out.push((format!("R_{}", g.symbol()), d.hidden, d.hidden, self.r(g)));
        }
        for g in Gate::ALL {
            out.push((format!("b_{}", g.symbol()), d.hidden, 1, self.b(g)));
        }
        out.push(("W_y".into(), d.output, d.hidden, self.wy()));
        out.push(("b_y".into(), d.output, 1, self.by()));
        out
    }

    pub fn fill_zero(&mut self) {
        self.data.iter_mut().for_each(|v| *v = T::zero());
    }

    /// `self += alpha * other`.
    pub fn add_scaled(&mut self, alpha: T, other: &Self) {
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: T) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn l2_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn cast<U: Real>(&self) -> LstmParams<U> {
        LstmParams {
            dims: self.dims,
            data: self.data.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }
}

/// Trained (or initialized) classifier with its input normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel<T = f64> {
    pub params: LstmParams<T>,
    pub norm_stats: NormalizationStats<T>,
    /// Window length the model was trained on, if known.
    pub window_size: Option<usize>,
    /// Fingerprint of the training configuration.
    pub config_fingerprint: u64,
}

impl<T: Real> LstmModel<T> {
    pub fn new(params: LstmParams<T>, norm_stats: NormalizationStats<T>) -> Self {
        Self {
            params,
            norm_stats,
            window_size: None,
            config_fingerprint: 0,
        }
    }

    /// All-zero model with unit normalization.
    pub fn zeros(dims: Dims) -> Self {
        Self::new(LstmParams::zeros(dims), NormalizationStats::unit())
    }

    pub fn dims(&self) -> Dims {
        self.params.dims()
    }

    pub fn cast<U: Real>(&self) -> LstmModel<U> {
        LstmModel {
            params: self.params.cast(),
            norm_stats: self.norm_stats.cast(),
            window_size: self.window_size,
            config_fingerprint: self.config_fingerprint,
        }
    }
}

#[inline]
pub(crate) fn sigmoid<T: Real>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}
