use super::{sigmoid, Gate, LstmModel, LstmParams};
use crate::balance::Label;
use crate::scalar::Real;

/// Cell state `c` and block output `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState<T> {
    pub c: Vec<T>,
    pub y: Vec<T>,
}

impl<T: Real> LstmState<T> {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            c: vec![T::zero(); hidden],
            y: vec![T::zero(); hidden],
        }
    }
}

/// Every intermediate of one timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTrace<T> {
    pub x: Vec<T>,
    pub z: Vec<T>,
    pub i: Vec<T>,
    pub f: Vec<T>,
    pub c: Vec<T>,
    pub o: Vec<T>,
    pub y: Vec<T>,
    pub y_p: Vec<T>,
}

/// Writes `act(W_g x + R_g y_prev + b_g)` for one gate.
#[inline]
fn gate_into<T: Real>(p: &LstmParams<T>, g: Gate, x: &[T], y_prev: &[T], out: &mut [T]) {
    let m = x.len();
    let n = y_prev.len();
    let w = p.w(g);
    let r = p.r(g);
    let b = p.b(g);
    for row in 0..n {
        let mut acc = b[row];
        let wr = &w[row * m..row * m + m];
        for (wv, xv) in wr.iter().zip(x) {
            acc += *wv * *xv;
        }
        let rr = &r[row * n..row * n + n];
        for (rv, yv) in rr.iter().zip(y_prev) {
            acc += *rv * *yv;
        }
        out[row] = if g == Gate::Z { acc.tanh() } else { sigmoid(acc) };
    }
}

/// Buffers for one step. `c` and `y` are the new state.
pub(crate) struct StepBuffers<'a, T> {
    pub z: &'a mut [T],
    pub i: &'a mut [T],
    pub f: &'a mut [T],
    pub o: &'a mut [T],
    pub c: &'a mut [T],
    pub y: &'a mut [T],
}

#[inline]
pub(crate) fn step_core<T: Real>(p: &LstmParams<T>, x: &[T], y_prev: &[T], c_prev: &[T], out: StepBuffers<'_, T>) {
    gate_into(p, Gate::Z, x, y_prev, out.z);
    gate_into(p, Gate::I, x, y_prev, out.i);
    gate_into(p, Gate::F, x, y_prev, out.f);
    gate_into(p, Gate::O, x, y_prev, out.o);
    for n in 0..y_prev.len() {
        let c = out.z[n] * out.i[n] + c_prev[n] * out.f[n];
        out.c[n] = c;
        out.y[n] = c.tanh() * out.o[n];
    }
}

/// `sig(W_y y + b_y)` into `out`.
#[inline]
pub(crate) fn readout_into<T: Real>(p: &LstmParams<T>, y: &[T], out: &mut [T]) {
    let n = y.len();
    let wy = p.wy();
    let by = p.by();
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = by[k];
        for (w, v) in wy[k * n..k * n + n].iter().zip(y) {
            acc += *w * *v;
        }
        *o = sigmoid(acc);
    }
}

/// One LSTM step from `state` on input `x` (length `M`).
pub fn forward_step<T: Real>(
    model: &LstmModel<T>,
    state: &LstmState<T>,
    x: &[T],
) -> (LstmState<T>, Vec<T>, StepTrace<T>) {
    let d = model.dims();
    assert_eq!(x.len(), d.input, "input width");
    assert_eq!(state.c.len(), d.hidden, "state width");
    let zero = vec![T::zero(); d.hidden];
    let (mut z, mut i, mut f, mut o, mut c, mut y) =
        (zero.clone(), zero.clone(), zero.clone(), zero.clone(), zero.clone(), zero);
    step_core(
        &model.params,
        x,
        &state.y,
        &state.c,
        StepBuffers {
            z: &mut z,
            i: &mut i,
            f: &mut f,
            o: &mut o,
            c: &mut c,
            y: &mut y,
        },
    );
    let mut y_p = vec![T::zero(); d.output];
    readout_into(&model.params, &y, &mut y_p);
    let trace = StepTrace {
        x: x.to_vec(),
        z,
        i,
        f,
        c: c.clone(),
        o,
        y: y.clone(),
        y_p: y_p.clone(),
    };
    (LstmState { c, y }, y_p, trace)
}

/// Final-step outputs for already-normalized inputs (`len = W * M`), starting
/// from a zero state.
pub fn predict_sequence<T: Real>(model: &LstmModel<T>, inputs: &[T]) -> Vec<T> {
    let d = model.dims();
    let n = d.hidden;
    let mut buf = vec![T::zero(); 8 * n];
    let (gates, state) = buf.split_at_mut(4 * n);
    let (z, rest) = gates.split_at_mut(n);
    let (i, rest) = rest.split_at_mut(n);
    let (f, o) = rest.split_at_mut(n);
    let (cy, next) = state.split_at_mut(2 * n);
    let (c, y) = cy.split_at_mut(n);
    let (c2, y2) = next.split_at_mut(n);
    let (mut c, mut y, mut c2, mut y2) = (c, y, c2, y2);
    for x in inputs.chunks_exact(d.input) {
        step_core(
            &model.params,
            x,
            y,
            c,
            StepBuffers {
                z: &mut *z,
                i: &mut *i,
                f: &mut *f,
                o: &mut *o,
                c: &mut *c2,
                y: &mut *y2,
            },
        );
        std::mem::swap(&mut c, &mut c2);
        std::mem::swap(&mut y, &mut y2);
    }
    let mut out = vec![T::zero(); d.output];
    readout_into(&model.params, y, &mut out);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<T> {
    pub label: Label,
    pub probabilities: Vec<T>,
}

/// Output index 0 is non-slip, 1 is slip. Exact ties resolve to non-slip.
pub(crate) fn decide<T: Real>(p: &[T]) -> Label {
    if p.len() >= 2 && p[1] > p[0] {
        Label::Slip
    } else {
        Label::NonSlip
    }
}

/// Normalizes raw window samples with the model's stats and classifies from
/// the final-step output. State starts from zero for every window.
pub fn predict_window<T: Real>(model: &LstmModel<T>, samples: &[f64]) -> Prediction<T> {
    let inputs: Vec<T> = samples.iter().map(|&s| model.norm_stats.apply(T::lit(s))).collect();
    let probabilities = predict_sequence(model, &inputs);
    Prediction {
        label: decide(&probabilities),
        probabilities,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lstm::Dims;
    use crate::signal::NormalizationStats;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_model_is_neutral() {
        let m = LstmModel::<f64>::zeros(Dims::new(5, 1, 2));
        let (s, y_p, tr) = forward_step(&m, &LstmState::zeros(5), &[0.7]);
        assert!(tr.i.iter().chain(&tr.f).chain(&tr.o).all(|&g| g == 0.5));
        assert!(tr.z.iter().chain(&s.c).chain(&s.y).all(|&v| v == 0.0));
        assert_eq!(y_p, vec![0.5, 0.5]);
        let p = predict_window(&m, &[1.0, -2.0, 3.0]);
        assert_eq!(p.probabilities, vec![0.5, 0.5]);
        assert_eq!(p.label, Label::NonSlip);
    }

    #[test]
    fn saturated_forget_gate_carries_cell() {
        let mut m = LstmModel::<f64>::zeros(Dims::new(3, 1, 2));
        m.params.b_mut(Gate::F).iter_mut().for_each(|b| *b = 60.0);
        let prev = LstmState {
            c: vec![0.3, -1.2, 2.0],
            y: vec![0.0; 3],
        };
        let (s, _, tr) = forward_step(&m, &prev, &[5.0]);
        assert!(tr.i.iter().all(|&v| v == 0.5));
        assert!(tr.z.iter().all(|&v| v == 0.0));
        for (a, b) in s.c.iter().zip(&prev.c) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn slip_bias_forces_slip() {
        let mut m = LstmModel::<f64>::zeros(Dims::new(4, 1, 2));
        m.params.by_mut()[1] = 8.0;
        m.params.by_mut()[0] = -8.0;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        m.params.as_mut_slice()[..10]
            .iter_mut()
            .zip(LstmParams::<f64>::uniform(Dims::new(4, 1, 2), 0.3, &mut rng).as_slice())
            .for_each(|(a, b)| *a = *b);
        for x in [-100.0, 0.0, 3.0] {
            assert_eq!(predict_window(&m, &[x; 7]).label, Label::Slip);
        }
    }

    /// Straight-line restatement of the cell equations with explicit loops.
    fn reference(model: &LstmModel<f64>, xs: &[f64]) -> Vec<f64> {
        let d = model.dims();
        let (n, m) = (d.hidden, d.input);
        let p = &model.params;
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let mut c = vec![0.0; n];
        let mut y = vec![0.0; n];
        for x in xs.chunks(m) {
            let pre = |g: Gate, row: usize| {
                let mut s = p.b(g)[row];
                for j in 0..m {
                    s += p.w(g)[row * m + j] * x[j];
                }
                for j in 0..n {
                    s += p.r(g)[row * n + j] * y[j];
                }
                s
            };
            let mut c_new = vec![0.0; n];
            let mut y_new = vec![0.0; n];
            for r in 0..n {
                let z = pre(Gate::Z, r).tanh();
                let i = sig(pre(Gate::I, r));
                let f = sig(pre(Gate::F, r));
                let o = sig(pre(Gate::O, r));
                c_new[r] = z * i + c[r] * f;
                y_new[r] = c_new[r].tanh() * o;
            }
            c = c_new;
            y = y_new;
        }
        (0..d.output)
            .map(|k| {
                let mut s = p.by()[k];
                for j in 0..n {
                    s += p.wy()[k * n + j] * y[j];
                }
                sig(s)
            })
            .collect()
    }

    #[test]
    fn matches_reference_implementation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = Dims::new(3, 1, 2);
        let m = LstmModel::new(LstmParams::uniform(d, 0.8, &mut rng), NormalizationStats::unit());
        let xs = [0.3, -0.9, 1.4, 0.05, -0.2];
        let got = predict_sequence(&m, &xs);
        let want = reference(&m, &xs);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-12);
        }
        // stepping through forward_step agrees too
        let mut st = LstmState::zeros(3);
        let mut last = vec![];
        for x in xs {
            let (s, y_p, tr) = forward_step(&m, &st, &[x]);
            assert!(tr.i.iter().chain(&tr.f).chain(&tr.o).all(|&g| g > 0.0 && g < 1.0));
            assert!(tr.z.iter().all(|&v| v > -1.0 && v < 1.0));
            st = s;
            last = y_p;
        }
        assert_eq!(last, got);
    }

    #[test]
    fn multi_input_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let d = Dims::new(4, 3, 2);
        let m = LstmModel::new(LstmParams::uniform(d, 0.5, &mut rng), NormalizationStats::unit());
        let xs: Vec<f64> = (0..12).map(|i| (i as f64 * 0.37).sin()).collect();
        let got = predict_sequence(&m, &xs);
        for (a, b) in got.iter().zip(reference(&m, &xs)) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}
