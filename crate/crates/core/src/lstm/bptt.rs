use super::forward::{readout_into, step_core, StepBuffers};
use super::{Gate, LstmModel, LstmParams};
use crate::balance::Label;
use crate::scalar::Real;

/// Probability clamp used inside the loss.
pub const LOSS_EPS: f64 = 1e-12;

#[inline]
fn target<T: Real>(label: Label, k: usize) -> T {
    let hot = match label {
        Label::NonSlip => 0,
        Label::Slip => 1,
    };
    if k == hot {
        T::one()
    } else {
        T::zero()
    }
}

/// Summed binary cross-entropy of the independent sigmoid outputs against the
/// one-hot target of `label`.
pub fn loss<T: Real>(y_p: &[T], label: Label) -> T {
    let eps = T::lit(LOSS_EPS);
    let hi = T::one() - eps;
    y_p.iter()
        .enumerate()
        .map(|(k, &p)| {
            let p = p.max(eps).min(hi);
            let t: T = target(label, k);
            -(t * p.ln() + (T::one() - t) * (T::one() - p).ln())
        })
        .sum()
}

/// Forward activations kept for the backward sweep plus backward scratch.
#[derive(Debug, Clone, Default)]
pub struct BpttWorkspace<T> {
    z: Vec<T>,
    i: Vec<T>,
    f: Vec<T>,
    o: Vec<T>,
    c: Vec<T>,
    y: Vec<T>,
    dy: Vec<T>,
    dy_next: Vec<T>,
    dc: Vec<T>,
    d_pre: Vec<T>,
}

impl<T: Real> BpttWorkspace<T> {
    pub fn new() -> Self {
        Self {
            z: Vec::new(),
            i: Vec::new(),
            f: Vec::new(),
            o: Vec::new(),
            c: Vec::new(),
            y: Vec::new(),
            dy: Vec::new(),
            dy_next: Vec::new(),
            dc: Vec::new(),
            d_pre: Vec::new(),
        }
    }

    fn reset(&mut self, steps: usize, n: usize) {
        for v in [&mut self.z, &mut self.i, &mut self.f, &mut self.o, &mut self.c, &mut self.y] {
            v.clear();
            v.resize(steps * n, T::zero());
        }
        for v in [&mut self.dy, &mut self.dy_next, &mut self.dc] {
            v.clear();
            v.resize(n, T::zero());
        }
        self.d_pre.clear();
        self.d_pre.resize(4 * n, T::zero());
    }
}

/// Runs the full unfolded sequence and accumulates the exact gradient of the
/// final-step loss into `grad`. `inputs` are normalized, length `W * M`.
/// Returns the loss and the final-step outputs.
pub fn sequence_gradients<T: Real>(
    model: &LstmModel<T>,
    inputs: &[T],
    label: Label,
    grad: &mut LstmParams<T>,
    ws: &mut BpttWorkspace<T>,
) -> (T, Vec<T>) {
    let d = model.dims();
    let (n, m) = (d.hidden, d.input);
    let steps = inputs.len() / m;
    assert!(steps >= 1 && inputs.len() == steps * m, "window must hold whole steps");
    let p = &model.params;
    ws.reset(steps, n);
    let zeros = vec![T::zero(); n];

    for t in 0..steps {
        let x = &inputs[t * m..(t + 1) * m];
        let (c_prev, c_cur) = if t == 0 {
            (&zeros[..], &mut ws.c[0..n])
        } else {
            let (a, b) = ws.c.split_at_mut(t * n);
            (&a[(t - 1) * n..], &mut b[..n])
        };
        let (y_prev, y_cur) = if t == 0 {
            (&zeros[..], &mut ws.y[0..n])
        } else {
            let (a, b) = ws.y.split_at_mut(t * n);
            (&a[(t - 1) * n..], &mut b[..n])
        };
        let r = t * n..(t + 1) * n;
        step_core(
            p,
            x,
            y_prev,
            c_prev,
            StepBuffers {
                z: &mut ws.z[r.clone()],
                i: &mut ws.i[r.clone()],
                f: &mut ws.f[r.clone()],
                o: &mut ws.o[r],
                c: c_cur,
                y: y_cur,
            },
        );
    }

    let last = (steps - 1) * n..steps * n;
    let y_last = &ws.y[last];
    let mut y_p = vec![T::zero(); d.output];
    readout_into(p, y_last, &mut y_p);
    let value = loss(&y_p, label);

    // output layer: dL/da_k = y_p,k - t_k
    ws.dy.iter_mut().for_each(|v| *v = T::zero());
    for k in 0..d.output {
        let delta = y_p[k] - target::<T>(label, k);
        grad.by_mut()[k] += delta;
        let wy_row = k * n..(k + 1) * n;
        for (g, &yv) in grad.wy_mut()[wy_row.clone()].iter_mut().zip(y_last) {
            *g += delta * yv;
        }
        for (dy, &w) in ws.dy.iter_mut().zip(&p.wy()[wy_row]) {
            *dy += delta * w;
        }
    }
    ws.dc.iter_mut().for_each(|v| *v = T::zero());

    let one = T::one();
    for t in (0..steps).rev() {
        let base = t * n;
        for j in 0..n {
            let (z, i, f, o, c) = (ws.z[base + j], ws.i[base + j], ws.f[base + j], ws.o[base + j], ws.c[base + j]);
            let c_prev = if t == 0 { T::zero() } else { ws.c[base - n + j] };
            let tc = c.tanh();
            let dy = ws.dy[j];
            let dc = ws.dc[j] + dy * o * (one - tc * tc);
            ws.d_pre[j] = dc * i * (one - z * z);
            ws.d_pre[n + j] = dc * z * i * (one - i);
            ws.d_pre[2 * n + j] = dc * c_prev * f * (one - f);
            ws.d_pre[3 * n + j] = dy * tc * o * (one - o);
            ws.dc[j] = dc * f;
        }
        let x = &inputs[t * m..(t + 1) * m];
        ws.dy_next.iter_mut().for_each(|v| *v = T::zero());
        for g in Gate::ALL {
            let dg = &ws.d_pre[g as usize * n..(g as usize + 1) * n];
            {
                let gw = grad.w_mut(g);
                for row in 0..n {
                    for col in 0..m {
                        gw[row * m + col] += dg[row] * x[col];
                    }
                }
            }
            {
                let gb = grad.b_mut(g);
                for row in 0..n {
                    gb[row] += dg[row];
                }
            }
            if t > 0 {
                let y_prev = &ws.y[base - n..base];
                let gr = grad.r_mut(g);
                for row in 0..n {
                    let dr = dg[row];
                    for (gv, &yv) in gr[row * n..(row + 1) * n].iter_mut().zip(y_prev) {
                        *gv += dr * yv;
                    }
                }
                let r = p.r(g);
                for row in 0..n {
                    let dr = dg[row];
                    for (acc, &rv) in ws.dy_next.iter_mut().zip(&r[row * n..(row + 1) * n]) {
                        *acc += dr * rv;
                    }
                }
            }
        }
        std::mem::swap(&mut ws.dy, &mut ws.dy_next);
    }
    (value, y_p)
}

/// Loss of the final-step output on normalized inputs.
pub fn sequence_loss<T: Real>(model: &LstmModel<T>, inputs: &[T], label: Label) -> T {
    loss(&super::predict_sequence(model, inputs), label)
}

fn normalized<T: Real>(model: &LstmModel<T>, samples: &[f64]) -> Vec<T> {
    samples.iter().map(|&s| model.norm_stats.apply(T::lit(s))).collect()
}

/// Loss for a raw (unnormalized) window.
pub fn window_loss<T: Real>(model: &LstmModel<T>, samples: &[f64], label: Label) -> T {
    sequence_loss(model, &normalized(model, samples), label)
}

/// Exact gradient of the final-step loss for a raw window, by backpropagation
/// through the fully unfolded sequence.
pub fn bptt_gradients<T: Real>(model: &LstmModel<T>, samples: &[f64], label: Label) -> (T, LstmParams<T>) {
    let mut grad = LstmParams::zeros(model.dims());
    let mut ws = BpttWorkspace::new();
    let (l, _) = sequence_gradients(model, &normalized(model, samples), label, &mut grad, &mut ws);
    (l, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lstm::{predict_sequence, Dims};
    use crate::signal::NormalizationStats;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn loss_values() {
        let eps = LOSS_EPS;
        assert!(loss(&[1.0 - eps, eps], Label::NonSlip) < 1e-11);
        let two_ln2 = 2.0 * std::f64::consts::LN_2;
        assert!((loss(&[0.5, 0.5], Label::NonSlip) - two_ln2).abs() < 1e-15);
        assert!((loss(&[0.5, 0.5], Label::Slip) - two_ln2).abs() < 1e-15);
        // clamped: a hard zero on the target does not produce infinity
        assert!(loss(&[0.0f64, 1.0], Label::NonSlip).is_finite());
    }

    #[test]
    fn loss_against_independent_arithmetic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let p: [f64; 2] = [rng.random_range(0.01..0.99), rng.random_range(0.01..0.99)];
            let slip = rng.random_bool(0.5);
            let label = if slip { Label::Slip } else { Label::NonSlip };
            // -(log p_hot) - log(1 - p_other), as a product inside one log
            let (hot, other) = if slip { (p[1], p[0]) } else { (p[0], p[1]) };
            let want = -(hot * (1.0 - other)).ln();
            assert!((loss(&p, label) - want).abs() <= 1e-13 * want.max(1.0));
        }
    }

    #[test]
    fn output_bias_gradient_is_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = Dims::new(4, 1, 2);
        let m = LstmModel::new(LstmParams::uniform(d, 0.5, &mut rng), NormalizationStats::unit());
        let xs = [0.2, -0.4, 0.9];
        let (_, g) = bptt_gradients(&m, &xs, Label::Slip);
        let p = predict_sequence(&m, &xs);
        assert!((g.by()[0] - p[0]).abs() < 1e-15);
        assert!((g.by()[1] - (p[1] - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn single_step_closed_form() {
        // W = 1 from zero state: recurrent weights get no gradient, and
        // dL/db_o = sum_k delta_k W_y[k] * tanh(c) * o (1 - o)
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let d = Dims::new(3, 1, 2);
        let m = LstmModel::new(LstmParams::uniform(d, 0.7, &mut rng), NormalizationStats::unit());
        let x = 0.6;
        let (_, g) = bptt_gradients(&m, &[x], Label::NonSlip);
        assert!(Gate::ALL.iter().all(|&gt| g.r(gt).iter().all(|&v| v == 0.0)));
        let p = &m.params;
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let y_p = predict_sequence(&m, &[x]);
        let delta = [y_p[0] - 1.0, y_p[1]];
        for j in 0..3 {
            let z = (p.w(Gate::Z)[j] * x + p.b(Gate::Z)[j]).tanh();
            let i = sig(p.w(Gate::I)[j] * x + p.b(Gate::I)[j]);
            let o = sig(p.w(Gate::O)[j] * x + p.b(Gate::O)[j]);
            let c = z * i;
            let dy = delta[0] * p.wy()[j] + delta[1] * p.wy()[3 + j];
            let db_o = dy * c.tanh() * o * (1.0 - o);
            let dc = dy * o * (1.0 - c.tanh().powi(2));
            let db_z = dc * i * (1.0 - z * z);
            let db_i = dc * z * i * (1.0 - i);
            assert!((g.b(Gate::O)[j] - db_o).abs() < 1e-14);
            assert!((g.b(Gate::Z)[j] - db_z).abs() < 1e-14);
            assert!((g.b(Gate::I)[j] - db_i).abs() < 1e-14);
            assert!((g.w(Gate::I)[j] - db_i * x).abs() < 1e-14);
            // c_prev = 0 -> no forget-gate gradient
            assert_eq!(g.b(Gate::F)[j], 0.0);
        }
    }
}
