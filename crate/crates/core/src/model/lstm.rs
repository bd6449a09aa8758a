//! Single-layer LSTM, sequence to one, with a sigmoid output unit.
//!
//! ```text
//! i = σ(W_i x + U_i h + b_i)    f = σ(W_f x + U_f h + b_f)
//! o = σ(W_o x + U_o h + b_o)    g = tanh(W_c x + U_c h + b_c)
//! c' = f ⊙ c + i ⊙ g            h' = o ⊙ tanh(c')
//! score = σ(w_out · h_T + b_out)
//! ```
//! `h` and `c` start at zero for every sample.

use serde::{Deserialize, Serialize};

use super::params::{LstmParams, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub score: f64,
}

impl Prediction {
    pub fn label_at(&self, threshold: f64) -> bool {
        self.score >= threshold
    }
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Dot product with four independent accumulators so it vectorizes.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Activations recorded by a forward pass, reused across samples.
#[derive(Debug, Default, Clone)]
pub struct Tape {
    steps: usize,
    input_dim: usize,
    hidden: usize,
    x: Vec<f64>,
    /// `[t][gate][unit]`, post-activation.
    gates: Vec<f64>,
    /// `[t + 1][unit]`, index 0 is the zero initial state.
    c: Vec<f64>,
    h: Vec<f64>,
    tanh_c: Vec<f64>,
    score: f64,
    // Backward scratch.
    dz: Vec<f64>,
    dh: Vec<f64>,
    dc: Vec<f64>,
    dh_prev: Vec<f64>,
}

impl Tape {
    fn reset(&mut self, steps: usize, input_dim: usize, hidden: usize) {
        self.steps = steps;
        self.input_dim = input_dim;
        self.hidden = hidden;
        self.x.clear();
        self.gates.resize(steps * 4 * hidden, 0.0);
        self.c.clear();
        self.c.resize((steps + 1) * hidden, 0.0);
        self.h.clear();
        self.h.resize((steps + 1) * hidden, 0.0);
        self.tanh_c.resize(steps * hidden, 0.0);
    }

    pub fn score(&self) -> f64 {
        self.score
    }
}

fn check_input(params: &LstmParams, matrix: &[impl AsRef<[f64]>]) -> Result<()> {
    if matrix.is_empty() {
        return Err(Error::Input("empty input sequence".into()));
    }
    for row in matrix {
        let row = row.as_ref();
        if row.len() != params.input_dim() {
            return Err(Error::Input(format!(
                "input row has {} features, model expects {}",
                row.len(),
                params.input_dim()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("non-finite value in input sequence".into()));
        }
    }
    Ok(())
}

/// Scores one sequence. Rows must have `params.input_dim()` finite values.
pub fn forward(params: &LstmParams, matrix: &[impl AsRef<[f64]>]) -> Result<Prediction> {
    check_input(params, matrix)?;
    let mut tape = Tape::default();
    Ok(Prediction {
        score: forward_tape(params, matrix, &mut tape),
    })
}

/// Forward pass recording activations; input must already be validated.
pub(crate) fn forward_tape(params: &LstmParams, matrix: &[impl AsRef<[f64]>], tape: &mut Tape) -> f64 {
    let (ni, nh, steps) = (params.input_dim(), params.hidden_dim(), matrix.len());
    tape.reset(steps, ni, nh);
    for row in matrix {
        tape.x.extend_from_slice(row.as_ref());
    }
    let w: [&[f64]; 4] = std::array::from_fn(|g| params.tensor(Tensor::input_weight(g)));
    let u: [&[f64]; 4] = std::array::from_fn(|g| params.tensor(Tensor::recurrent_weight(g)));
    let b: [&[f64]; 4] = std::array::from_fn(|g| params.tensor(Tensor::bias(g)));

    for t in 0..steps {
        let x_t = &tape.x[t * ni..(t + 1) * ni];
        let h_prev = &tape.h[t * nh..(t + 1) * nh];
        let gates = &mut tape.gates[t * 4 * nh..(t + 1) * 4 * nh];
        for g in 0..4 {
            for r in 0..nh {
                let z = b[g][r] + dot(&w[g][r * ni..(r + 1) * ni], x_t) + dot(&u[g][r * nh..(r + 1) * nh], h_prev);
                gates[g * nh + r] = if g == 3 { z.tanh() } else { sigmoid(z) };
            }
        }
        for r in 0..nh {
            let (i, f, o, g) = (gates[r], gates[nh + r], gates[2 * nh + r], gates[3 * nh + r]);
            let c = f * tape.c[t * nh + r] + i * g;
            let tc = c.tanh();
            tape.c[(t + 1) * nh + r] = c;
            tape.tanh_c[t * nh + r] = tc;
            tape.h[(t + 1) * nh + r] = o * tc;
        }
    }
    let h_last = &tape.h[steps * nh..];
    let logit = params.tensor(Tensor::BOut)[0] + dot(params.tensor(Tensor::WOut), h_last);
    tape.score = sigmoid(logit);
    tape.score
}

/// Backpropagation through time for the sample on `tape`.
///
/// Adds `dscore · ∂score/∂θ` into `grad`, which has the layout of `params`.
pub(crate) fn backward(params: &LstmParams, tape: &mut Tape, dscore: f64, grad: &mut [f64]) {
    let (ni, nh, steps) = (tape.input_dim, tape.hidden, tape.steps);
    let s = tape.score;
    let dlogit = dscore * s * (1.0 - s);

    let r_w: [_; 4] = std::array::from_fn(|g| params.range(Tensor::input_weight(g)));
    let r_u: [_; 4] = std::array::from_fn(|g| params.range(Tensor::recurrent_weight(g)));
    let r_b: [_; 4] = std::array::from_fn(|g| params.range(Tensor::bias(g)));
    let r_wout = params.range(Tensor::WOut);
    let r_bout = params.range(Tensor::BOut);

    axpy(dlogit, &tape.h[steps * nh..], &mut grad[r_wout]);
    grad[r_bout.start] += dlogit;

    tape.dh.clear();
    tape.dh.extend(params.tensor(Tensor::WOut).iter().map(|w| w * dlogit));
    tape.dc.clear();
    tape.dc.resize(nh, 0.0);
    tape.dz.resize(4 * nh, 0.0);
    tape.dh_prev.resize(nh, 0.0);

    for t in (0..steps).rev() {
        let gates = &tape.gates[t * 4 * nh..(t + 1) * 4 * nh];
        let c_prev = &tape.c[t * nh..(t + 1) * nh];
        let tanh_c = &tape.tanh_c[t * nh..(t + 1) * nh];
        for r in 0..nh {
            let (i, f, o, g) = (gates[r], gates[nh + r], gates[2 * nh + r], gates[3 * nh + r]);
            let dh = tape.dh[r];
            let tc = tanh_c[r];
            let dc = tape.dc[r] + dh * o * (1.0 - tc * tc);
            tape.dz[r] = dc * g * i * (1.0 - i);
            tape.dz[nh + r] = dc * c_prev[r] * f * (1.0 - f);
            tape.dz[2 * nh + r] = dh * tc * o * (1.0 - o);
            tape.dz[3 * nh + r] = dc * i * (1.0 - g * g);
            tape.dc[r] = dc * f;
        }

        let x_t = &tape.x[t * ni..(t + 1) * ni];
        let h_prev = &tape.h[t * nh..(t + 1) * nh];
        tape.dh_prev.iter_mut().for_each(|v| *v = 0.0);
        for g in 0..4 {
            let dz = &tape.dz[g * nh..(g + 1) * nh];
            let u = params.tensor(Tensor::recurrent_weight(g));
            for r in 0..nh {
                let d = dz[r];
                if d == 0.0 {
                    continue;
                }
                axpy(d, x_t, &mut grad[r_w[g].start + r * ni..r_w[g].start + (r + 1) * ni]);
                axpy(d, h_prev, &mut grad[r_u[g].start + r * nh..r_u[g].start + (r + 1) * nh]);
                grad[r_b[g].start + r] += d;
                axpy(d, &u[r * nh..(r + 1) * nh], &mut tape.dh_prev);
            }
        }
        std::mem::swap(&mut tape.dh, &mut tape.dh_prev);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_weights_give_one_half() {
        let p = LstmParams::zeros(10, 64);
        let x = vec![[0.0; 10]; 5];
        assert_eq!(forward(&p, &x).unwrap().score, 0.5);
    }

    #[test]
    fn non_finite_input_rejected() {
        let p = LstmParams::init(10, 8, 0);
        let mut x = vec![[0.1; 10]; 5];
        x[2][3] = f64::NAN;
        assert!(matches!(forward(&p, &x), Err(Error::Input(_))));
    }

    #[test]
    fn wrong_width_rejected() {
        let p = LstmParams::init(10, 8, 0);
        let x = vec![vec![0.1; 9]; 5];
        assert!(forward(&p, &x).is_err());
    }

    /// Scalar recurrence written out by hand for a single hidden unit.
    fn scalar_unroll(p: &LstmParams, xs: &[[f64; 10]]) -> f64 {
        let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
        let gate = |t: Tensor, u: Tensor, b: Tensor, x: &[f64; 10], h: f64| {
            let mut z = p.tensor(b)[0] + p.tensor(u)[0] * h;
            for (w, xk) in p.tensor(t).iter().zip(x) {
                z += w * xk;
            }
            z
        };
        let (mut h, mut c) = (0.0, 0.0);
        for x in xs {
            let i = sig(gate(Tensor::Wi, Tensor::Ui, Tensor::Bi, x, h));
            let f = sig(gate(Tensor::Wf, Tensor::Uf, Tensor::Bf, x, h));
            let o = sig(gate(Tensor::Wo, Tensor::Uo, Tensor::Bo, x, h));
            let g = gate(Tensor::Wc, Tensor::Uc, Tensor::Bc, x, h).tanh();
            c = f * c + i * g;
            h = o * c.tanh();
        }
        sig(p.tensor(Tensor::WOut)[0] * h + p.tensor(Tensor::BOut)[0])
    }

    #[test]
    fn one_unit_matches_scalar_unroll() {
        let mut p = LstmParams::init(10, 1, 11);
        for (k, v) in p.as_mut_slice().iter_mut().enumerate() {
            *v += 0.1 * ((k as f64) * 0.7).sin();
        }
        let xs: Vec<[f64; 10]> = (0..5)
            .map(|t| std::array::from_fn(|k| 0.05 + 0.9 * (((t * 10 + k) as f64) * 0.37).sin().abs()))
            .collect();
        let got = forward(&p, &xs).unwrap().score;
        let want = scalar_unroll(&p, &xs);
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    proptest! {
        #[test]
        fn score_is_a_probability(seed in any::<u64>(), xs in prop::collection::vec(prop::array::uniform10(-5.0f64..5.0), 1..8)) {
            let p = LstmParams::init(10, 16, seed);
            let s = forward(&p, &xs).unwrap().score;
            prop_assert!(s > 0.0 && s < 1.0);
        }
    }
}
