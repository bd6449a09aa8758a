use std::ops::Range;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Named parameter tensors. Gate order everywhere is input, forget, output, candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tensor {
    Wi,
    Wf,
    Wo,
    Wc,
    Ui,
    Uf,
    Uo,
    Uc,
    Bi,
    Bf,
    Bo,
    Bc,
    WOut,
    BOut,
}

impl Tensor {
    pub const ALL: [Tensor; 14] = [
        Tensor::Wi,
        Tensor::Wf,
        Tensor::Wo,
        Tensor::Wc,
        Tensor::Ui,
        Tensor::Uf,
        Tensor::Uo,
        Tensor::Uc,
        Tensor::Bi,
        Tensor::Bf,
        Tensor::Bo,
        Tensor::Bc,
        Tensor::WOut,
        Tensor::BOut,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Tensor::Wi => "W_i",
            Tensor::Wf => "W_f",
            Tensor::Wo => "W_o",
            Tensor::Wc => "W_c",
            Tensor::Ui => "U_i",
            Tensor::Uf => "U_f",
            Tensor::Uo => "U_o",
            Tensor::Uc => "U_c",
            Tensor::Bi => "b_i",
            Tensor::Bf => "b_f",
            Tensor::Bo => "b_o",
            Tensor::Bc => "b_c",
            Tensor::WOut => "w_out",
            Tensor::BOut => "b_out",
        }
    }

    pub fn from_name(name: &str) -> Option<Tensor> {
        Tensor::ALL.into_iter().find(|t| t.name() == name)
    }

    /// `(rows, cols)` for the given dimensions.
    pub fn shape(self, input_dim: usize, hidden_dim: usize) -> (usize, usize) {
        match self {
            Tensor::Wi | Tensor::Wf | Tensor::Wo | Tensor::Wc => (hidden_dim, input_dim),
            Tensor::Ui | Tensor::Uf | Tensor::Uo | Tensor::Uc => (hidden_dim, hidden_dim),
            Tensor::Bi | Tensor::Bf | Tensor::Bo | Tensor::Bc | Tensor::WOut => (hidden_dim, 1),
            Tensor::BOut => (1, 1),
        }
    }

    fn fan_in(self, input_dim: usize, hidden_dim: usize) -> Option<usize> {
        match self {
            Tensor::Wi | Tensor::Wf | Tensor::Wo | Tensor::Wc => Some(input_dim),
            Tensor::Ui | Tensor::Uf | Tensor::Uo | Tensor::Uc | Tensor::WOut => Some(hidden_dim),
            _ => None,
        }
    }

    pub(crate) fn input_weight(gate: usize) -> Tensor {
        [Tensor::Wi, Tensor::Wf, Tensor::Wo, Tensor::Wc][gate]
    }

    pub(crate) fn recurrent_weight(gate: usize) -> Tensor {
        [Tensor::Ui, Tensor::Uf, Tensor::Uo, Tensor::Uc][gate]
    }

    pub(crate) fn bias(gate: usize) -> Tensor {
        [Tensor::Bi, Tensor::Bf, Tensor::Bo, Tensor::Bc][gate]
    }
}

/// All weights of the `input → hidden (LSTM) → 1 (sigmoid)` classifier in one flat buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    input_dim: usize,
    hidden_dim: usize,
    data: Vec<f64>,
}

impl LstmParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        let len = Tensor::ALL
            .iter()
            .map(|t| {
                let (r, c) = t.shape(input_dim, hidden_dim);
                r * c
            })
            .sum();
        Self {
            input_dim,
            hidden_dim,
            data: vec![0.0; len],
        }
    }

    /// Weights uniform in `±sqrt(1 / fan_in)`, forget-gate bias 1, other biases 0.
    pub fn init(input_dim: usize, hidden_dim: usize, seed: u64) -> Self {
        let mut p = Self::zeros(input_dim, hidden_dim);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for t in Tensor::ALL {
            if let Some(fan_in) = t.fan_in(input_dim, hidden_dim) {
                let bound = (1.0 / fan_in as f64).sqrt();
                let dist = Uniform::new_inclusive(-bound, bound);
                for x in p.tensor_mut(t) {
                    *x = dist.sample(&mut rng);
                }
            }
        }
        p.tensor_mut(Tensor::Bf).iter_mut().for_each(|b| *b = 1.0);
        p
    }

    pub fn from_tensors(
        input_dim: usize,
        hidden_dim: usize,
        tensors: impl IntoIterator<Item = (Tensor, Vec<f64>)>,
    ) -> Result<Self> {
        let mut p = Self::zeros(input_dim, hidden_dim);
        let mut seen = Vec::new();
        for (t, values) in tensors {
            let dst = p.tensor_mut(t);
            if values.len() != dst.len() {
                return Err(Error::Model(format!(
                    "tensor {} has {} values, expected {}",
                    t.name(),
                    values.len(),
                    dst.len()
                )));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Model(format!("tensor {} holds non-finite values", t.name())));
            }
            dst.copy_from_slice(&values);
            seen.push(t);
        }
        if let Some(missing) = Tensor::ALL.iter().find(|t| !seen.contains(t)) {
            return Err(Error::Model(format!("missing tensor {}", missing.name())));
        }
        Ok(p)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn range(&self, t: Tensor) -> Range<usize> {
        let mut start = 0;
        for u in Tensor::ALL {
            let (r, c) = u.shape(self.input_dim, self.hidden_dim);
            if u == t {
                return start..start + r * c;
            }
            start += r * c;
        }
        unreachable!()
    }

    pub fn tensor(&self, t: Tensor) -> &[f64] {
        &self.data[self.range(t)]
    }

    pub fn tensor_mut(&mut self, t: Tensor) -> &mut [f64] {
        let r = self.range(t);
        &mut self.data[r]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}
