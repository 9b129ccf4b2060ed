use ndarray::{Array1, Array2};
use rand::Rng;

use super::HeadKind;
use crate::autodiff::{ParamId, ParamSet};
use crate::channel::{stream_rng, streams};

pub const DEFAULT_HIDDEN_WIDTH: usize = 320;
pub const DEFAULT_HIDDEN_LAYERS: usize = 5;

/// Hidden-layer widths of the trunk.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrunkSpec {
    pub widths: Vec<usize>,
}

impl Default for TrunkSpec {
    fn default() -> Self {
        Self {
            widths: vec![DEFAULT_HIDDEN_WIDTH; DEFAULT_HIDDEN_LAYERS],
        }
    }
}

/// Affine map followed by batch normalization (then ReLU at run time).
#[derive(Clone, Debug, PartialEq)]
pub struct HiddenLayer {
    /// `out x in`.
    pub weight: Array2<f64>,
    /// `1 x out`; the same holds for `gamma` and `beta`.
    pub bias: Array2<f64>,
    pub gamma: Array2<f64>,
    pub beta: Array2<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
}

impl HiddenLayer {
    pub fn width(&self) -> usize {
        self.weight.nrows()
    }
}

/// All network state: trainable tensors plus normalization statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParams {
    pub m: usize,
    pub k: usize,
    pub head: HeadKind,
    /// Whether the dB budget is part of the input. Models trained at a
    /// single budget drop it.
    pub power_input: bool,
    pub hidden: Vec<HiddenLayer>,
    pub out_weight: Array2<f64>,
    pub out_bias: Array2<f64>,
    /// Hash of the training configuration that produced these parameters.
    pub fingerprint: String,
}

impl NetworkParams {
    pub fn input_dim(&self) -> usize {
        2 * self.m * self.k + usize::from(self.power_input)
    }

    pub fn output_dim(&self) -> usize {
        self.out_weight.nrows()
    }

    pub fn widths(&self) -> Vec<usize> {
        self.hidden.iter().map(HiddenLayer::width).collect()
    }

    pub fn num_trainable(&self) -> usize {
        (0..self.num_tensors()).map(|i| self.tensor(i).len()).sum()
    }

    pub fn weight_id(layer: usize) -> ParamId {
        ParamId(4 * layer)
    }
    pub fn bias_id(layer: usize) -> ParamId {
        ParamId(4 * layer + 1)
    }
    pub fn gamma_id(layer: usize) -> ParamId {
        ParamId(4 * layer + 2)
    }
    pub fn beta_id(layer: usize) -> ParamId {
        ParamId(4 * layer + 3)
    }
    pub fn out_weight_id(&self) -> ParamId {
        ParamId(4 * self.hidden.len())
    }
    pub fn out_bias_id(&self) -> ParamId {
        ParamId(4 * self.hidden.len() + 1)
    }
}

impl ParamSet for NetworkParams {
    fn num_tensors(&self) -> usize {
        4 * self.hidden.len() + 2
    }

    fn tensor(&self, i: usize) -> &Array2<f64> {
        let n = self.hidden.len();
        if i >= 4 * n {
            return if i == 4 * n { &self.out_weight } else { &self.out_bias };
        }
        let l = &self.hidden[i / 4];
        match i % 4 {
            0 => &l.weight,
            1 => &l.bias,
            2 => &l.gamma,
            _ => &l.beta,
        }
    }

    fn tensor_mut(&mut self, i: usize) -> &mut Array2<f64> {
        let n = self.hidden.len();
        if i >= 4 * n {
            return if i == 4 * n {
                &mut self.out_weight
            } else {
                &mut self.out_bias
            };
        }
        let l = &mut self.hidden[i / 4];
        match i % 4 {
            0 => &mut l.weight,
            1 => &mut l.bias,
            2 => &mut l.gamma,
            _ => &mut l.beta,
        }
    }
}

fn glorot<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Array2<f64> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-bound..bound))
}

/// Glorot-uniform weights, zero biases, identity batch normalization.
pub fn init_params(
    m: usize,
    k: usize,
    head: HeadKind,
    trunk: &TrunkSpec,
    power_input: bool,
    seed: u64,
) -> NetworkParams {
    let mut rng = stream_rng(seed, streams::INIT);
    let mut fan_in = 2 * m * k + usize::from(power_input);
    let mut hidden = Vec::with_capacity(trunk.widths.len());
    for &w in &trunk.widths {
        hidden.push(HiddenLayer {
            weight: glorot(&mut rng, w, fan_in),
            bias: Array2::zeros((1, w)),
            gamma: Array2::ones((1, w)),
            beta: Array2::zeros((1, w)),
            running_mean: Array1::zeros(w),
            running_var: Array1::ones(w),
        });
        fan_in = w;
    }
    let out = head.output_dim(m, k);
    NetworkParams {
        m,
        k,
        head,
        power_input,
        hidden,
        out_weight: glorot(&mut rng, out, fan_in),
        out_bias: Array2::zeros((1, out)),
        fingerprint: String::new(),
    }
}
