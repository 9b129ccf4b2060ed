use ndarray::Array2;

use super::{write_channel, BeamStack, DualityFeature, HeadKind, NetworkParams, BN_EPS};
use crate::autodiff::{BatchStats, Eager, Graph};
use crate::channel::{ChannelSample, NOISE_POWER};
use crate::error::{Error, Result};
use crate::linalg::CVec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics, recorded for the running averages.
    Train,
    /// Running statistics.
    Eval,
}

/// A batch of samples laid out for the network.
#[derive(Clone, Debug)]
pub struct BatchInput {
    pub x0: Array2<f64>,
    /// Stacked channels, `B x 2MK`.
    pub h: Array2<f64>,
    pub budgets: Vec<f64>,
    pub m: usize,
    pub k: usize,
}

impl BatchInput {
    pub fn new(samples: &[ChannelSample], power_input: bool) -> Result<Self> {
        let first = samples.first().ok_or(Error::EmptyDataset)?;
        let (m, k) = (first.num_antennas(), first.num_users());
        let width = 2 * m * k;
        let mut x0 = Array2::zeros((samples.len(), width + usize::from(power_input)));
        let mut h = Array2::zeros((samples.len(), width));
        let mut budgets = Vec::with_capacity(samples.len());
        for (b, s) in samples.iter().enumerate() {
            if s.num_users() != k || s.h.iter().any(|hk| hk.len() != m) {
                return Err(Error::DimensionMismatch {
                    context: "batch sample shape",
                    expected: width,
                    found: 2 * s.num_users() * s.num_antennas(),
                });
            }
            if !s.is_finite() || !(s.power > 0.0) {
                return Err(Error::NonFinite(format!("sample {b} of the batch")));
            }
            let mut row = h.row_mut(b);
            write_channel(s, row.as_slice_mut().expect("owned row"));
            x0.row_mut(b).slice_mut(ndarray::s![..width]).assign(&h.row(b));
            if power_input {
                x0[[b, width]] = s.power_db;
            }
            budgets.push(s.power);
        }
        Ok(Self { x0, h, budgets, m, k })
    }

    pub fn len(&self) -> usize {
        self.budgets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.budgets.is_empty()
    }
}

/// `L` blocks of affine, batch norm and ReLU, then the output affine map.
/// Returns the pre-activation `u` and, in train mode, each layer's batch
/// statistics.
pub fn forward_trunk<'a, G: Graph<'a>>(
    g: &mut G,
    params: &'a NetworkParams,
    x0: &G::Value,
    mode: Mode,
) -> Result<(G::Value, Vec<BatchStats>)> {
    let width = g.value(x0).ncols();
    if width != params.input_dim() {
        return Err(Error::DimensionMismatch {
            context: "network input",
            expected: params.input_dim(),
            found: width,
        });
    }
    let mut stats = Vec::new();
    let mut x = x0.clone();
    for (l, layer) in params.hidden.iter().enumerate() {
        let w = g.param(NetworkParams::weight_id(l), &layer.weight);
        let b = g.param(NetworkParams::bias_id(l), &layer.bias);
        let gamma = g.param(NetworkParams::gamma_id(l), &layer.gamma);
        let beta = g.param(NetworkParams::beta_id(l), &layer.beta);
        let z = g.affine(&x, &w, &b)?;
        let n = match mode {
            Mode::Train => {
                let (n, s) = g.batch_norm_train(&z, &gamma, &beta, BN_EPS)?;
                stats.push(s);
                n
            }
            Mode::Eval => g.batch_norm_eval(&z, &gamma, &beta, &layer.running_mean, &layer.running_var, BN_EPS)?,
        };
        x = g.relu(&n);
    }
    let w = g.param(params.out_weight_id(), &params.out_weight);
    let b = g.param(params.out_bias_id(), &params.out_bias);
    Ok((g.affine(&x, &w, &b)?, stats))
}

/// Values produced by an output head.
pub struct HeadValues<V> {
    pub v: V,
    pub p: Option<V>,
    pub q: Option<V>,
    /// Unit-norm beam directions (FL/SFL).
    pub d: Option<V>,
}

/// Maps the trunk output to power-feasible beams.
pub fn apply_head<'a, G: Graph<'a>>(
    g: &mut G,
    head: HeadKind,
    u: &G::Value,
    h: &Array2<f64>,
    budgets: &[f64],
    m: usize,
) -> Result<HeadValues<G::Value>> {
    let k = h.ncols() / (2 * m);
    let width = g.value(u).ncols();
    if width != head.output_dim(m, k) {
        return Err(Error::DimensionMismatch {
            context: "head input",
            expected: head.output_dim(m, k),
            found: width,
        });
    }
    match head {
        HeadKind::Dbl => Ok(HeadValues {
            v: g.dbl_normalize(u, budgets)?,
            p: None,
            q: None,
            d: None,
        }),
        HeadKind::Fl => {
            let up = g.slice_cols(u, 0, k)?;
            let uq = g.slice_cols(u, k, k)?;
            let p = g.scaled_softmax(&up, budgets)?;
            let q = g.scaled_softmax(&uq, budgets)?;
            duality_recovery(g, p, q, h, m)
        }
        HeadKind::Sfl => {
            let p = g.scaled_softmax(u, budgets)?;
            duality_recovery(g, p.clone(), p, h, m)
        }
    }
}

pub(crate) fn duality_recovery<'a, G: Graph<'a>>(
    g: &mut G,
    p: G::Value,
    q: G::Value,
    h: &Array2<f64>,
    m: usize,
) -> Result<HeadValues<G::Value>> {
    let a = g.gram(&q, h, m, NOISE_POWER)?;
    let rhs = g.constant(h.clone());
    let x = g.hpd_solve(&a, &rhs, m)?;
    let d = g.normalize_blocks(&x, m)?;
    let v = g.scale_blocks(&d, &p, m)?;
    Ok(HeadValues {
        v,
        p: Some(p),
        q: Some(q),
        d: Some(d),
    })
}

/// Negative batch-mean sum rate of the beams `v`.
pub fn sum_rate_loss<'a, G: Graph<'a>>(g: &mut G, v: &G::Value, h: &Array2<f64>, m: usize) -> Result<G::Value> {
    let k = h.ncols() / (2 * m);
    let gains = g.cross_gains(v, h, m)?;
    let rates = g.sum_rate(&gains, k, NOISE_POWER)?;
    let mean = g.mean_rows(&rates);
    Ok(g.scale(&mean, -1.0))
}

/// Eval-mode output for one sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Inference {
    pub beams: BeamStack,
    pub duality: Option<DualityFeature>,
    pub directions: Option<Vec<CVec>>,
}

const INFER_CHUNK: usize = 1024;

impl NetworkParams {
    /// Eval-mode beams for one sample.
    pub fn beamform(&self, sample: &ChannelSample) -> Result<BeamStack> {
        Ok(self.infer(std::slice::from_ref(sample))?.remove(0).beams)
    }

    /// Eval-mode inference with the head's intermediate features.
    pub fn infer(&self, samples: &[ChannelSample]) -> Result<Vec<Inference>> {
        let mut out = Vec::with_capacity(samples.len());
        for chunk in samples.chunks(INFER_CHUNK) {
            let batch = BatchInput::new(chunk, self.power_input)?;
            self.check_batch(&batch)?;
            let mut g = Eager;
            let x0 = g.constant(batch.x0.clone());
            let (u, _) = forward_trunk(&mut g, self, &x0, Mode::Eval)?;
            let hv = apply_head(&mut g, self.head, &u, &batch.h, &batch.budgets, self.m)?;
            for b in 0..batch.len() {
                let beams = BeamStack::from_row(
                    hv.v.row(b).as_slice().expect("owned row"),
                    self.m,
                    self.k,
                    batch.budgets[b],
                );
                let duality = match (&hv.p, &hv.q) {
                    (Some(p), Some(q)) => Some(DualityFeature {
                        p: p.row(b).to_vec(),
                        q: q.row(b).to_vec(),
                    }),
                    _ => None,
                };
                let directions =
                    hv.d.as_ref()
                        .map(|d| BeamStack::from_row(d.row(b).as_slice().expect("owned row"), self.m, self.k, 0.0).v);
                out.push(Inference {
                    beams,
                    duality,
                    directions,
                });
            }
        }
        Ok(out)
    }

    pub(crate) fn check_batch(&self, batch: &BatchInput) -> Result<()> {
        if batch.m != self.m || batch.k != self.k {
            return Err(Error::DimensionMismatch {
                context: "sample dimensions vs model (2MK)",
                expected: 2 * self.m * self.k,
                found: 2 * batch.m * batch.k,
            });
        }
        Ok(())
    }
}
