//! Unsupervised training: minimize the negative batch-mean sum rate with
//! Adam, drawing fresh `(h, P)` pairs every step.

use std::io::Write;
use std::path::PathBuf;

use ndarray::Array2;
use rand::Rng;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::autodiff::{kernels, BatchStats, Eager, Gradients, Graph, ParamSet, Tape};
use crate::channel::{
    per_level_set, stream_rng, streams, ChannelConfig, ChannelSample, PowerGrid, SampleStream, NOISE_POWER,
};
use crate::error::{Error, Result};
use crate::metrics::sum_rate;
use crate::model::{
    apply_head, forward_trunk, init_params, BatchInput, HeadKind, HeadValues, Mode, NetworkParams, TrunkSpec, BN_EPS,
    BN_MOMENTUM,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moments for every tensor of a [`ParamSet`].
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<Array2<f64>>,
    pub v: Vec<Array2<f64>>,
    pub n: u64,
}

impl AdamState {
    pub fn new<P: ParamSet>(params: &P) -> Self {
        let zeros: Vec<Array2<f64>> = (0..params.num_tensors())
            .map(|i| Array2::zeros(params.tensor(i).raw_dim()))
            .collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            n: 0,
        }
    }
}

/// One bias-corrected Adam descent step. Tensors without a gradient are
/// treated as having a zero gradient.
pub fn adam_step<P: ParamSet>(
    params: &mut P,
    grads: &Gradients,
    state: &mut AdamState,
    cfg: &AdamConfig,
) -> Result<()> {
    if state.m.len() != params.num_tensors() {
        return Err(Error::DimensionMismatch {
            context: "Adam state tensors",
            expected: params.num_tensors(),
            found: state.m.len(),
        });
    }
    state.n += 1;
    let c1 = 1.0 - cfg.beta1.powi(state.n as i32);
    let c2 = 1.0 - cfg.beta2.powi(state.n as i32);
    for i in 0..params.num_tensors() {
        let theta = params.tensor_mut(i);
        if theta.raw_dim() != state.m[i].raw_dim() {
            return Err(Error::DimensionMismatch {
                context: "Adam state shape",
                expected: theta.len(),
                found: state.m[i].len(),
            });
        }
        let g = grads.get(crate::autodiff::ParamId(i));
        if let Some(g) = g {
            if g.raw_dim() != theta.raw_dim() {
                return Err(Error::DimensionMismatch {
                    context: "gradient shape",
                    expected: theta.len(),
                    found: g.len(),
                });
            }
        }
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        for (idx, t) in theta.indexed_iter_mut() {
            let gi = g.map_or(0.0, |g| g[idx]);
            let mi = cfg.beta1 * m[idx] + (1.0 - cfg.beta1) * gi;
            let vi = cfg.beta2 * v[idx] + (1.0 - cfg.beta2) * gi * gi;
            m[idx] = mi;
            v[idx] = vi;
            *t -= cfg.learning_rate * (mi / c1) / ((vi / c2).sqrt() + cfg.eps);
        }
    }
    Ok(())
}

/// Forward pass of a batch through the loss.
pub struct LossGraph<V> {
    /// `-mean_b sum_k log2(1 + SINR_k)`.
    pub loss: V,
    /// Per-sample sum rates, `B x 1`.
    pub rates: V,
    pub head: HeadValues<V>,
    pub stats: Vec<BatchStats>,
}

/// Negative mean sum rate of `batch`, recorded on `g`.
pub fn batch_loss<'a, G: Graph<'a>>(
    g: &mut G,
    params: &'a NetworkParams,
    batch: &BatchInput,
    mode: Mode,
) -> Result<LossGraph<G::Value>> {
    if mode == Mode::Train && batch.len() < 2 {
        return Err(Error::BatchTooSmall(batch.len()));
    }
    params.check_batch(batch)?;
    let x0 = g.constant(batch.x0.clone());
    let (u, stats) = forward_trunk(g, params, &x0, mode)?;
    let head = apply_head(g, params.head, &u, &batch.h, &batch.budgets, params.m)?;
    let gains = g.cross_gains(&head.v, &batch.h, params.m)?;
    let rates = g.sum_rate(&gains, params.k, NOISE_POWER)?;
    let mean = g.mean_rows(&rates);
    let loss = g.scale(&mean, -1.0);
    Ok(LossGraph {
        loss,
        rates,
        head,
        stats,
    })
}

/// Untaped loss value.
pub fn loss_value(params: &NetworkParams, batch: &BatchInput, mode: Mode) -> Result<f64> {
    let mut g = Eager;
    let out = batch_loss(&mut g, params, batch, mode)?;
    Ok(out.loss[[0, 0]])
}

/// Taped loss value and its parameter gradients.
pub fn loss_gradient(params: &NetworkParams, batch: &BatchInput, mode: Mode) -> Result<(f64, Gradients)> {
    let mut tape = Tape::new();
    let out = batch_loss(&mut tape, params, batch, mode)?;
    let loss = tape.value(&out.loss)[[0, 0]];
    Ok((loss, tape.backward(out.loss)?))
}

/// Smallest `|pre-activation|` over every ReLU in train mode. Finite
/// differences are only trustworthy when this clears the step size.
pub fn relu_margin(params: &NetworkParams, batch: &BatchInput) -> Result<f64> {
    let mut x = batch.x0.clone();
    let mut margin = f64::INFINITY;
    for layer in &params.hidden {
        let z = kernels::affine(x.view(), layer.weight.view(), layer.bias.view())?;
        let (n, _, _) = kernels::batch_norm_train(z.view(), layer.gamma.view(), layer.beta.view(), BN_EPS)?;
        margin = n.iter().fold(margin, |m, v| m.min(v.abs()));
        x = kernels::relu(n.view());
    }
    Ok(margin)
}

/// `running = momentum * running + (1 - momentum) * batch`, with the
/// unbiased batch variance.
pub fn update_running_stats(params: &mut NetworkParams, stats: &[BatchStats], batch_size: usize) {
    let correction = batch_size as f64 / (batch_size as f64 - 1.0);
    for (layer, s) in params.hidden.iter_mut().zip(stats) {
        layer
            .running_mean
            .zip_mut_with(&s.mean, |r, &b| *r = BN_MOMENTUM * *r + (1.0 - BN_MOMENTUM) * b);
        layer.running_var.zip_mut_with(&s.var, |r, &b| {
            *r = BN_MOMENTUM * *r + (1.0 - BN_MOMENTUM) * b * correction
        });
    }
}

#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub m: usize,
    pub k: usize,
    pub head: HeadKind,
    pub trunk: TrunkSpec,
    /// Budgets drawn uniformly during training and used for validation.
    pub grid: PowerGrid,
    /// Train at a single budget without the power input feature.
    pub fixed_p_db: Option<f64>,
    pub batch_size: usize,
    pub steps: usize,
    pub adam: AdamConfig,
    /// Global gradient-norm clip; `None` disables clipping.
    pub grad_clip: Option<f64>,
    pub seed: u64,
    /// Validation and log interval in steps; the last step is always logged.
    pub eval_every: usize,
    pub val_per_level: usize,
    pub checkpoint: Option<PathBuf>,
    /// Sample batches from this fixed set instead of fresh draws.
    pub dataset: Option<Vec<ChannelSample>>,
}

impl TrainConfig {
    pub fn new(m: usize, k: usize, head: HeadKind) -> Self {
        Self {
            m,
            k,
            head,
            trunk: TrunkSpec::default(),
            grid: PowerGrid::default(),
            fixed_p_db: None,
            batch_size: 256,
            steps: 20_000,
            adam: AdamConfig::default(),
            grad_clip: Some(10.0),
            seed: 0,
            eval_every: 1000,
            val_per_level: 1000,
            checkpoint: None,
            dataset: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.batch_size < 2 {
            return Err(Error::BatchTooSmall(self.batch_size));
        }
        if !(self.adam.learning_rate > 0.0) {
            return bad(format!(
                "learning rate must be positive, got {}",
                self.adam.learning_rate
            ));
        }
        if !(0.0..1.0).contains(&self.adam.beta1) || !(0.0..1.0).contains(&self.adam.beta2) || !(self.adam.eps > 0.0) {
            return bad(format!("invalid Adam settings {:?}", self.adam));
        }
        if self.steps == 0 || self.eval_every == 0 || self.val_per_level == 0 {
            return bad("steps, eval_every and val_per_level must be positive".into());
        }
        if self.trunk.widths.is_empty() || self.trunk.widths.contains(&0) {
            return bad(format!("hidden widths must be positive, got {:?}", self.trunk.widths));
        }
        if matches!(self.grad_clip, Some(c) if !(c > 0.0)) {
            return bad("gradient clip must be positive".into());
        }
        if let Some(ds) = &self.dataset {
            if ds.len() < 2 {
                return Err(Error::BatchTooSmall(ds.len()));
            }
            if ds.iter().any(|s| s.num_users() != self.k || s.num_antennas() != self.m) {
                return bad(format!("dataset samples are not {}x{}", self.m, self.k));
            }
        }
        ChannelConfig::new(self.m, self.k).validate()
    }

    /// Budgets the model sees: the grid, or the single fixed level.
    pub fn effective_grid(&self) -> PowerGrid {
        match self.fixed_p_db {
            Some(db) => PowerGrid::single(db),
            None => self.grid.clone(),
        }
    }

    /// Everything that determines the trained parameters, as JSON.
    pub fn describe(&self) -> serde_json::Value {
        json!({
            "m": self.m,
            "k": self.k,
            "head": self.head.to_string(),
            "hidden_widths": self.trunk.widths,
            "grid_db": self.grid.levels_db(),
            "fixed_p_db": self.fixed_p_db,
            "batch_size": self.batch_size,
            "steps": self.steps,
            "learning_rate": self.adam.learning_rate,
            "adam_betas": [self.adam.beta1, self.adam.beta2],
            "adam_eps": self.adam.eps,
            "grad_clip": self.grad_clip,
            "seed": self.seed,
            "eval_every": self.eval_every,
            "val_per_level": self.val_per_level,
            "dataset_len": self.dataset.as_ref().map(Vec::len),
        })
    }

    /// Short SHA-256 of [`Self::describe`].
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.describe().to_string().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// One logged row.
#[derive(Clone, Debug, PartialEq)]
pub struct LogRow {
    pub step: usize,
    /// Mean training loss over the steps since the previous row.
    pub loss: f64,
    /// Validation average sum rate per grid level.
    pub val_sum_rate: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainLog {
    pub levels_db: Vec<f64>,
    pub rows: Vec<LogRow>,
}

impl TrainLog {
    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["step".to_string(), "loss".to_string()];
        h.extend(self.levels_db.iter().map(|db| format!("val_sr_p{db}")));
        h
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(self.header())?;
        for row in &self.rows {
            let mut rec = vec![row.step.to_string(), format!("{:.10}", row.loss)];
            rec.extend(row.val_sum_rate.iter().map(|v| format!("{v:.10}")));
            out.write_record(rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }
}

pub struct TrainOutcome {
    pub params: NetworkParams,
    pub log: TrainLog,
}

/// Eval-mode average sum rate of `samples`, grouped into `levels` equal
/// consecutive blocks.
pub fn evaluate_levels(params: &NetworkParams, samples: &[ChannelSample], levels: usize) -> Result<Vec<f64>> {
    let inferred = params.infer(samples)?;
    let per = samples.len() / levels;
    let mut out = Vec::with_capacity(levels);
    for l in 0..levels {
        let mut total = 0.0;
        for i in l * per..(l + 1) * per {
            total += sum_rate(&samples[i].h, &inferred[i].beams.v)?;
        }
        out.push(total / per as f64);
    }
    Ok(out)
}

const POWER_TOL: f64 = 1e-9;

struct Batches {
    fresh: Option<SampleStream>,
    fixed: Option<(Vec<ChannelSample>, rand_chacha::ChaCha8Rng)>,
}

impl Batches {
    fn new(cfg: &TrainConfig) -> Self {
        match &cfg.dataset {
            Some(ds) => Self {
                fresh: None,
                fixed: Some((ds.clone(), stream_rng(cfg.seed, streams::TRAIN))),
            },
            None => Self {
                fresh: Some(SampleStream::new(
                    cfg.seed,
                    streams::TRAIN,
                    ChannelConfig::new(cfg.m, cfg.k),
                    cfg.effective_grid(),
                )),
                fixed: None,
            },
        }
    }

    fn next(&mut self, n: usize, fixed_p_db: Option<f64>) -> Vec<ChannelSample> {
        let mut batch = match (&mut self.fresh, &mut self.fixed) {
            (Some(s), _) => s.take_vec(n),
            (None, Some((ds, rng))) => (0..n).map(|_| ds[rng.random_range(0..ds.len())].clone()).collect(),
            (None, None) => unreachable!("one source is always set"),
        };
        if let Some(db) = fixed_p_db {
            for s in &mut batch {
                if s.power_db != db {
                    *s = s.with_power_db(db);
                }
            }
        }
        batch
    }
}

/// Trains from scratch. `on_row` sees every log row as it is produced.
pub fn train_with(cfg: &TrainConfig, mut on_row: impl FnMut(&LogRow)) -> Result<TrainOutcome> {
    cfg.validate()?;
    let grid = cfg.effective_grid();
    let mut params = init_params(cfg.m, cfg.k, cfg.head, &cfg.trunk, cfg.fixed_p_db.is_none(), cfg.seed);
    params.fingerprint = cfg.fingerprint();
    let mut adam = AdamState::new(&params);
    let validation = per_level_set(
        cfg.seed,
        streams::VALIDATION,
        &ChannelConfig::new(cfg.m, cfg.k),
        &grid,
        cfg.val_per_level,
    );
    let mut batches = Batches::new(cfg);
    let mut log = TrainLog {
        levels_db: grid.levels_db().to_vec(),
        rows: Vec::new(),
    };
    let mut window = (0.0, 0usize);

    for step in 1..=cfg.steps {
        let samples = batches.next(cfg.batch_size, cfg.fixed_p_db);
        let batch = BatchInput::new(&samples, params.power_input)?;
        let (loss, mut grads, stats) = {
            let mut tape = Tape::new();
            let out = batch_loss(&mut tape, &params, &batch, Mode::Train)?;
            let loss = tape.value(&out.loss)[[0, 0]];
            if !loss.is_finite() {
                let rates = tape.value(&out.rates);
                let sample = rates.iter().position(|r| !r.is_finite()).unwrap_or(0);
                return Err(Error::NonFiniteLoss { step, sample });
            }
            // Spot-check the power equality on one sample per step.
            let b = step % batch.len();
            let v = tape.value(&out.head.v);
            let total: f64 = v.row(b).iter().map(|x| x * x).sum();
            let error = (total - batch.budgets[b]).abs() / batch.budgets[b];
            if !(error <= POWER_TOL) {
                return Err(Error::PowerViolation { step, error });
            }
            let grads = tape.backward(out.loss)?;
            (loss, grads, out.stats)
        };
        if !grads.is_finite() {
            return Err(Error::NonFiniteLoss { step, sample: 0 });
        }
        if let Some(clip) = cfg.grad_clip {
            let norm = grads.global_norm();
            if norm > clip {
                grads.scale(clip / norm);
            }
        }
        adam_step(&mut params, &grads, &mut adam, &cfg.adam)?;
        update_running_stats(&mut params, &stats, batch.len());
        window.0 += loss;
        window.1 += 1;

        if step % cfg.eval_every == 0 || step == cfg.steps {
            let row = LogRow {
                step,
                loss: window.0 / window.1 as f64,
                val_sum_rate: evaluate_levels(&params, &validation, grid.len())?,
            };
            window = (0.0, 0);
            on_row(&row);
            log.rows.push(row);
            if let Some(path) = &cfg.checkpoint {
                params.save(path)?;
            }
        }
    }
    Ok(TrainOutcome { params, log })
}

pub fn train(cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with(cfg, |_| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::ParamId;
    use crate::linalg::norm2;

    fn grads_of(values: Vec<Array2<f64>>) -> Gradients {
        let mut g = Gradients::default();
        for (i, v) in values.into_iter().enumerate() {
            g.insert(ParamId(i), v);
        }
        g
    }

    #[test]
    fn zero_gradient_leaves_params_and_decays_moments() {
        let mut params = vec![Array2::from_elem((2, 2), 0.5)];
        let mut state = AdamState::new(&params);
        state.m[0].fill(1.0);
        state.v[0].fill(1.0);
        adam_step(
            &mut params,
            &grads_of(vec![Array2::zeros((2, 2))]),
            &mut state,
            &AdamConfig::default(),
        )
        .unwrap();
        assert!(state.m[0].iter().all(|&m| (m - 0.9).abs() < 1e-15));
        assert!(state.v[0].iter().all(|&v| (v - 0.999).abs() < 1e-15));
        // with zero moments nothing moves at all
        let mut fresh = AdamState::new(&params);
        let before = params.clone();
        adam_step(&mut params, &Gradients::default(), &mut fresh, &AdamConfig::default()).unwrap();
        assert_eq!(params, before);
    }

    #[test]
    fn first_step_has_learning_rate_magnitude() {
        let mut params = vec![Array2::from_shape_vec((1, 3), vec![0.0, 1.0, -2.0]).unwrap()];
        let before = params[0].clone();
        let mut state = AdamState::new(&params);
        let g = Array2::from_shape_vec((1, 3), vec![3.0, -0.01, 1e3]).unwrap();
        adam_step(
            &mut params,
            &grads_of(vec![g.clone()]),
            &mut state,
            &AdamConfig::default(),
        )
        .unwrap();
        for ((a, b), gi) in params[0].iter().zip(&before).zip(&g) {
            let delta = a - b;
            assert!((delta.abs() - 1e-3).abs() < 1e-8);
            assert_eq!(delta.signum(), -gi.signum());
        }
    }

    #[test]
    fn quadratic_bowl_converges() {
        let mut params = vec![Array2::from_elem((1, 1), 1.0)];
        let mut state = AdamState::new(&params);
        let cfg = AdamConfig {
            learning_rate: 1e-2,
            ..AdamConfig::default()
        };
        let mut steps = 0;
        while params[0][[0, 0]].abs() >= 1e-3 && steps < 5000 {
            let g = params[0].mapv(|t| 2.0 * t);
            adam_step(&mut params, &grads_of(vec![g]), &mut state, &cfg).unwrap();
            steps += 1;
        }
        assert!(params[0][[0, 0]].abs() < 1e-3, "stuck at {}", params[0][[0, 0]]);
    }

    #[test]
    fn config_validation() {
        let mut cfg = TrainConfig::new(2, 2, HeadKind::Sfl);
        assert!(cfg.validate().is_ok());
        cfg.batch_size = 1;
        assert!(matches!(cfg.validate(), Err(Error::BatchTooSmall(1))));
        cfg.batch_size = 4;
        cfg.adam.learning_rate = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn fingerprint_tracks_config() {
        let a = TrainConfig::new(2, 2, HeadKind::Sfl);
        let mut b = a.clone();
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.seed = 1;
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 16);
    }

    #[test]
    fn identical_samples_give_the_single_sample_loss() {
        let params = init_params(2, 2, HeadKind::Fl, &TrunkSpec { widths: vec![8] }, true, 3);
        let mut stream = SampleStream::new(3, streams::TRAIN, ChannelConfig::new(2, 2), PowerGrid::default());
        let s = stream.next().unwrap();
        let one = BatchInput::new(std::slice::from_ref(&s), true).unwrap();
        let many = BatchInput::new(&vec![s.clone(); 6], true).unwrap();
        let loss = |batch: &BatchInput, mode| {
            let mut tape = Tape::new();
            let out = batch_loss(&mut tape, &params, batch, mode).unwrap();
            tape.value(&out.loss)[[0, 0]]
        };
        let single = loss(&one, Mode::Eval);
        assert!((loss(&many, Mode::Eval) - single).abs() <= 1e-12 * single.abs());
        // zero batch variance: every hidden unit sits at beta, so the output is
        // the same for each copy
        let train = loss(&many, Mode::Train);
        assert!(train.is_finite());
        let mut tape = Tape::new();
        let out = batch_loss(&mut tape, &params, &many, Mode::Train).unwrap();
        let rates = tape.value(&out.rates);
        assert!(rates.iter().all(|r| (r - rates[[0, 0]]).abs() < 1e-12));
    }

    #[test]
    fn single_user_sfl_loss_is_closed_form() {
        let mut params = init_params(3, 1, HeadKind::Sfl, &TrunkSpec { widths: vec![4] }, true, 0);
        params.out_weight.fill(0.0);
        let mut stream = SampleStream::new(4, streams::TRAIN, ChannelConfig::new(3, 1), PowerGrid::default());
        let samples = stream.take_vec(5);
        let batch = BatchInput::new(&samples, true).unwrap();
        let mut tape = Tape::new();
        let out = batch_loss(&mut tape, &params, &batch, Mode::Train).unwrap();
        let expected: f64 = -samples
            .iter()
            .map(|s| (1.0 + s.power * norm2(&s.h[0])).log2())
            .sum::<f64>()
            / samples.len() as f64;
        let got = tape.value(&out.loss)[[0, 0]];
        assert!((got - expected).abs() <= 1e-12 * expected.abs());
    }

    #[test]
    fn short_run_is_reproducible() {
        let mut cfg = TrainConfig::new(2, 2, HeadKind::Sfl);
        cfg.trunk = TrunkSpec { widths: vec![16, 16] };
        cfg.batch_size = 8;
        cfg.steps = 30;
        cfg.eval_every = 10;
        cfg.val_per_level = 5;
        let a = train(&cfg).unwrap();
        let b = train(&cfg).unwrap();
        assert_eq!(a.log.to_csv_string(), b.log.to_csv_string());
        assert_eq!(a.params, b.params);
        assert_eq!(a.log.rows.len(), 3);
        assert!(a.log.to_csv_string().starts_with("step,loss,val_sr_p0,val_sr_p5,"));
    }

    #[test]
    fn fixed_budget_drops_power_feature() {
        let mut cfg = TrainConfig::new(2, 2, HeadKind::Fl);
        cfg.trunk = TrunkSpec { widths: vec![8] };
        cfg.batch_size = 4;
        cfg.steps = 3;
        cfg.val_per_level = 3;
        cfg.fixed_p_db = Some(0.0);
        let out = train(&cfg).unwrap();
        assert_eq!(out.params.input_dim(), 8);
        assert!(!out.params.power_input);
        assert_eq!(out.log.header(), vec!["step", "loss", "val_sr_p0"]);
    }

    #[test]
    fn fixed_dataset_mode() {
        let mut stream = SampleStream::new(9, streams::TRAIN, ChannelConfig::new(2, 2), PowerGrid::default());
        let mut cfg = TrainConfig::new(2, 2, HeadKind::Dbl);
        cfg.trunk = TrunkSpec { widths: vec![8] };
        cfg.batch_size = 4;
        cfg.steps = 5;
        cfg.val_per_level = 2;
        cfg.dataset = Some(stream.take_vec(10));
        let a = train(&cfg).unwrap();
        let b = train(&cfg).unwrap();
        assert_eq!(a.params, b.params);
    }
}
