use std::collections::BTreeMap;

use ndarray::{Array1, Array2, ArrayView2, CowArray, Ix2};

use super::kernels::{self, BatchStats, NormCache};
use super::{Graph, ParamId};
use crate::error::{Error, Result};
use crate::linalg::Cholesky;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

enum Op {
    Leaf(Option<ParamId>),
    Affine {
        x: Var,
        w: Var,
        b: Var,
    },
    BatchNormTrain {
        x: Var,
        gamma: Var,
        beta: Var,
        cache: NormCache,
    },
    BatchNormEval {
        x: Var,
        gamma: Var,
        beta: Var,
        cache: NormCache,
    },
    Relu {
        x: Var,
    },
    ScaledSoftmax {
        z: Var,
        budgets: Vec<f64>,
    },
    SliceCols {
        x: Var,
        start: usize,
        ncols: usize,
    },
    Gram {
        q: Var,
        h: Array2<f64>,
        m: usize,
    },
    HpdSolve {
        a: Var,
        b: Var,
        m: usize,
        factors: Vec<Cholesky>,
    },
    NormalizeBlocks {
        x: Var,
        m: usize,
        norms: Array2<f64>,
    },
    ScaleBlocks {
        d: Var,
        p: Var,
        m: usize,
    },
    DblNormalize {
        u: Var,
        budgets: Vec<f64>,
    },
    CrossGains {
        v: Var,
        h: Array2<f64>,
        m: usize,
    },
    SumRate {
        g: Var,
        k: usize,
        sigma2: f64,
    },
    MeanRows {
        x: Var,
    },
    Scale {
        x: Var,
        c: f64,
    },
    Norm2Rows {
        x: Var,
    },
    Log2OnePlus {
        x: Var,
    },
    SumAll {
        x: Var,
    },
}

struct Node<'a> {
    value: CowArray<'a, f64, Ix2>,
    op: Op,
}

/// Records primitive applications in topological order.
///
/// A tape supports exactly one [`backward`](Tape::backward) call.
pub struct Tape<'a> {
    nodes: Vec<Node<'a>>,
    consumed: bool,
}

impl Default for Tape<'_> {
    fn default() -> Self {
        Self::new()
    }
}

/// Loss gradients keyed by parameter.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Gradients {
    map: BTreeMap<ParamId, Array2<f64>>,
}

impl Gradients {
    pub fn get(&self, id: ParamId) -> Option<&Array2<f64>> {
        self.map.get(&id)
    }

    pub fn insert(&mut self, id: ParamId, grad: Array2<f64>) {
        self.map.insert(id, grad);
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Array2<f64>)> {
        self.map.iter().map(|(k, v)| (*k, v))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn global_norm(&self) -> f64 {
        self.map
            .values()
            .flat_map(|g| g.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, c: f64) {
        for g in self.map.values_mut() {
            g.mapv_inplace(|v| v * c);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.map.values().all(|g| g.iter().all(|v| v.is_finite()))
    }
}

impl<'a> Tape<'a> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            consumed: false,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: impl Into<CowArray<'a, f64, Ix2>>, op: Op) -> Var {
        self.nodes.push(Node {
            value: value.into(),
            op,
        });
        Var(self.nodes.len() - 1)
    }

    fn val(&self, v: Var) -> ArrayView2<'_, f64> {
        self.nodes[v.0].value.view()
    }

    /// Registers an owned trainable leaf.
    pub fn param_owned(&mut self, id: ParamId, value: Array2<f64>) -> Var {
        self.push(value, Op::Leaf(Some(id)))
    }

    /// Cholesky factors saved by a solve node, if `v` is one.
    pub fn saved_factors(&self, v: Var) -> Option<&[Cholesky]> {
        match &self.nodes[v.0].op {
            Op::HpdSolve { factors, .. } => Some(factors),
            _ => None,
        }
    }

    pub fn norm2_rows(&mut self, x: Var) -> Var {
        let y = kernels::norm2_rows(self.val(x));
        self.push(y, Op::Norm2Rows { x })
    }

    pub fn log2_1p(&mut self, x: Var) -> Var {
        let y = kernels::log2_1p(self.val(x));
        self.push(y, Op::Log2OnePlus { x })
    }

    pub fn sum_all(&mut self, x: Var) -> Var {
        let s = self.val(x).sum();
        self.push(Array2::from_elem((1, 1), s), Op::SumAll { x })
    }

    /// Pulls the adjoint of the scalar `loss` back through the tape.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients> {
        if self.consumed {
            return Err(Error::TapeReused);
        }
        let shape = self.nodes[loss.0].value.dim();
        if shape != (1, 1) {
            return Err(Error::NonScalarLoss {
                rows: shape.0,
                cols: shape.1,
            });
        }
        self.consumed = true;

        let mut adj: Vec<Option<Array2<f64>>> = (0..=loss.0).map(|_| None).collect();
        adj[loss.0] = Some(Array2::ones((1, 1)));
        let mut grads = Gradients::default();

        fn acc(adj: &mut [Option<Array2<f64>>], v: Var, g: Array2<f64>) {
            match &mut adj[v.0] {
                Some(a) => *a += &g,
                slot @ None => *slot = Some(g),
            }
        }

        for i in (0..=loss.0).rev() {
            let Some(g) = adj[i].take() else { continue };
            let gv = g.view();
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf(Some(id)) => match grads.map.get_mut(id) {
                    Some(existing) => *existing += &g,
                    None => {
                        grads.map.insert(*id, g);
                    }
                },
                Op::Leaf(None) => {}
                Op::Affine { x, w, b } => {
                    let (gx, gw, gb) = kernels::affine_backward(gv, self.val(*x), self.val(*w));
                    acc(&mut adj, *x, gx);
                    acc(&mut adj, *w, gw);
                    acc(&mut adj, *b, gb);
                }
                Op::BatchNormTrain { x, gamma, beta, cache } => {
                    let (gx, gg, gb) = kernels::batch_norm_train_backward(gv, cache, self.val(*gamma));
                    acc(&mut adj, *x, gx);
                    acc(&mut adj, *gamma, gg);
                    acc(&mut adj, *beta, gb);
                }
                Op::BatchNormEval { x, gamma, beta, cache } => {
                    let (gx, gg, gb) = kernels::batch_norm_eval_backward(gv, cache, self.val(*gamma));
                    acc(&mut adj, *x, gx);
                    acc(&mut adj, *gamma, gg);
                    acc(&mut adj, *beta, gb);
                }
                Op::Relu { x } => {
                    let gx = kernels::relu_backward(gv, self.val(*x));
                    acc(&mut adj, *x, gx);
                }
                Op::ScaledSoftmax { z, budgets } => {
                    let gz = kernels::scaled_softmax_backward(gv, node.value.view(), budgets);
                    acc(&mut adj, *z, gz);
                }
                Op::SliceCols { x, start, ncols } => {
                    acc(&mut adj, *x, kernels::slice_cols_backward(gv, *ncols, *start));
                }
                Op::Gram { q, h, m } => {
                    acc(&mut adj, *q, kernels::gram_backward(gv, h.view(), *m));
                }
                Op::HpdSolve { a, b, m, factors } => {
                    let (ga, gb) = kernels::hpd_solve_backward(gv, node.value.view(), factors, *m);
                    acc(&mut adj, *a, ga);
                    acc(&mut adj, *b, gb);
                }
                Op::NormalizeBlocks { x, m, norms } => {
                    let gx = kernels::normalize_blocks_backward(gv, node.value.view(), norms, *m);
                    acc(&mut adj, *x, gx);
                }
                Op::ScaleBlocks { d, p, m } => {
                    let (gd, gp) = kernels::scale_blocks_backward(gv, self.val(*d), self.val(*p), *m);
                    acc(&mut adj, *d, gd);
                    acc(&mut adj, *p, gp);
                }
                Op::DblNormalize { u, budgets } => {
                    let gu = kernels::dbl_normalize_backward(gv, self.val(*u), budgets);
                    acc(&mut adj, *u, gu);
                }
                Op::CrossGains { v, h, m } => {
                    let gvv = kernels::cross_gains_backward(gv, self.val(*v), h.view(), *m);
                    acc(&mut adj, *v, gvv);
                }
                Op::SumRate { g: gains, k, sigma2 } => {
                    let gg = kernels::sum_rate_backward(gv, self.val(*gains), *k, *sigma2);
                    acc(&mut adj, *gains, gg);
                }
                Op::MeanRows { x } => {
                    let rows = self.val(*x).nrows();
                    acc(&mut adj, *x, kernels::mean_rows_backward(gv, rows));
                }
                Op::Scale { x, c } => {
                    acc(&mut adj, *x, g.mapv(|v| v * c));
                }
                Op::Norm2Rows { x } => {
                    acc(&mut adj, *x, kernels::norm2_rows_backward(gv, self.val(*x)));
                }
                Op::Log2OnePlus { x } => {
                    acc(&mut adj, *x, kernels::log2_1p_backward(gv, self.val(*x)));
                }
                Op::SumAll { x } => {
                    let dim = self.val(*x).raw_dim();
                    acc(&mut adj, *x, Array2::from_elem(dim, g[[0, 0]]));
                }
            }
        }
        Ok(grads)
    }

    fn guard(&self) -> Result<()> {
        if self.consumed {
            Err(Error::TapeReused)
        } else {
            Ok(())
        }
    }
}

impl<'a> Graph<'a> for Tape<'a> {
    type Value = Var;

    fn param(&mut self, id: ParamId, value: &'a Array2<f64>) -> Var {
        self.push(value.view(), Op::Leaf(Some(id)))
    }

    fn constant(&mut self, value: Array2<f64>) -> Var {
        self.push(value, Op::Leaf(None))
    }

    fn value<'s>(&'s self, v: &'s Var) -> ArrayView2<'s, f64> {
        self.val(*v)
    }

    fn affine(&mut self, x: &Var, w: &Var, b: &Var) -> Result<Var> {
        self.guard()?;
        let y = kernels::affine(self.val(*x), self.val(*w), self.val(*b))?;
        Ok(self.push(y, Op::Affine { x: *x, w: *w, b: *b }))
    }

    fn batch_norm_train(&mut self, x: &Var, gamma: &Var, beta: &Var, eps: f64) -> Result<(Var, BatchStats)> {
        self.guard()?;
        let (y, cache, stats) = kernels::batch_norm_train(self.val(*x), self.val(*gamma), self.val(*beta), eps)?;
        let op = Op::BatchNormTrain {
            x: *x,
            gamma: *gamma,
            beta: *beta,
            cache,
        };
        Ok((self.push(y, op), stats))
    }

    fn batch_norm_eval(
        &mut self,
        x: &Var,
        gamma: &Var,
        beta: &Var,
        running_mean: &Array1<f64>,
        running_var: &Array1<f64>,
        eps: f64,
    ) -> Result<Var> {
        self.guard()?;
        let (y, cache) = kernels::batch_norm_eval(
            self.val(*x),
            self.val(*gamma),
            self.val(*beta),
            running_mean,
            running_var,
            eps,
        )?;
        let op = Op::BatchNormEval {
            x: *x,
            gamma: *gamma,
            beta: *beta,
            cache,
        };
        Ok(self.push(y, op))
    }

    fn relu(&mut self, x: &Var) -> Var {
        let y = kernels::relu(self.val(*x));
        self.push(y, Op::Relu { x: *x })
    }

    fn scaled_softmax(&mut self, z: &Var, budgets: &[f64]) -> Result<Var> {
        self.guard()?;
        let y = kernels::scaled_softmax(self.val(*z), budgets)?;
        let op = Op::ScaledSoftmax {
            z: *z,
            budgets: budgets.to_vec(),
        };
        Ok(self.push(y, op))
    }

    fn slice_cols(&mut self, x: &Var, start: usize, len: usize) -> Result<Var> {
        self.guard()?;
        let xv = self.val(*x);
        let ncols = xv.ncols();
        let y = kernels::slice_cols(xv, start, len)?;
        Ok(self.push(y, Op::SliceCols { x: *x, start, ncols }))
    }

    fn gram(&mut self, q: &Var, h: &Array2<f64>, m: usize, sigma2: f64) -> Result<Var> {
        self.guard()?;
        let a = kernels::gram(self.val(*q), h.view(), m, sigma2)?;
        let op = Op::Gram { q: *q, h: h.clone(), m };
        Ok(self.push(a, op))
    }

    fn hpd_solve(&mut self, a: &Var, b: &Var, m: usize) -> Result<Var> {
        self.guard()?;
        let (x, factors) = kernels::hpd_solve(self.val(*a), self.val(*b), m)?;
        let op = Op::HpdSolve {
            a: *a,
            b: *b,
            m,
            factors,
        };
        Ok(self.push(x, op))
    }

    fn normalize_blocks(&mut self, x: &Var, m: usize) -> Result<Var> {
        self.guard()?;
        let (d, norms) = kernels::normalize_blocks(self.val(*x), m)?;
        Ok(self.push(d, Op::NormalizeBlocks { x: *x, m, norms }))
    }

    fn scale_blocks(&mut self, d: &Var, p: &Var, m: usize) -> Result<Var> {
        self.guard()?;
        let v = kernels::scale_blocks(self.val(*d), self.val(*p), m)?;
        Ok(self.push(v, Op::ScaleBlocks { d: *d, p: *p, m }))
    }

    fn dbl_normalize(&mut self, u: &Var, budgets: &[f64]) -> Result<Var> {
        self.guard()?;
        let v = kernels::dbl_normalize(self.val(*u), budgets)?;
        let op = Op::DblNormalize {
            u: *u,
            budgets: budgets.to_vec(),
        };
        Ok(self.push(v, op))
    }

    fn cross_gains(&mut self, v: &Var, h: &Array2<f64>, m: usize) -> Result<Var> {
        self.guard()?;
        let g = kernels::cross_gains(self.val(*v), h.view(), m)?;
        let op = Op::CrossGains { v: *v, h: h.clone(), m };
        Ok(self.push(g, op))
    }

    fn sum_rate(&mut self, g: &Var, k: usize, sigma2: f64) -> Result<Var> {
        self.guard()?;
        let r = kernels::sum_rate(self.val(*g), k, sigma2)?;
        Ok(self.push(r, Op::SumRate { g: *g, k, sigma2 }))
    }

    fn mean_rows(&mut self, x: &Var) -> Var {
        let y = kernels::mean_rows(self.val(*x));
        self.push(y, Op::MeanRows { x: *x })
    }

    fn scale(&mut self, x: &Var, c: f64) -> Var {
        let y = self.val(*x).mapv(|v| v * c);
        self.push(y, Op::Scale { x: *x, c })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn relu_and_identity_affine_record_plain_values() {
        let mut tape = Tape::new();
        let x = tape.constant(array![[-1.0, 2.0]]);
        let y = tape.relu(&x);
        assert_eq!(tape.value(&y), array![[0.0, 2.0]]);

        let w = tape.constant(Array2::eye(2));
        let b = tape.constant(Array2::zeros((1, 2)));
        let z = tape.affine(&x, &w, &b).unwrap();
        assert_eq!(tape.value(&z), tape.value(&x));
    }

    #[test]
    fn solve_records_its_factorization() {
        let mut tape = Tape::new();
        // 2I as a 2x2 complex matrix in split layout
        let a = tape.constant(array![[2.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0]]);
        let b = tape.constant(array![[1.0, -4.0, 3.0, 0.5]]);
        let x = tape.hpd_solve(&a, &b, 2).unwrap();
        let expected = array![[0.5, -2.0, 1.5, 0.25]];
        let err = (&tape.value(&x) - &expected)
            .mapv(f64::abs)
            .fold(0.0, |a: f64, &b| a.max(b));
        assert!(err <= 1e-15);
        assert_eq!(tape.saved_factors(x).unwrap().len(), 1);
    }

    #[test]
    fn norm2_gradient_is_twice_input() {
        let x0 = array![[1.5, -2.0, 0.25, 3.0]];
        let mut tape = Tape::new();
        let x = tape.param_owned(ParamId(0), x0.clone());
        let n = tape.norm2_rows(x);
        let loss = tape.sum_all(n);
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.get(ParamId(0)).unwrap(), &(x0 * 2.0));
    }

    #[test]
    fn log2_one_plus_derivative_at_one() {
        let mut tape = Tape::new();
        let s = tape.param_owned(ParamId(0), array![[1.0]]);
        let loss = tape.log2_1p(s);
        let g = tape.backward(loss).unwrap();
        let expected = 1.0 / (2.0 * std::f64::consts::LN_2);
        assert!((g.get(ParamId(0)).unwrap()[[0, 0]] - expected).abs() < 1e-15);
        assert!((expected - 0.7213).abs() < 1e-4);
    }

    #[test]
    fn second_backward_is_rejected() {
        let mut tape = Tape::new();
        let s = tape.param_owned(ParamId(0), array![[1.0]]);
        let loss = tape.sum_all(s);
        tape.backward(loss).unwrap();
        assert!(matches!(tape.backward(loss), Err(Error::TapeReused)));
        assert!(matches!(tape.slice_cols(&s, 0, 1), Err(Error::TapeReused)));
    }

    #[test]
    fn non_scalar_loss_is_rejected() {
        let mut tape = Tape::new();
        let s = tape.param_owned(ParamId(0), array![[1.0, 2.0]]);
        assert!(matches!(
            tape.backward(s),
            Err(Error::NonScalarLoss { rows: 1, cols: 2 })
        ));
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let mut tape = Tape::new();
        let x = tape.constant(Array2::zeros((2, 3)));
        let w = tape.constant(Array2::zeros((4, 5)));
        let b = tape.constant(Array2::zeros((1, 4)));
        assert!(matches!(tape.affine(&x, &w, &b), Err(Error::DimensionMismatch { .. })));
    }
}
