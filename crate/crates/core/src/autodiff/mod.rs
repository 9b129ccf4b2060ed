//! Reverse-mode differentiation over batched real tensors.
//!
//! The model is written once against the [`Graph`] trait. [`Eager`] runs it
//! directly for inference; [`Tape`] runs the very same kernels and records
//! every application so [`Tape::backward`] can pull the loss adjoint back to
//! the registered parameters.

mod fd;
pub mod kernels;
mod tape;

use ndarray::{Array1, Array2, ArrayView2, CowArray, Ix2};

pub use fd::{compare_gradients, finite_diff_grad, GradientComparison};
pub use kernels::BatchStats;
pub use tape::{Gradients, Tape, Var};

use crate::error::Result;

/// Index of a trainable tensor inside a [`ParamSet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub usize);

/// An ordered collection of trainable tensors.
pub trait ParamSet {
    fn num_tensors(&self) -> usize;
    fn tensor(&self, i: usize) -> &Array2<f64>;
    fn tensor_mut(&mut self, i: usize) -> &mut Array2<f64>;
}

impl ParamSet for Vec<Array2<f64>> {
    fn num_tensors(&self) -> usize {
        self.len()
    }
    fn tensor(&self, i: usize) -> &Array2<f64> {
        &self[i]
    }
    fn tensor_mut(&mut self, i: usize) -> &mut Array2<f64> {
        &mut self[i]
    }
}

/// The primitive set available to model code.
///
/// Constants that never need an adjoint (channels, power budgets, running
/// statistics) are passed as plain arrays.
pub trait Graph<'a> {
    type Value: Clone;

    fn param(&mut self, id: ParamId, value: &'a Array2<f64>) -> Self::Value;
    fn constant(&mut self, value: Array2<f64>) -> Self::Value;
    fn value<'s>(&'s self, v: &'s Self::Value) -> ArrayView2<'s, f64>;

    /// `x W^T + b`.
    fn affine(&mut self, x: &Self::Value, w: &Self::Value, b: &Self::Value) -> Result<Self::Value>;
    fn batch_norm_train(
        &mut self,
        x: &Self::Value,
        gamma: &Self::Value,
        beta: &Self::Value,
        eps: f64,
    ) -> Result<(Self::Value, BatchStats)>;
    #[allow(clippy::too_many_arguments)]
    fn batch_norm_eval(
        &mut self,
        x: &Self::Value,
        gamma: &Self::Value,
        beta: &Self::Value,
        running_mean: &Array1<f64>,
        running_var: &Array1<f64>,
        eps: f64,
    ) -> Result<Self::Value>;
    fn relu(&mut self, x: &Self::Value) -> Self::Value;
    fn scaled_softmax(&mut self, z: &Self::Value, budgets: &[f64]) -> Result<Self::Value>;
    fn slice_cols(&mut self, x: &Self::Value, start: usize, len: usize) -> Result<Self::Value>;
    /// Complex rank-one sum `sigma2 I + sum_j q_j h_j h_j^H`.
    fn gram(&mut self, q: &Self::Value, h: &Array2<f64>, m: usize, sigma2: f64) -> Result<Self::Value>;
    fn hpd_solve(&mut self, a: &Self::Value, b: &Self::Value, m: usize) -> Result<Self::Value>;
    fn normalize_blocks(&mut self, x: &Self::Value, m: usize) -> Result<Self::Value>;
    fn scale_blocks(&mut self, d: &Self::Value, p: &Self::Value, m: usize) -> Result<Self::Value>;
    fn dbl_normalize(&mut self, u: &Self::Value, budgets: &[f64]) -> Result<Self::Value>;
    fn cross_gains(&mut self, v: &Self::Value, h: &Array2<f64>, m: usize) -> Result<Self::Value>;
    fn sum_rate(&mut self, g: &Self::Value, k: usize, sigma2: f64) -> Result<Self::Value>;
    fn mean_rows(&mut self, x: &Self::Value) -> Self::Value;
    fn scale(&mut self, x: &Self::Value, c: f64) -> Self::Value;
}

/// Untaped executor. Parameters are borrowed, never copied.
#[derive(Debug, Default)]
pub struct Eager;

pub type EagerValue<'a> = CowArray<'a, f64, Ix2>;

impl<'a> Graph<'a> for Eager {
    type Value = EagerValue<'a>;

    fn param(&mut self, _id: ParamId, value: &'a Array2<f64>) -> Self::Value {
        CowArray::from(value.view())
    }
    fn constant(&mut self, value: Array2<f64>) -> Self::Value {
        CowArray::from(value)
    }
    fn value<'s>(&'s self, v: &'s Self::Value) -> ArrayView2<'s, f64> {
        v.view()
    }
    fn affine(&mut self, x: &Self::Value, w: &Self::Value, b: &Self::Value) -> Result<Self::Value> {
        Ok(kernels::affine(x.view(), w.view(), b.view())?.into())
    }
    fn batch_norm_train(
        &mut self,
        x: &Self::Value,
        gamma: &Self::Value,
        beta: &Self::Value,
        eps: f64,
    ) -> Result<(Self::Value, BatchStats)> {
        let (y, _, stats) = kernels::batch_norm_train(x.view(), gamma.view(), beta.view(), eps)?;
        Ok((y.into(), stats))
    }
    fn batch_norm_eval(
        &mut self,
        x: &Self::Value,
        gamma: &Self::Value,
        beta: &Self::Value,
        running_mean: &Array1<f64>,
        running_var: &Array1<f64>,
        eps: f64,
    ) -> Result<Self::Value> {
        let (y, _) = kernels::batch_norm_eval(x.view(), gamma.view(), beta.view(), running_mean, running_var, eps)?;
        Ok(y.into())
    }
    fn relu(&mut self, x: &Self::Value) -> Self::Value {
        kernels::relu(x.view()).into()
    }
    fn scaled_softmax(&mut self, z: &Self::Value, budgets: &[f64]) -> Result<Self::Value> {
        Ok(kernels::scaled_softmax(z.view(), budgets)?.into())
    }
    fn slice_cols(&mut self, x: &Self::Value, start: usize, len: usize) -> Result<Self::Value> {
        Ok(kernels::slice_cols(x.view(), start, len)?.into())
    }
    fn gram(&mut self, q: &Self::Value, h: &Array2<f64>, m: usize, sigma2: f64) -> Result<Self::Value> {
        Ok(kernels::gram(q.view(), h.view(), m, sigma2)?.into())
    }
    fn hpd_solve(&mut self, a: &Self::Value, b: &Self::Value, m: usize) -> Result<Self::Value> {
        Ok(kernels::hpd_solve(a.view(), b.view(), m)?.0.into())
    }
    fn normalize_blocks(&mut self, x: &Self::Value, m: usize) -> Result<Self::Value> {
        Ok(kernels::normalize_blocks(x.view(), m)?.0.into())
    }
    fn scale_blocks(&mut self, d: &Self::Value, p: &Self::Value, m: usize) -> Result<Self::Value> {
        Ok(kernels::scale_blocks(d.view(), p.view(), m)?.into())
    }
    fn dbl_normalize(&mut self, u: &Self::Value, budgets: &[f64]) -> Result<Self::Value> {
        Ok(kernels::dbl_normalize(u.view(), budgets)?.into())
    }
    fn cross_gains(&mut self, v: &Self::Value, h: &Array2<f64>, m: usize) -> Result<Self::Value> {
        Ok(kernels::cross_gains(v.view(), h.view(), m)?.into())
    }
    fn sum_rate(&mut self, g: &Self::Value, k: usize, sigma2: f64) -> Result<Self::Value> {
        Ok(kernels::sum_rate(g.view(), k, sigma2)?.into())
    }
    fn mean_rows(&mut self, x: &Self::Value) -> Self::Value {
        kernels::mean_rows(x.view()).into()
    }
    fn scale(&mut self, x: &Self::Value, c: f64) -> Self::Value {
        x.mapv(|v| v * c).into()
    }
}
