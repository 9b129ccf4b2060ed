use ndarray::Array2;

use super::{Gradients, ParamId, ParamSet};
use crate::error::{Error, Result};

/// Central differences `(f(theta + h e_i) - f(theta - h e_i)) / 2h` for every
/// coordinate of every tensor. `params` is restored before returning.
pub fn finite_diff_grad<P, F>(mut f: F, params: &mut P, step: f64) -> Result<Gradients>
where
    P: ParamSet,
    F: FnMut(&P) -> f64,
{
    if !(step > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let mut grads = Gradients::default();
    for t in 0..params.num_tensors() {
        let shape = params.tensor(t).raw_dim();
        let mut g = Array2::zeros(shape);
        for idx in 0..g.len() {
            let (r, c) = (idx / shape[1], idx % shape[1]);
            let orig = params.tensor(t)[[r, c]];
            params.tensor_mut(t)[[r, c]] = orig + step;
            let plus = f(params);
            params.tensor_mut(t)[[r, c]] = orig - step;
            let minus = f(params);
            params.tensor_mut(t)[[r, c]] = orig;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFinite(format!(
                    "objective at tensor {t}, coordinate ({r}, {c})"
                )));
            }
            g[[r, c]] = (plus - minus) / (2.0 * step);
        }
        grads.insert(ParamId(t), g);
    }
    Ok(grads)
}

/// Coordinate-wise agreement between two gradient sets.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientComparison {
    pub coordinates: usize,
    pub within_tol: usize,
    pub max_rel_err: f64,
}

impl GradientComparison {
    pub fn fraction_within(&self) -> f64 {
        if self.coordinates == 0 {
            1.0
        } else {
            self.within_tol as f64 / self.coordinates as f64
        }
    }
}

/// Relative error `|a - b| / max(|a|, |b|, floor)` per coordinate; tensors
/// missing from `reference` compare against zero.
pub fn compare_gradients(candidate: &Gradients, reference: &Gradients, tol: f64, floor: f64) -> GradientComparison {
    let mut out = GradientComparison {
        coordinates: 0,
        within_tol: 0,
        max_rel_err: 0.0,
    };
    for (id, g) in reference.iter() {
        let zeros;
        let cand = match candidate.get(id) {
            Some(c) => c,
            None => {
                zeros = Array2::zeros(g.raw_dim());
                &zeros
            }
        };
        for (a, b) in cand.iter().zip(g.iter()) {
            let rel = (a - b).abs() / a.abs().max(b.abs()).max(floor);
            out.coordinates += 1;
            if rel <= tol {
                out.within_tol += 1;
            }
            out.max_rel_err = out.max_rel_err.max(rel);
        }
    }
    out
}
