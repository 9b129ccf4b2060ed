//! Single-sample entry points to the output activations.
//!
//! These run the batched kernels on a one-row batch, so they agree exactly
//! with what the network computes during training and inference.

use ndarray::Array2;

use super::network::{apply_head, duality_recovery};
use super::{write_channel, BeamStack, HeadKind};
use crate::autodiff::kernels::softmax_in_place;
use crate::autodiff::{Eager, Graph};
use crate::channel::ChannelSample;
use crate::error::{Error, Result};
use crate::linalg::CVec;

/// `P * softmax(z)`, shifted by `max(z)` before exponentiating.
pub fn scaled_softmax(z: &[f64], power: f64) -> Vec<f64> {
    let mut out = z.to_vec();
    softmax_in_place(&mut out, power);
    out
}

fn channel_row(h: &[CVec]) -> Result<(Array2<f64>, usize)> {
    let m = h.first().map_or(0, CVec::len);
    if m == 0 || h.iter().any(|hk| hk.len() != m) {
        return Err(Error::InvalidConfig("channel rows must share a positive length".into()));
    }
    let sample = ChannelSample {
        h: h.to_vec(),
        power_db: 0.0,
        power: 1.0,
    };
    let mut row = Array2::zeros((1, 2 * m * h.len()));
    write_channel(&sample, row.as_slice_mut().expect("owned"));
    Ok((row, m))
}

fn run_head(head: HeadKind, u: &[f64], h: &[CVec], power: f64) -> Result<BeamStack> {
    let (hrow, m) = channel_row(h)?;
    let mut g = Eager;
    let uv = g.constant(Array2::from_shape_vec((1, u.len()), u.to_vec()).expect("row vector"));
    let out = apply_head(&mut g, head, &uv, &hrow, &[power], m)?;
    Ok(BeamStack::from_row(out.v.as_slice().expect("owned"), m, h.len(), power))
}

/// `v_k = sqrt(P / sum_j ||u_j||^2) u_k`; `u` in the split stacked layout.
pub fn head_dbl(u: &[f64], m: usize, k: usize, power: f64) -> Result<BeamStack> {
    if u.len() != 2 * m * k {
        return Err(Error::DimensionMismatch {
            context: "DBL head input",
            expected: 2 * m * k,
            found: u.len(),
        });
    }
    let placeholder = vec![CVec::zeros(m); k];
    run_head(HeadKind::Dbl, u, &placeholder, power)
}

/// Two softmax maps (`p` from `u[..K]`, `q` from `u[K..]`) then duality
/// beam recovery.
pub fn head_fl(u: &[f64], h: &[CVec], power: f64) -> Result<BeamStack> {
    run_head(HeadKind::Fl, u, h, power)
}

/// Like [`head_fl`] with `q = p`.
pub fn head_sfl(u: &[f64], h: &[CVec], power: f64) -> Result<BeamStack> {
    run_head(HeadKind::Sfl, u, h, power)
}

/// Beam recovery from explicit downlink powers `p` and dual powers `q`.
/// Returns the beams and the unit-norm directions.
pub fn recover_beams(h: &[CVec], p: &[f64], q: &[f64]) -> Result<(BeamStack, Vec<CVec>)> {
    let (hrow, m) = channel_row(h)?;
    let k = h.len();
    for (name, v) in [("p", p), ("q", q)] {
        if v.len() != k {
            return Err(Error::DimensionMismatch {
                context: if name == "p" { "downlink powers" } else { "dual powers" },
                expected: k,
                found: v.len(),
            });
        }
    }
    let mut g = Eager;
    let pv = g.constant(Array2::from_shape_vec((1, k), p.to_vec()).expect("row"));
    let qv = g.constant(Array2::from_shape_vec((1, k), q.to_vec()).expect("row"));
    let out = duality_recovery(&mut g, pv, qv, &hrow, m)?;
    let power = p.iter().sum();
    let beams = BeamStack::from_row(out.v.as_slice().expect("owned"), m, k, power);
    let dirs = BeamStack::from_row(out.d.expect("duality head").as_slice().expect("owned"), m, k, 0.0).v;
    Ok((beams, dirs))
}
