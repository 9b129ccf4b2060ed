//! Fully-connected beamforming network and its three output heads.
//!
//! * [`HeadKind::Dbl`] predicts all `2MK` beam weights and rescales them to the
//!   budget.
//! * [`HeadKind::Fl`] predicts `2K` logits, maps them to downlink powers `p`
//!   and dual uplink powers `q` on the scaled simplex, and recovers the beams
//!   `v_k = sqrt(p_k) (I + sum_j q_j h_j h_j^H)^{-1} h_k / ||.||`.
//! * [`HeadKind::Sfl`] predicts only `p` and reuses it as `q`.

mod heads;
mod io;
mod network;
mod params;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use heads::{head_dbl, head_fl, head_sfl, recover_beams, scaled_softmax};
pub use network::{apply_head, forward_trunk, sum_rate_loss, BatchInput, HeadValues, Inference, Mode};
pub use params::{init_params, HiddenLayer, NetworkParams, TrunkSpec, DEFAULT_HIDDEN_LAYERS, DEFAULT_HIDDEN_WIDTH};

use crate::channel::ChannelSample;
use crate::error::{Error, Result};
use crate::linalg::{norm2, CVec};

/// Batch-normalization epsilon.
pub const BN_EPS: f64 = 1e-5;
/// Running-statistics momentum: `running = m * running + (1 - m) * batch`.
pub const BN_MOMENTUM: f64 = 0.99;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HeadKind {
    Dbl,
    Fl,
    Sfl,
}

impl HeadKind {
    pub const ALL: [HeadKind; 3] = [HeadKind::Dbl, HeadKind::Fl, HeadKind::Sfl];

    /// Width of the output layer for `m` antennas and `k` users.
    pub fn output_dim(self, m: usize, k: usize) -> usize {
        match self {
            HeadKind::Dbl => 2 * m * k,
            HeadKind::Fl => 2 * k,
            HeadKind::Sfl => k,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            HeadKind::Dbl => 0,
            HeadKind::Fl => 1,
            HeadKind::Sfl => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(HeadKind::Dbl),
            1 => Some(HeadKind::Fl),
            2 => Some(HeadKind::Sfl),
            _ => None,
        }
    }
}

impl fmt::Display for HeadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HeadKind::Dbl => "DBL",
            HeadKind::Fl => "FL",
            HeadKind::Sfl => "SFL",
        })
    }
}

impl FromStr for HeadKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dbl" => Ok(HeadKind::Dbl),
            "fl" => Ok(HeadKind::Fl),
            "sfl" => Ok(HeadKind::Sfl),
            _ => Err(Error::InvalidConfig(format!(
                "unknown head {s:?} (expected dbl, fl or sfl)"
            ))),
        }
    }
}

/// Beamforming vectors for every user together with the budget they were
/// scaled to.
#[derive(Clone, Debug, PartialEq)]
pub struct BeamStack {
    pub v: Vec<CVec>,
    pub power: f64,
}

impl BeamStack {
    pub fn new(v: Vec<CVec>, power: f64) -> Self {
        Self { v, power }
    }

    /// Unpacks one row of the split stacked layout.
    pub fn from_row(row: &[f64], m: usize, k: usize, power: f64) -> Self {
        let half = m * k;
        let v = (0..k)
            .map(|u| CVec::from_parts(&row[u * m..(u + 1) * m], &row[half + u * m..half + (u + 1) * m]))
            .collect();
        Self { v, power }
    }

    pub fn total_power(&self) -> f64 {
        self.v.iter().map(norm2).sum()
    }

    /// `|sum_k ||v_k||^2 - P| / P`.
    pub fn power_error(&self) -> f64 {
        (self.total_power() - self.power).abs() / self.power
    }
}

/// Downlink powers `p` and dual uplink powers `q`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualityFeature {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

/// The network input `[re h_1 .. re h_K, im h_1 .. im h_K, P_dB]`.
#[derive(Clone, Debug, PartialEq)]
pub struct InputFeature {
    pub x0: Vec<f64>,
}

impl InputFeature {
    /// Inverse of the channel part of the layout.
    pub fn channel(&self, m: usize, k: usize) -> Vec<CVec> {
        BeamStack::from_row(&self.x0[..2 * m * k], m, k, 0.0).v
    }

    pub fn power_db(&self) -> Option<f64> {
        self.x0.last().copied()
    }
}

/// Writes the stacked channel of `sample` into `out` (length `2MK`).
pub(crate) fn write_channel(sample: &ChannelSample, out: &mut [f64]) {
    let m = sample.num_antennas();
    let half = m * sample.num_users();
    for (u, h) in sample.h.iter().enumerate() {
        out[u * m..(u + 1) * m].copy_from_slice(&h.re);
        out[half + u * m..half + (u + 1) * m].copy_from_slice(&h.im);
    }
}

pub fn build_input(sample: &ChannelSample) -> Result<InputFeature> {
    if !sample.is_finite() || !(sample.power > 0.0) {
        return Err(Error::NonFinite("channel sample".into()));
    }
    let m = sample.num_antennas();
    let k = sample.num_users();
    let mut x0 = vec![0.0; 2 * m * k + 1];
    write_channel(sample, &mut x0);
    x0[2 * m * k] = sample.power_db;
    Ok(InputFeature { x0 })
}
