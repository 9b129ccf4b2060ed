//! Classical beamformers used as reference points.

mod mrt;
mod wmmse;
mod zf;

pub use mrt::{mrt_poweropt, MrtConfig};
pub use wmmse::{wmmse, WmmseConfig, WmmseOutput};
pub use zf::{water_filling, zf_directions, zf_waterfilling};

use crate::error::{Error, Result};
use crate::linalg::CVec;

/// Which beamformer to run; used by the CLI and the benchmarks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Baseline {
    Wmmse,
    ZfWf,
    Mrt,
}

impl Baseline {
    pub const ALL: [Baseline; 3] = [Baseline::Wmmse, Baseline::ZfWf, Baseline::Mrt];

    pub fn name(self) -> &'static str {
        match self {
            Baseline::Wmmse => "wmmse",
            Baseline::ZfWf => "zf",
            Baseline::Mrt => "mrt",
        }
    }
}

fn check_channel(h: &[CVec], power: f64) -> Result<usize> {
    if !(power > 0.0) || !power.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "power budget must be positive, got {power}"
        )));
    }
    let m = h.first().map_or(0, CVec::len);
    if m == 0 || h.iter().any(|hk| hk.len() != m) {
        return Err(Error::InvalidConfig("channel rows must share a positive length".into()));
    }
    if let Some(user) = h.iter().position(|hk| !hk.is_finite()) {
        return Err(Error::NonFinite(format!("channel of user {user}")));
    }
    Ok(m)
}

fn unit_direction(h: &CVec, user: usize) -> Result<CVec> {
    let n = h.norm();
    if !(n > 0.0) {
        return Err(Error::ZeroChannel { user });
    }
    Ok(h.scale(1.0 / n))
}
