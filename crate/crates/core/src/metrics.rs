//! SINR, sum rate and the coupling-matrix diagnostics.

use crate::channel::NOISE_POWER;
use crate::error::{Error, Result};
use crate::linalg::{hdot, norm2, CVec};

#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    pub sinr: Vec<f64>,
    /// `log2(1 + SINR_k)`.
    pub rates: Vec<f64>,
    pub sum_rate: f64,
    pub total_power: f64,
}

fn check_dims(h: &[CVec], v: &[CVec]) -> Result<()> {
    if h.len() != v.len() {
        return Err(Error::DimensionMismatch {
            context: "users in channel vs beams",
            expected: h.len(),
            found: v.len(),
        });
    }
    Ok(())
}

/// `|h_k^H v_j|^2` for all `k, j`, row-major in `k`.
pub fn gain_matrix(h: &[CVec], v: &[CVec]) -> Result<Vec<f64>> {
    check_dims(h, v)?;
    let mut g = Vec::with_capacity(h.len() * v.len());
    for hk in h {
        for vj in v {
            g.push(hdot(hk, vj)?.norm_sqr());
        }
    }
    Ok(g)
}

/// `SINR_k = |h_k^H v_k|^2 / (sum_{j != k} |h_k^H v_j|^2 + sigma^2)`.
pub fn sinr(h: &[CVec], v: &[CVec]) -> Result<Vec<f64>> {
    let k = h.len();
    let g = gain_matrix(h, v)?;
    Ok((0..k)
        .map(|u| {
            let interference: f64 = (0..k).filter(|&j| j != u).map(|j| g[u * k + j]).sum();
            g[u * k + u] / (interference + NOISE_POWER)
        })
        .collect())
}

pub fn sum_rate(h: &[CVec], v: &[CVec]) -> Result<f64> {
    Ok(sinr(h, v)?.iter().map(|s| (1.0 + s).log2()).sum())
}

pub fn rate_report(h: &[CVec], v: &[CVec]) -> Result<RateReport> {
    let sinr = sinr(h, v)?;
    let rates: Vec<f64> = sinr.iter().map(|s| (1.0 + s).log2()).collect();
    Ok(RateReport {
        sum_rate: rates.iter().sum(),
        total_power: v.iter().map(norm2).sum(),
        sinr,
        rates,
    })
}

/// Coupling matrix of the SINR-target power-control system.
#[derive(Clone, Debug, PartialEq)]
pub struct OmegaMatrix {
    pub k: usize,
    /// Row-major `K x K`.
    pub data: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl OmegaMatrix {
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.k + c]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.k)
            .map(|r| (0..self.k).map(|c| self.get(r, c) * x[c]).sum())
            .collect()
    }
}

/// `[Omega]_kk = -|h_k^H d_k|^2 / gamma_k`, `[Omega]_kj = |h_k^H d_j|^2`.
pub fn omega(h: &[CVec], d: &[CVec], gamma: &[f64]) -> Result<OmegaMatrix> {
    let k = h.len();
    if gamma.len() != k {
        return Err(Error::DimensionMismatch {
            context: "omega targets",
            expected: k,
            found: gamma.len(),
        });
    }
    if let Some((i, g)) = gamma.iter().enumerate().find(|(_, g)| !(**g > 0.0)) {
        return Err(Error::InvalidConfig(format!(
            "SINR target gamma[{i}] = {g} must be positive"
        )));
    }
    let mut data = gain_matrix(h, d)?;
    for u in 0..k {
        data[u * k + u] = -data[u * k + u] / gamma[u];
    }
    Ok(OmegaMatrix {
        k,
        data,
        gamma: gamma.to_vec(),
    })
}

/// `max_{k != j} |O_kj - O_jk| / mean_k |O_kk|`.
pub fn omega_symmetry_gap(o: &OmegaMatrix) -> f64 {
    let k = o.k;
    let diag_mean = (0..k).map(|i| o.get(i, i).abs()).sum::<f64>() / k as f64;
    let mut worst: f64 = 0.0;
    for r in 0..k {
        for c in 0..k {
            if r != c {
                worst = worst.max((o.get(r, c) - o.get(c, r)).abs());
            }
        }
    }
    worst / diag_mean
}
