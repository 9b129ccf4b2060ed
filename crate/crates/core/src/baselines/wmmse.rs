use num_complex::Complex64;

use super::{check_channel, unit_direction};
use crate::error::{Error, Result};
use crate::linalg::{hdot, norm2, CMat, CVec, Cholesky};
use crate::metrics::sum_rate;
use crate::model::BeamStack;

#[derive(Clone, Debug, PartialEq)]
pub struct WmmseConfig {
    pub max_iters: usize,
    /// Stop once successive sum rates differ by less than this (bps/Hz).
    pub rate_tol: f64,
    /// Relative slack allowed below the budget when bisecting for `mu`.
    pub bisection_tol: f64,
}

impl Default for WmmseConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            rate_tol: 1e-5,
            bisection_tol: 1e-13,
        }
    }
}

impl WmmseConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || !(self.rate_tol > 0.0) || !(self.bisection_tol > 0.0) {
            return Err(Error::InvalidConfig(format!("invalid WMMSE settings {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct WmmseOutput {
    pub beams: BeamStack,
    /// Sum rate of the initial point and after every iteration.
    pub trace: Vec<f64>,
    pub converged: bool,
}

impl WmmseOutput {
    /// Rate of the returned beams, the best entry of the trace.
    pub fn sum_rate(&self) -> f64 {
        self.trace.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `mu I + sum_j c_j h_j h_j^H`, not necessarily definite when `mu = 0`.
fn weighted_covariance(h: &[CVec], c: &[f64], mu: f64) -> CMat {
    let mut a = CMat::scaled_identity(h[0].len(), mu);
    for (hj, &cj) in h.iter().zip(c) {
        a.add_rank_one(cj, hj);
    }
    a
}

struct BeamUpdate<'a> {
    h: &'a [CVec],
    /// `w_k |a_k|^2`.
    weights: Vec<f64>,
    /// `w_k a_k`.
    scales: Vec<Complex64>,
}

impl BeamUpdate<'_> {
    /// Beams for a given `mu`, or `None` if the system is singular.
    fn beams(&self, mu: f64) -> Option<Vec<CVec>> {
        let chol = Cholesky::new(&weighted_covariance(self.h, &self.weights, mu)).ok()?;
        let mut v = Vec::with_capacity(self.h.len());
        for (hk, &s) in self.h.iter().zip(&self.scales) {
            let x = chol.solve(hk).ok()?;
            if !x.is_finite() {
                return None;
            }
            v.push(x.scale_complex(s));
        }
        Some(v)
    }

    fn solve(&self, power: f64, tol: f64) -> Vec<CVec> {
        let total = |v: &[CVec]| v.iter().map(norm2).sum::<f64>();
        if let Some(v) = self.beams(0.0) {
            if total(&v) <= power {
                return v;
            }
        }
        // ||v_k(mu)|| <= |w_k a_k| ||h_k|| / mu bounds the power from above.
        let bound: f64 = self
            .h
            .iter()
            .zip(&self.scales)
            .map(|(hk, s)| s.norm_sqr() * norm2(hk))
            .sum();
        let mut hi = (bound / power).sqrt();
        let mut lo = 0.0;
        let mut best = self.beams(hi).expect("mu > 0 makes the system definite");
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            match self.beams(mid) {
                Some(v) if total(&v) <= power => {
                    hi = mid;
                    best = v;
                    if power - total(&best) <= tol * power {
                        break;
                    }
                }
                _ => lo = mid,
            }
        }
        best
    }
}

/// Weighted MMSE block-coordinate ascent on the sum rate, started from
/// equal-power matched filtering. On hitting `max_iters` the best iterate
/// is returned with `converged == false`.
pub fn wmmse(h: &[CVec], power: f64, cfg: &WmmseConfig) -> Result<WmmseOutput> {
    check_channel(h, power)?;
    cfg.validate()?;
    let k = h.len();
    let mut v = h
        .iter()
        .enumerate()
        .map(|(u, hk)| Ok(unit_direction(hk, u)?.scale((power / k as f64).sqrt())))
        .collect::<Result<Vec<_>>>()?;
    let mut trace = vec![sum_rate(h, &v)?];
    let mut best = (trace[0], v.clone());
    let mut converged = false;
    for _ in 0..cfg.max_iters {
        let mut weights = Vec::with_capacity(k);
        let mut scales = Vec::with_capacity(k);
        for hk in h {
            let mut t = 1.0;
            for vj in &v {
                t += hdot(hk, vj)?.norm_sqr();
            }
            let signal = hdot(hk, &v[scales.len()])?;
            let a = signal / t;
            // 1 - conj(a) h^H v is real: the MMSE at the optimal receiver
            let e = 1.0 - (a.conj() * signal).re;
            let w = 1.0 / e;
            weights.push(w * a.norm_sqr());
            scales.push(a * w);
        }
        v = BeamUpdate { h, weights, scales }.solve(power, cfg.bisection_tol);
        let rate = sum_rate(h, &v)?;
        let prev = *trace.last().expect("non-empty");
        trace.push(rate);
        if rate > best.0 {
            best = (rate, v.clone());
        }
        if (rate - prev).abs() < cfg.rate_tol {
            converged = true;
            break;
        }
    }
    Ok(WmmseOutput {
        beams: BeamStack::new(best.1, power),
        trace,
        converged,
    })
}
