use super::check_channel;
use crate::error::{Error, Result};
use crate::linalg::{hdot, CMat, CVec, Cholesky};
use crate::model::BeamStack;

/// Unnormalized columns of `H^H (H H^H)^{-1}`, so `h_k^H w_j = delta_kj`.
fn pseudo_inverse_columns(h: &[CVec]) -> Result<Vec<CVec>> {
    let k = h.len();
    let m = h[0].len();
    if k > m {
        return Err(Error::RankDeficient);
    }
    let mut g = CMat::zeros(k);
    for r in 0..k {
        for c in 0..k {
            g.set(r, c, hdot(&h[r], &h[c])?);
        }
    }
    let chol = Cholesky::new(&g).map_err(|_| Error::RankDeficient)?;
    let mut cols = Vec::with_capacity(k);
    for j in 0..k {
        let mut e = CVec::zeros(k);
        e.re[j] = 1.0;
        let c = chol.solve(&e)?;
        let mut w = CVec::zeros(m);
        for (i, hi) in h.iter().enumerate() {
            let ci = c.get(i);
            for a in 0..m {
                w.re[a] += hi.re[a] * ci.re - hi.im[a] * ci.im;
                w.im[a] += hi.re[a] * ci.im + hi.im[a] * ci.re;
            }
        }
        if !w.is_finite() {
            return Err(Error::RankDeficient);
        }
        cols.push(w);
    }
    Ok(cols)
}

/// Unit-norm zero-forcing directions and their effective gains
/// `|h_k^H d_k|^2`.
pub fn zf_directions(h: &[CVec]) -> Result<(Vec<CVec>, Vec<f64>)> {
    check_channel(h, 1.0)?;
    let cols = pseudo_inverse_columns(h)?;
    let mut dirs = Vec::with_capacity(cols.len());
    let mut gains = Vec::with_capacity(cols.len());
    for (w, hk) in cols.into_iter().zip(h) {
        let n2: f64 = w.re.iter().chain(&w.im).map(|x| x * x).sum();
        // A near-singular H H^H leaves h_k^H w_k far from one.
        if !(n2 > 0.0) || (hdot(hk, &w)? - 1.0).norm() > 1e-6 {
            return Err(Error::RankDeficient);
        }
        dirs.push(w.scale(1.0 / n2.sqrt()));
        gains.push(1.0 / n2);
    }
    Ok((dirs, gains))
}

/// `p_k = max(0, mu - 1/g_k)` with `sum p_k = P`.
pub fn water_filling(gains: &[f64], power: f64) -> Vec<f64> {
    let inv: Vec<f64> = gains.iter().map(|g| 1.0 / g).collect();
    let mut order: Vec<usize> = (0..gains.len()).filter(|&i| inv[i].is_finite()).collect();
    order.sort_by(|&a, &b| inv[a].total_cmp(&inv[b]));
    // Largest active set whose level clears every member's floor.
    let mut level = 0.0;
    let mut acc = 0.0;
    for (n, &i) in order.iter().enumerate() {
        acc += inv[i];
        let candidate = (power + acc) / (n + 1) as f64;
        if candidate <= inv[i] {
            break;
        }
        level = candidate;
    }
    inv.iter().map(|&f| (level - f).max(0.0)).collect()
}

/// Zero-forcing directions with water-filled powers.
pub fn zf_waterfilling(h: &[CVec], power: f64) -> Result<BeamStack> {
    check_channel(h, power)?;
    let (dirs, gains) = zf_directions(h)?;
    let p = water_filling(&gains, power);
    let v = dirs.iter().zip(&p).map(|(d, pk)| d.scale(pk.sqrt())).collect();
    Ok(BeamStack::new(v, power))
}
