use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::{check_channel, unit_direction};
use crate::channel::{stream_rng, NOISE_POWER};
use crate::error::{Error, Result};
use crate::linalg::CVec;
use crate::metrics::gain_matrix;
use crate::model::BeamStack;

#[derive(Clone, Debug, PartialEq)]
pub struct MrtConfig {
    /// Starting points: equal power, then random points of the simplex.
    pub restarts: usize,
    pub iters: usize,
    pub seed: u64,
}

impl Default for MrtConfig {
    fn default() -> Self {
        Self {
            restarts: 5,
            iters: 200,
            seed: 0,
        }
    }
}

struct Objective {
    k: usize,
    /// `|h_k^H d_j|^2`, row-major in `k`.
    g: Vec<f64>,
}

impl Objective {
    fn value(&self, p: &[f64]) -> f64 {
        (0..self.k)
            .map(|u| {
                let row = &self.g[u * self.k..(u + 1) * self.k];
                let total: f64 = row.iter().zip(p).map(|(g, p)| g * p).sum::<f64>() + NOISE_POWER;
                (total / (total - row[u] * p[u])).log2()
            })
            .sum()
    }

    fn gradient(&self, p: &[f64]) -> Vec<f64> {
        let k = self.k;
        let mut grad = vec![0.0; k];
        for u in 0..k {
            let row = &self.g[u * k..(u + 1) * k];
            let total: f64 = row.iter().zip(p).map(|(g, p)| g * p).sum::<f64>() + NOISE_POWER;
            let interf = total - row[u] * p[u];
            for j in 0..k {
                grad[j] += row[j] / total;
                if j != u {
                    grad[j] -= row[j] / interf;
                }
            }
        }
        grad.iter().map(|g| g / std::f64::consts::LN_2).collect()
    }
}

/// Euclidean projection onto `{p >= 0, sum p <= P}`.
fn project(x: &[f64], power: f64) -> Vec<f64> {
    let clipped: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= power {
        return clipped;
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (i, s) in sorted.iter().enumerate() {
        acc += s;
        let t = (acc - power) / (i + 1) as f64;
        if s - t > 0.0 {
            theta = t;
        }
    }
    x.iter().map(|v| (v - theta).max(0.0)).collect()
}

fn ascend(obj: &Objective, mut p: Vec<f64>, power: f64, iters: usize) -> (f64, Vec<f64>) {
    let mut f = obj.value(&p);
    // Step length in power units; grows by 2x after each accepted step.
    let mut step = power;
    for _ in 0..iters {
        let grad = obj.gradient(&p);
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm == 0.0 {
            break;
        }
        let mut t = step * 2.0 / gnorm;
        let mut moved = false;
        for _ in 0..60 {
            let cand = project(&p.iter().zip(&grad).map(|(x, g)| x + t * g).collect::<Vec<_>>(), power);
            let fc = obj.value(&cand);
            let ascent: f64 = grad
                .iter()
                .zip(cand.iter().zip(&p))
                .map(|(g, (c, x))| g * (c - x))
                .sum();
            if fc >= f + 0.5 * ascent {
                moved = fc > f;
                p = cand;
                f = fc;
                step = t * gnorm;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    (f, p)
}

/// Matched-filter directions with a power split chosen by multi-start
/// projected gradient ascent on `{p >= 0, sum p <= P}`.
pub fn mrt_poweropt(h: &[CVec], power: f64, cfg: &MrtConfig) -> Result<BeamStack> {
    check_channel(h, power)?;
    if cfg.restarts == 0 || cfg.iters == 0 {
        return Err(Error::InvalidConfig(format!("invalid MRT settings {cfg:?}")));
    }
    let k = h.len();
    let d = h
        .iter()
        .enumerate()
        .map(|(u, hk)| unit_direction(hk, u))
        .collect::<Result<Vec<_>>>()?;
    let obj = Objective {
        k,
        g: gain_matrix(h, &d)?,
    };
    let mut rng = stream_rng(cfg.seed, 0);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for r in 0..cfg.restarts {
        let start = if r == 0 {
            vec![power / k as f64; k]
        } else {
            let e: Vec<f64> = (0..k).map(|_| Exp1.sample(&mut rng)).collect();
            let s: f64 = e.iter().sum();
            let scale = power * rng.random_range(0.5..=1.0) / s;
            e.iter().map(|x| x * scale).collect()
        };
        let (f, p) = ascend(&obj, start, power, cfg.iters);
        if best.as_ref().is_none_or(|(bf, _)| f > *bf) {
            best = Some((f, p));
        }
    }
    let (_, p) = best.expect("at least one restart");
    let v = d.iter().zip(&p).map(|(dk, pk)| dk.scale(pk.sqrt())).collect();
    Ok(BeamStack::new(v, power))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::water_filling;
    use crate::channel::{draw_channel, ChannelConfig};
    use crate::linalg::norm2;
    use crate::metrics::sum_rate;

    #[test]
    fn projection_cases() {
        assert_eq!(project(&[0.5, -1.0], 2.0), vec![0.5, 0.0]);
        assert_eq!(project(&[3.0, 1.0], 2.0), vec![2.0, 0.0]);
        let p = project(&[1.0, 1.0, 1.0], 1.5);
        assert!(p.iter().all(|x| (x - 0.5).abs() < 1e-15));
    }

    #[test]
    fn single_user_uses_full_power() {
        let mut rng = stream_rng(31, 0);
        let h = draw_channel(&mut rng, &ChannelConfig::new(4, 1));
        let v = mrt_poweropt(&h, 3.0, &MrtConfig::default()).unwrap();
        assert!((v.total_power() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn orthogonal_channels_water_fill() {
        let mut h = vec![CVec::zeros(2), CVec::zeros(2)];
        h[0].re[0] = 1.0;
        h[1].im[1] = 2.0;
        let v = mrt_poweropt(&h, 3.0, &MrtConfig::default()).unwrap();
        let wf = water_filling(&[1.0, 4.0], 3.0);
        for (vk, pk) in v.v.iter().zip(&wf) {
            assert!((norm2(vk) - pk).abs() < 1e-6, "{} vs {pk}", norm2(vk));
        }
    }

    #[test]
    fn two_users_match_grid_search() {
        let mut rng = stream_rng(32, 0);
        let cfg = ChannelConfig::new(2, 2);
        for p in [1.0, 100.0, 1000.0] {
            for _ in 0..10 {
                let h = draw_channel(&mut rng, &cfg);
                let v = mrt_poweropt(&h, p, &MrtConfig::default()).unwrap();
                let got = sum_rate(&h, &v.v).unwrap();
                let d: Vec<CVec> = h.iter().map(|x| x.scale(1.0 / x.norm())).collect();
                let mut grid_best: f64 = 0.0;
                for a in 0..=200 {
                    for b in 0..=(200 - a) {
                        let (pa, pb) = (p * a as f64 / 200.0, p * b as f64 / 200.0);
                        let beams = [d[0].scale(pa.sqrt()), d[1].scale(pb.sqrt())];
                        grid_best = grid_best.max(sum_rate(&h, &beams).unwrap());
                    }
                }
                assert!(got >= grid_best - 1e-2, "{got} vs grid {grid_best}");
            }
        }
    }
}
