use unibeam::baselines::{mrt_poweropt, wmmse, zf_directions, zf_waterfilling, MrtConfig, WmmseConfig};
use unibeam::channel::{db_to_linear, draw_channel, per_level_set, stream_rng, streams, ChannelConfig, PowerGrid};
use unibeam::linalg::CVec;
use unibeam::metrics::sum_rate;

fn scaled(dirs: &[CVec], p: &[f64]) -> Vec<CVec> {
    dirs.iter().zip(p).map(|(d, &x)| d.scale(x.sqrt())).collect()
}

#[test]
fn zf_matches_simplex_grid_m4_k4() {
    let mut rng = stream_rng(5, 0);
    for db in [0.0, 10.0, 20.0, 30.0] {
        let p = db_to_linear(db);
        for _ in 0..3 {
            let h = draw_channel(&mut rng, &ChannelConfig::new(4, 4));
            let (d, _) = zf_directions(&h).unwrap();
            let zf = sum_rate(&h, &zf_waterfilling(&h, p).unwrap().v).unwrap();
            let step = p / 100.0;
            let mut best: f64 = 0.0;
            // every rate grows with its own power, so the face sum(p) = P holds the maximum
            for a in 0..=100usize {
                for b in 0..=(100 - a) {
                    for c in 0..=(100 - a - b) {
                        let e = 100 - a - b - c;
                        let alloc = [a, b, c, e].map(|n| n as f64 * step);
                        best = best.max(sum_rate(&h, &scaled(&d, &alloc)).unwrap());
                    }
                }
            }
            assert!((zf - best).abs() <= 1e-3, "{db} dB: zf {zf} grid {best}");
        }
    }
}

#[test]
fn mrt_matches_grid_m2_k2() {
    let mut rng = stream_rng(6, 0);
    for db in [0.0, 15.0, 30.0] {
        let p = db_to_linear(db);
        for _ in 0..10 {
            let h = draw_channel(&mut rng, &ChannelConfig::new(2, 2));
            let d: Vec<CVec> = h.iter().map(|x| x.scale(1.0 / x.norm())).collect();
            let mrt = sum_rate(&h, &mrt_poweropt(&h, p, &MrtConfig::default()).unwrap().v).unwrap();
            let mut best: f64 = 0.0;
            for a in 0..=200usize {
                for b in 0..=(200 - a) {
                    best = best.max(sum_rate(&h, &scaled(&d, &[a as f64 * p / 200.0, b as f64 * p / 200.0])).unwrap());
                }
            }
            assert!((mrt - best).abs() <= 1e-2, "{db} dB: mrt {mrt} grid {best}");
        }
    }
}

#[test]
fn wmmse_average_at_20db_is_near_the_published_level() {
    let samples = per_level_set(
        0,
        streams::TEST,
        &ChannelConfig::new(4, 4),
        &PowerGrid::single(20.0),
        1000,
    );
    let mean = samples
        .iter()
        .map(|s| wmmse(&s.h, s.power, &WmmseConfig::default()).unwrap().sum_rate())
        .sum::<f64>()
        / samples.len() as f64;
    assert!((mean / 9.83 - 1.0).abs() <= 0.05, "{mean}");
}

#[test]
fn wmmse_dominates_zf_and_mrt_on_average() {
    let grid = PowerGrid::new(vec![0.0, 30.0]).unwrap();
    let samples = per_level_set(1, streams::TEST, &ChannelConfig::new(4, 4), &grid, 100);
    for level in samples.chunks(100) {
        let avg = |f: &dyn Fn(&[CVec], f64) -> f64| level.iter().map(|s| f(&s.h, s.power)).sum::<f64>() / 100.0;
        let w = avg(&|h, p| wmmse(h, p, &WmmseConfig::default()).unwrap().sum_rate());
        let z = avg(&|h, p| sum_rate(h, &zf_waterfilling(h, p).unwrap().v).unwrap());
        let m = avg(&|h, p| sum_rate(h, &mrt_poweropt(h, p, &MrtConfig::default()).unwrap().v).unwrap());
        assert!(w >= z && w >= m, "{} dB: wmmse {w} zf {z} mrt {m}", level[0].power_db);
    }
}
