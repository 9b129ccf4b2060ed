//! WMMSE, zero-forcing with water-filling and power-optimized MRT on one
//! channel draw, across the power grid.

use unibeam::baselines::{mrt_poweropt, wmmse, zf_waterfilling, MrtConfig, WmmseConfig};
use unibeam::channel::{db_to_linear, draw_channel, stream_rng, ChannelConfig, PowerGrid};
use unibeam::metrics::{rate_report, sum_rate};

fn main() -> unibeam::Result<()> {
    let h = draw_channel(&mut stream_rng(3, 0), &ChannelConfig::new(4, 4));
    println!("{:>5} {:>8} {:>8} {:>8} {:>6}", "P_dB", "wmmse", "zf", "mrt", "iters");
    for &db in PowerGrid::default().levels_db() {
        let p = db_to_linear(db);
        let w = wmmse(&h, p, &WmmseConfig::default())?;
        let z = sum_rate(&h, &zf_waterfilling(&h, p)?.v)?;
        let m = sum_rate(&h, &mrt_poweropt(&h, p, &MrtConfig::default())?.v)?;
        println!("{db:>5} {:>8.3} {z:>8.3} {m:>8.3} {:>6}", w.sum_rate(), w.trace.len());
    }

    let w = wmmse(&h, db_to_linear(20.0), &WmmseConfig::default())?;
    let head: Vec<String> = w.trace.iter().take(6).map(|r| format!("{r:.4}")).collect();
    println!(
        "WMMSE trace at 20 dB starts {} (converged: {})",
        head.join(" "),
        w.converged
    );
    let report = rate_report(&h, &w.beams.v)?;
    println!(
        "per-user rates {:.3?}, total power {:.3}",
        report.rates, report.total_power
    );
    Ok(())
}
