//! Draws channels from the cell model and round-trips them through the
//! dataset file format.

use unibeam::channel::{path_loss, per_level_set, streams, ChannelConfig, Dataset, PowerGrid, SampleStream};

fn main() -> unibeam::Result<()> {
    let cfg = ChannelConfig::new(4, 4);
    let grid = PowerGrid::default();
    println!(
        "path loss at 1 m: {:.4}, at 100 m: {:.2e}",
        path_loss(1.0, &cfg),
        path_loss(100.0, &cfg)
    );

    let samples = SampleStream::new(7, streams::TRAIN, cfg.clone(), grid.clone()).take_vec(10_000);
    let gains: Vec<f64> = samples
        .iter()
        .flat_map(|s| s.h.iter().map(|h| h.norm().powi(2)))
        .collect();
    let mean = gains.iter().sum::<f64>() / gains.len() as f64;
    let max = gains.iter().cloned().fold(0.0, f64::max);
    println!("per-user channel gain ||h||^2: mean {mean:.3e}, max {max:.3}");

    let mut counts = vec![0usize; grid.len()];
    for s in &samples {
        counts[grid.levels_db().iter().position(|&d| d == s.power_db).unwrap()] += 1;
    }
    println!("budgets drawn per level: {counts:?}");

    let test = per_level_set(7, streams::TEST, &cfg, &grid, 3);
    let ds = Dataset::new(grid, test)?;
    let mut buf = Vec::new();
    ds.write_to(&mut buf)?;
    let back = Dataset::read_from(buf.as_slice())?;
    println!(
        "dataset of {} records, {} bytes, exact round trip: {}",
        ds.samples.len(),
        buf.len(),
        back == ds
    );
    println!("{}", String::from_utf8_lossy(&buf).lines().next().unwrap_or_default());
    Ok(())
}
