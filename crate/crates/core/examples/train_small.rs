//! A short universal SFL training run; prints the log CSV.
//!
//! `cargo run --example train_small -- [steps]`

use unibeam::model::{HeadKind, TrunkSpec};
use unibeam::trainer::{train_with, TrainConfig};

fn main() -> unibeam::Result<()> {
    let steps = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(600);
    let mut cfg = TrainConfig::new(4, 4, HeadKind::Sfl);
    cfg.trunk = TrunkSpec { widths: vec![128; 3] };
    cfg.steps = steps;
    cfg.batch_size = 128;
    cfg.eval_every = 100;
    cfg.val_per_level = 200;
    let out = train_with(&cfg, |row| eprintln!("step {} loss {:.4}", row.step, row.loss))?;
    print!("{}", out.log.to_csv_string());
    println!("config fingerprint {}", cfg.fingerprint());
    Ok(())
}
