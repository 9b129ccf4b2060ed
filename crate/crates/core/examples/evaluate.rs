//! Sum rate and timing tables for a short-trained model next to the
//! baselines, in the CSV layouts the CLI writes.

use unibeam::baselines::Baseline;
use unibeam::channel::PowerGrid;
use unibeam::experiment::{bench, evaluate, write_bench_csv, Method, TestSet};
use unibeam::model::{HeadKind, TrunkSpec};
use unibeam::trainer::{train, TrainConfig};

fn main() -> unibeam::Result<()> {
    let mut cfg = TrainConfig::new(4, 4, HeadKind::Sfl);
    cfg.trunk = TrunkSpec { widths: vec![128; 3] };
    cfg.steps = 400;
    cfg.batch_size = 128;
    cfg.eval_every = 400;
    cfg.val_per_level = 50;
    let params = train(&cfg)?.params;

    let methods = vec![
        Method::Model {
            label: "sfl".into(),
            params,
        },
        Method::Baseline(Baseline::Wmmse),
        Method::Baseline(Baseline::ZfWf),
        Method::Baseline(Baseline::Mrt),
    ];
    let test = TestSet::generate(0, 4, 4, &PowerGrid::default(), 100)?;
    print!("{}", evaluate(&methods, &test, 2)?.to_csv_string());

    let small = TestSet::generate(0, 4, 4, &PowerGrid::new(vec![0.0, 20.0])?, 30)?;
    let rows = bench(&methods, &small, 3)?;
    write_bench_csv(&rows, std::io::stdout())?;
    Ok(())
}
