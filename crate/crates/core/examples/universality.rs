//! One model for every budget against models trained at a single budget.

use unibeam::channel::PowerGrid;
use unibeam::experiment::{ablate, Method, TestSet};
use unibeam::model::{HeadKind, TrunkSpec};
use unibeam::trainer::{train, TrainConfig};

fn short(head: HeadKind, fixed: Option<f64>) -> unibeam::Result<Method> {
    let mut cfg = TrainConfig::new(4, 4, head);
    cfg.trunk = TrunkSpec { widths: vec![96; 3] };
    cfg.fixed_p_db = fixed;
    cfg.steps = 300;
    cfg.batch_size = 128;
    cfg.eval_every = 300;
    cfg.val_per_level = 50;
    let label = match fixed {
        Some(db) => format!("fl-fixed{db}"),
        None => "sfl".into(),
    };
    Ok(Method::Model {
        label,
        params: train(&cfg)?.params,
    })
}

fn main() -> unibeam::Result<()> {
    let universal = short(HeadKind::Sfl, None)?;
    let fixed = [0.0, 30.0]
        .into_iter()
        .map(|db| Ok((db, short(HeadKind::Fl, Some(db))?)))
        .collect::<unibeam::Result<Vec<_>>>()?;
    let test = TestSet::generate(0, 4, 4, &PowerGrid::default(), 100)?;
    print!("{}", ablate(universal, fixed, &test, 1)?.to_csv_string());
    Ok(())
}
