//! The matrix linking downlink powers to achieved SINRs, evaluated on the
//! beams of a briefly trained SFL model.

use unibeam::channel::{streams, ChannelConfig, PowerGrid, SampleStream, NOISE_POWER};
use unibeam::metrics::{omega, omega_symmetry_gap, sinr};
use unibeam::model::{HeadKind, TrunkSpec};
use unibeam::trainer::{train, TrainConfig};

fn main() -> unibeam::Result<()> {
    let mut cfg = TrainConfig::new(4, 4, HeadKind::Sfl);
    cfg.trunk = TrunkSpec { widths: vec![128; 3] };
    cfg.steps = 300;
    cfg.batch_size = 128;
    cfg.eval_every = 300;
    cfg.val_per_level = 50;
    let params = train(&cfg)?.params;

    let samples = SampleStream::new(4, streams::TEST, ChannelConfig::new(4, 4), PowerGrid::single(30.0)).take_vec(200);
    let (mut gap, mut resid): (f64, f64) = (0.0, 0.0);
    for (s, inf) in samples.iter().zip(params.infer(&samples)?) {
        let d = inf.directions.expect("SFL directions");
        let p = inf.duality.expect("SFL powers").p;
        let o = omega(&s.h, &d, &sinr(&s.h, &inf.beams.v)?)?;
        gap += omega_symmetry_gap(&o) / samples.len() as f64;
        for r in o.mul_vec(&p) {
            resid = resid.max((r + NOISE_POWER).abs());
        }
    }
    println!("mean symmetry gap {gap:.4}, max |Omega p + sigma^2| {resid:.2e}");

    let s = &samples[0];
    let inf = &params.infer(std::slice::from_ref(s))?[0];
    let o = omega(&s.h, inf.directions.as_ref().unwrap(), &sinr(&s.h, &inf.beams.v)?)?;
    for i in 0..o.k {
        let row: Vec<String> = (0..o.k).map(|j| format!("{:>10.3e}", o.get(i, j))).collect();
        println!("{}", row.join(" "));
    }
    Ok(())
}
