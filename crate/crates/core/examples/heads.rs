//! The three output heads on a freshly initialized network: every one of
//! them spends exactly the power budget.

use unibeam::channel::{streams, ChannelConfig, PowerGrid, SampleStream};
use unibeam::metrics::sum_rate;
use unibeam::model::{init_params, HeadKind, TrunkSpec};

fn main() -> unibeam::Result<()> {
    let samples = SampleStream::new(1, streams::TEST, ChannelConfig::new(4, 4), PowerGrid::default()).take_vec(500);
    for head in HeadKind::ALL {
        let params = init_params(4, 4, head, &TrunkSpec::default(), true, 5);
        let out = params.infer(&samples)?;
        let worst = out.iter().map(|o| o.beams.power_error()).fold(0.0, f64::max);
        let mean = samples
            .iter()
            .zip(&out)
            .map(|(s, o)| sum_rate(&s.h, &o.beams.v).unwrap())
            .sum::<f64>()
            / 500.0;
        println!(
            "{head:>3}: input {} -> {} hidden x{} -> output {}; {} trainable; untrained sum rate {mean:.3}; worst power error {worst:.1e}",
            params.input_dim(),
            params.widths()[0],
            params.widths().len(),
            params.output_dim(),
            params.num_trainable()
        );
    }

    let params = init_params(4, 4, HeadKind::Sfl, &TrunkSpec::default(), true, 5);
    let first = &params.infer(&samples[..1])?[0];
    let dual = first.duality.as_ref().expect("SFL exposes dual powers");
    println!(
        "SFL sample 0 at {} dB: downlink p {:.3?}, uplink q {:.3?}",
        samples[0].power_db, dual.p, dual.q
    );
    Ok(())
}
