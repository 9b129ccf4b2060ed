//! Backpropagated gradients of the batch loss against central differences.

use unibeam::autodiff::{compare_gradients, finite_diff_grad};
use unibeam::channel::{streams, ChannelConfig, PowerGrid, SampleStream};
use unibeam::model::{init_params, BatchInput, HeadKind, Mode, NetworkParams, TrunkSpec};
use unibeam::trainer::{loss_gradient, loss_value, relu_margin};

fn main() -> unibeam::Result<()> {
    let trunk = TrunkSpec { widths: vec![24, 24] };
    for head in HeadKind::ALL {
        let mut params = init_params(3, 3, head, &trunk, true, 11);
        let samples = SampleStream::new(11, streams::TRAIN, ChannelConfig::new(3, 3), PowerGrid::default()).take_vec(4);
        let batch = BatchInput::new(&samples, true)?;
        let (loss, analytic) = loss_gradient(&params, &batch, Mode::Train)?;
        let numeric = finite_diff_grad(
            |p: &NetworkParams| loss_value(p, &batch, Mode::Train).unwrap(),
            &mut params,
            1e-6,
        )?;
        let cmp = compare_gradients(&analytic, &numeric, 1e-4, 1e-4);
        println!(
            "{head:>3}: loss {loss:.5}, {} coordinates, {:.3}% within 1e-4, max rel err {:.2e}, relu margin {:.1e}",
            cmp.coordinates,
            100.0 * cmp.fraction_within(),
            cmp.max_rel_err,
            relu_margin(&params, &batch)?
        );
    }
    Ok(())
}
