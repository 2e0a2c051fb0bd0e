//! Central-finite-difference verification of tape gradients.

use crate::nn::store::ParameterStore;
use crate::nn::tape::{Tape, ValueId};

/// Compares analytic gradients of a scalar loss against central finite
/// differences for every element of every parameter in the store. Returns
/// the worst relative error, where the comparison denominator is floored at
/// `1e-4` so that near-zero gradient pairs are compared absolutely.
pub fn max_relative_error(
    store: &mut ParameterStore,
    build: impl Fn(&ParameterStore) -> (Tape, ValueId),
    epsilon: f64,
) -> f64 {
    store.zero_grads();
    let (tape, loss) = build(store);
    let grads = tape.backward(loss);
    tape.accumulate_param_grads(&grads, store);

    let names: Vec<String> = store.names().map(|s| s.to_string()).collect();
    let mut worst = 0.0f64;
    for name in &names {
        let len = store.tensor(name).len();
        for i in 0..len {
            let analytic = store.grad(name).data()[i];
            let original = store.tensor(name).data()[i];
            store.tensor_mut(name).data_mut()[i] = original + epsilon;
            let up = {
                let (t, l) = build(store);
                t.scalar(l)
            };
            store.tensor_mut(name).data_mut()[i] = original - epsilon;
            let down = {
                let (t, l) = build(store);
                t.scalar(l)
            };
            store.tensor_mut(name).data_mut()[i] = original;
            let numeric = (up - down) / (2.0 * epsilon);
            let denom = (analytic.abs() + numeric.abs()).max(1e-4);
            worst = worst.max((analytic - numeric).abs() / denom);
        }
    }
    store.zero_grads();
    worst
}
