// Central-difference gradient checks: one dense layer by hand, then the full
// forecaster loss on the toy configuration.
//
// cargo run --example gradient_check

use cltfp::model::full_loss_grad_check;
use cltfp::nn::{grad_check, DenseLayer};
use cltfp::{ParamSet, Params, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> cltfp::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let layer = DenseLayer::new(&mut rng, 3, 2);
    let x = Tensor::vector(vec![0.3, -1.2, 0.8]);
    let target = Tensor::vector(vec![1.0, -0.5]);

    // Loss = |Wx + b - target|^2; upstream gradient 2 (y - target).
    let y = layer.forward(&x)?;
    let (grads, _) = layer.backward(&x, &y.sub(&target)?.scale(2.0))?;
    let loss = |p: &ParamSet| {
        let mut l = layer.clone();
        l.load_param_set(p)?;
        let r = l.forward(&x)?.sub(&target)?;
        Ok(r.data().iter().map(|v| v * v).sum())
    };
    let report = grad_check(loss, &layer.param_set(), &grads.param_set(), 1e-5)?;
    println!("dense layer: max relative error {:.2e}", report.max_rel_error);

    for seed in 0..3 {
        let report = full_loss_grad_check(seed, 1e-4)?;
        println!(
            "full loss, seed {seed}: max relative error {:.2e} over {} values",
            report.max_rel_error, report.checked
        );
        assert!(report.max_rel_error < 1e-4);
    }
    Ok(())
}

fn main() {
    run_example().unwrap();
}
