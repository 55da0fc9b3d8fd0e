// Adamax on a convex quadratic: the first step moves every coordinate by the
// learning rate against the gradient sign.
//
// cargo run --example adamax

use cltfp::nn::DenseLayer;
use cltfp::train::{AdamaxState, TrainConfig};
use cltfp::{Params, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn distance(a: &DenseLayer, b: &DenseLayer) -> f64 {
    a.params()
        .iter()
        .zip(b.params())
        .map(|((_, x), (_, y))| x.sub(y).expect("same layout").map(|v| v * v).data().iter().sum::<f64>())
        .sum()
}

pub fn run_example() -> cltfp::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut theta = DenseLayer::new(&mut rng, 4, 2);
    let mut target = theta.clone();
    target.weights = Tensor::filled(&[2, 4], 0.5);
    target.bias = Tensor::vector(vec![1.0, -1.0]);

    let cfg = TrainConfig {
        learning_rate: 0.05,
        ..TrainConfig::default()
    };
    let mut opt = AdamaxState::new(&theta, &cfg);
    for step in 0..=200 {
        if step % 40 == 0 {
            println!("step {step:3}: |theta - theta*|^2 = {:.6}", distance(&theta, &target));
        }
        let mut grad = theta.clone();
        for ((_, g), ((_, a), (_, b))) in grad.params_mut().into_iter().zip(theta.params().into_iter().zip(target.params())) {
            *g = a.sub(b)?.scale(2.0);
        }
        opt.update(&mut theta, &grad)?;
    }
    Ok(())
}

fn main() {
    run_example().unwrap();
}
