// Lasso by coordinate descent on a planted sparse problem: larger penalties
// keep fewer features, and none survive at lambda_max.
//
// cargo run --example lasso

use cltfp::eval::{lasso_fit, lasso_lambda_max};
use cltfp::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> cltfp::Result<()> {
    let (m, d) = (200, 20);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = Tensor::matrix(m, d, (0..m * d).map(|_| rng.random_range(-1.0..1.0)).collect())?;
    let truth = [3.0, -2.0, 1.5];
    let y: Vec<f64> = (0..m)
        .map(|i| 10.0 + truth.iter().enumerate().map(|(j, w)| w * x.at(i, j)).sum::<f64>() + rng.random_range(-0.1..0.1))
        .collect();
    let y = Tensor::matrix(m, 1, y)?;

    for lambda in [0.0, 0.01, 0.1, 0.5, 1.5] {
        let fit = lasso_fit(&x, &y, lambda)?;
        let w = fit.weights.row(0);
        let kept = w.iter().filter(|v| **v != 0.0).count();
        println!(
            "lambda {lambda:<4}: {kept:2} nonzero, w[0..3] = [{:.3}, {:.3}, {:.3}], intercept {:.3}, KKT {:.1e}",
            w[0], w[1], w[2], fit.intercept[0], fit.kkt_residual
        );
    }

    // At lambda_max every weight is exactly zero and the intercept is the mean.
    let lambda_max = lasso_lambda_max(&x, &y)?;
    let fit = lasso_fit(&x, &y, lambda_max)?;
    assert!(fit.weights.data().iter().all(|w| *w == 0.0));
    println!("lambda_max {lambda_max:.4}: all weights zero, intercept {:.3}", fit.intercept[0]);
    Ok(())
}

fn main() {
    run_example().unwrap();
}
