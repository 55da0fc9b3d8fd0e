// MAE, MAPE and ACE on a small prediction set.
//
// cargo run --example metrics

use cltfp::eval::MetricsReport;
use cltfp::Tensor;

pub fn run_example() -> cltfp::Result<()> {
    // Rows are time steps, columns locations.
    let actual = Tensor::from_rows(&[vec![120.0, 80.0, 40.0], vec![100.0, 90.0, 0.5], vec![60.0, 70.0, 30.0]])?;
    let predicted = Tensor::from_rows(&[vec![110.0, 85.0, 42.0], vec![104.0, 85.0, 2.0], vec![66.0, 71.0, 28.0]])?;
    let r = MetricsReport::compute(&predicted, &actual, 1.0)?;
    println!("MAE  {:.3} vehicles", r.mae);
    println!("MAPE {:.3} % (the 0.5 entry is below the floor)", r.mape_pct);
    println!("ACE  {:.4} over {} steps", r.ace, r.n_steps);
    let perfect = MetricsReport::compute(&actual, &actual, 1.0)?;
    println!("self-prediction: MAE {} ACE {}", perfect.mae, perfect.ace);
    Ok(())
}

fn main() {
    run_example().unwrap();
}
