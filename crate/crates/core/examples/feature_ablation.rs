// Lasso over every combination of spatial (S), short-term (T) and periodic
// (P) features taken from a trained model.
//
// cargo run --release --example feature_ablation

use cltfp::data::{generate_synthetic, SyntheticConfig};
use cltfp::pipeline::{run_ablation, train_model, Dataset};
use cltfp::RunConfig;

pub fn run_example() -> cltfp::Result<()> {
    let series = generate_synthetic(&SyntheticConfig {
        locations: 8,
        days: 30,
        steps_per_day: 24,
        seed: 1,
        noise: 0.05,
    })?;
    let mut cfg = RunConfig::desk().with_seed(1);
    cfg.train.max_epochs = 15;
    let data = Dataset::prepare(series, &cfg)?;
    let (model, _) = train_model(&data, &cfg)?;
    let blocks = model.blocks();
    println!(
        "feature blocks: S {:?}, T {:?}, P {:?}",
        blocks.spatial,
        blocks.short_term,
        blocks.periodic()
    );

    let report = run_ablation(&model, &data, cfg.lasso_lambda, cfg.mape_floor)?;
    print!("{}", report.to_csv_string());
    Ok(())
}

fn main() {
    run_example().unwrap();
}
