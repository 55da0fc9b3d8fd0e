// Cut recent / daily / weekly windows, split chronologically and z-score.
//
// cargo run --example sliding_windows

use cltfp::data::{generate_synthetic, make_windows, split_indices, NormStats, SyntheticConfig, WindowConfig};

pub fn run_example() -> cltfp::Result<()> {
    let series = generate_synthetic(&SyntheticConfig {
        locations: 3,
        days: 20,
        steps_per_day: 24,
        seed: 2,
        noise: 0.05,
    })?;
    let window = WindowConfig::default();
    let samples = make_windows(&series, &window)?;
    let first = &samples[0];
    println!("first target t = {} (7 days + {} steps)", first.t, window.weekly_half);
    println!(
        "S {:?}, daily {:?}, weekly {:?}, target {:?}",
        first.recent.shape(),
        first.daily.shape(),
        first.weekly.shape(),
        first.target.shape()
    );

    let split = split_indices(samples.len(), 0.8, 0.1, 0)?;
    println!("train {} / val {} / test {}", split.train.len(), split.val.len(), split.test.len());
    let stats = NormStats::fit(&series, samples[split.test[0]].t)?;
    let z = stats.normalize_sample(first)?;
    println!("location means {:?}", stats.mean.iter().map(|m| format!("{m:.1}")).collect::<Vec<_>>());
    println!("normalized target {:?}", z.target.data());
    Ok(())
}

fn main() {
    run_example().unwrap();
}
