// Generate a synthetic corridor, write it as long-format CSV and load it back.
//
// cargo run --example synthetic_corridor

use cltfp::data::{generate_synthetic, load_csv, write_csv, SyntheticConfig};

fn lagged_corr(x: &[f64], y: &[f64], lag: usize) -> f64 {
    let (a, b) = (&x[..x.len() - lag], &y[lag..]);
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(u, v)| (u - ma) * (v - mb)).sum();
    let va: f64 = a.iter().map(|u| (u - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|v| (v - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

pub fn run_example() -> cltfp::Result<()> {
    let cfg = SyntheticConfig {
        locations: 4,
        days: 21,
        steps_per_day: 24,
        seed: 1,
        noise: 0.05,
    };
    let series = generate_synthetic(&cfg)?;
    let dir = std::env::temp_dir().join("cltfp_synthetic_corridor");
    std::fs::create_dir_all(&dir).map_err(|e| cltfp::Error::io(&dir, e))?;
    let path = dir.join("corridor.csv");
    write_csv(&series, &path)?;
    let back = load_csv(&path, None)?;
    assert_eq!(back, series);
    println!("{} sensors x {} steps -> {}", series.locations(), series.steps(), path.display());

    let (up, down) = (series.values().row(0), series.values().row(1));
    for lag in 0..4 {
        println!("corr(S001[t], S002[t+{lag}]) = {:.3}", lagged_corr(up, down, lag));
    }
    Ok(())
}

fn main() {
    run_example().unwrap();
}
