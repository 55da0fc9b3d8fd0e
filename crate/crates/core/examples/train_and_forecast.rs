// Train the forecaster on a synthetic corridor, compare it with persistence,
// save a checkpoint and chart one sensor.
//
// cargo run --release --example train_and_forecast

use cltfp::data::{generate_synthetic, SyntheticConfig};
use cltfp::pipeline::{evaluate, train_model, Dataset};
use cltfp::plot::render_forecast_svg;
use cltfp::{Checkpoint, RunConfig};

pub fn run_example() -> cltfp::Result<()> {
    let series = generate_synthetic(&SyntheticConfig {
        locations: 8,
        days: 30,
        steps_per_day: 24,
        seed: 0,
        noise: 0.05,
    })?;
    let mut cfg = RunConfig::desk().with_seed(0);
    cfg.train.max_epochs = 15;
    let data = Dataset::prepare(series, &cfg)?;
    let (model, history) = train_model(&data, &cfg)?;
    for r in &history.epochs {
        println!("epoch {:2}  train {:.4}  val MSE {:.3}", r.epoch, r.train_loss, r.val_mse);
    }

    let ev = evaluate(&model, &data, cfg.mape_floor)?;
    println!("cltfp       MAE {:.3}  MAPE {:.2}%  ACE {:.4}", ev.cltfp.mae, ev.cltfp.mape_pct, ev.cltfp.ace);
    println!(
        "persistence MAE {:.3}  MAPE {:.2}%  ACE {:.4}",
        ev.persistence.mae, ev.persistence.mape_pct, ev.persistence.ace
    );

    let dir = std::env::temp_dir().join("cltfp_train_and_forecast");
    std::fs::create_dir_all(&dir).map_err(|e| cltfp::Error::io(&dir, e))?;
    let ckpt = dir.join("model.json");
    Checkpoint::new(&cfg, &model, data.series.sensor_ids(), &data.stats).save(&ckpt)?;
    let restored = Checkpoint::load(&ckpt)?.model()?;
    assert_eq!(evaluate(&restored, &data, cfg.mape_floor)?, ev);

    let svg = dir.join("S004.svg");
    let loc = 3;
    let predicted: Vec<f64> = (0..ev.predicted.rows()).map(|r| ev.predicted.at(r, loc)).collect();
    let actual: Vec<f64> = (0..ev.actual.rows()).map(|r| ev.actual.at(r, loc)).collect();
    render_forecast_svg(&predicted, &actual, "S004 test period", &svg)?;
    println!("checkpoint {}\nchart {}", ckpt.display(), svg.display());
    Ok(())
}

fn main() {
    run_example().unwrap();
}
