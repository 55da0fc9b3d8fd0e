//! `cltfp` subcommands. Exit codes: 0 success, 1 data or validation error,
//! 2 usage error.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::data::{generate_synthetic, load_csv, parse_timestamp, write_csv, SyntheticConfig};
use crate::error::{Error, Result};
use crate::model::full_loss_grad_check;
use crate::pipeline::{evaluate, run_ablation, train_model, Dataset};
use crate::plot::render_forecast_svg;

#[derive(Debug, Parser)]
#[command(name = "cltfp", version, about = "Convolutional-LSTM traffic flow forecasting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic corridor series as `timestamp,sensor_id,flow`.
    GenData(GenData),
    /// Train a model and save a checkpoint.
    Train(Train),
    /// Score a checkpoint and the persistence baseline on the test split.
    Evaluate(Evaluate),
    /// Lasso ablation over the checkpoint's branch features.
    Ablate(Ablate),
    /// Finite-difference check of the full loss on a toy model.
    GradCheck(GradCheck),
    /// SVG chart of predicted against actual flow at one location.
    Plot(Plot),
}

#[derive(Debug, Args)]
struct GenData {
    #[arg(long)]
    p: usize,
    #[arg(long)]
    days: usize,
    #[arg(long, default_value_t = 288)]
    steps_per_day: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Long-format flow CSV.
    #[arg(long)]
    data: PathBuf,
    /// Sensor ids in corridor order, one per line.
    #[arg(long)]
    order: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Train {
    #[command(flatten)]
    data: DataArgs,
    /// JSON run configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    checkpoint_out: PathBuf,
    #[arg(long)]
    history_out: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    init_seed: Option<u64>,
    #[arg(long)]
    shuffle_seed: Option<u64>,
    #[arg(long)]
    split_seed: Option<u64>,
}

#[derive(Debug, Args)]
struct Evaluate {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    checkpoint: PathBuf,
    /// Metrics CSV: `model,mae,mape_pct,ace`.
    #[arg(long)]
    report_out: PathBuf,
    /// Prediction CSV: `t,sensor_id,predicted,actual`.
    #[arg(long)]
    pred_out: Option<PathBuf>,
    #[arg(long)]
    mape_floor: Option<f64>,
}

#[derive(Debug, Args)]
struct Ablate {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    checkpoint: PathBuf,
    /// Lasso penalty; defaults to the checkpoint's run setting (0.002).
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    report_out: PathBuf,
}

#[derive(Debug, Args)]
struct GradCheck {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 1e-4)]
    step: f64,
}

#[derive(Debug, Args)]
struct Plot {
    /// Prediction CSV written by `evaluate --pred-out`.
    #[arg(long)]
    pred_csv: PathBuf,
    /// Long-format flow CSV holding the observed values.
    #[arg(long)]
    actual_csv: PathBuf,
    /// Zero-based location index in the observed file's sensor order.
    #[arg(long)]
    location: usize,
    #[arg(long)]
    out: PathBuf,
}

/// Parses `args` (program name first) and runs one subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::GenData(a) => gen_data(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Ablate(a) => ablate(a),
        Command::GradCheck(a) => grad_check(a),
        Command::Plot(a) => plot(a),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn load_series(a: &DataArgs) -> Result<crate::data::TrafficSeries> {
    if !a.data.exists() {
        return Err(Error::Validation(format!("data file {} does not exist", a.data.display())));
    }
    load_csv(&a.data, a.order.as_deref())
}

fn gen_data(a: GenData) -> Result<()> {
    let series = generate_synthetic(&SyntheticConfig {
        locations: a.p,
        days: a.days,
        steps_per_day: a.steps_per_day,
        seed: a.seed,
        noise: a.noise,
    })?;
    write_csv(&series, &a.out)?;
    println!("wrote {} locations x {} steps to {}", series.locations(), series.steps(), a.out.display());
    Ok(())
}

fn train(a: Train) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = a.epochs {
        cfg.train.max_epochs = v;
    }
    if let Some(v) = a.batch_size {
        cfg.train.batch_size = v;
    }
    if let Some(v) = a.patience {
        cfg.train.patience = v;
    }
    if let Some(v) = a.learning_rate {
        cfg.train.learning_rate = v;
    }
    if let Some(v) = a.init_seed {
        cfg.init_seed = v;
    }
    if let Some(v) = a.shuffle_seed {
        cfg.train.seed = v;
    }
    if let Some(v) = a.split_seed {
        cfg.split.seed = v;
    }
    cfg.validate()?;
    let series = load_series(&a.data)?;
    let data = Dataset::prepare(series, &cfg)?;
    let (model, history) = train_model(&data, &cfg)?;
    Checkpoint::new(&cfg, &model, data.series.sensor_ids(), &data.stats).save(&a.checkpoint_out)?;
    if let Some(path) = &a.history_out {
        let mut buf = Vec::new();
        history.write_csv(&mut buf).map_err(|e| Error::io(path, e))?;
        write_file(path, &buf)?;
    }
    println!(
        "trained {} epochs, best epoch {} (val MSE {:.4}); checkpoint {}",
        history.epochs.len(),
        history.best_epoch,
        history.best_val_mse().unwrap_or(f64::NAN),
        a.checkpoint_out.display()
    );
    Ok(())
}

fn restore(data: &DataArgs, path: &Path) -> Result<(Checkpoint, crate::model::CltfpModel, Dataset)> {
    let ckpt = Checkpoint::load(path)?;
    let series = load_series(data)?;
    if series.sensor_ids() != ckpt.sensor_ids.as_slice() {
        return Err(Error::Validation(format!(
            "sensor ids in {} differ from the checkpoint's",
            data.data.display()
        )));
    }
    let model = ckpt.model()?;
    let dataset = Dataset::with_stats(series, &ckpt.run, ckpt.norm.clone())?;
    Ok((ckpt, model, dataset))
}

fn evaluate_cmd(a: Evaluate) -> Result<()> {
    let (ckpt, model, data) = restore(&a.data, &a.checkpoint)?;
    let ev = evaluate(&model, &data, a.mape_floor.unwrap_or(ckpt.run.mape_floor))?;
    let mut buf = Vec::new();
    ev.write_metrics_csv(&mut buf).map_err(|e| Error::io(&a.report_out, e))?;
    write_file(&a.report_out, &buf)?;
    if let Some(path) = &a.pred_out {
        let mut buf = Vec::new();
        ev.write_predictions_csv(&mut buf)?;
        write_file(path, &buf)?;
    }
    println!(
        "cltfp MAE {:.4} MAPE {:.3}% ACE {:.4} | persistence MAE {:.4}",
        ev.cltfp.mae, ev.cltfp.mape_pct, ev.cltfp.ace, ev.persistence.mae
    );
    Ok(())
}

fn ablate(a: Ablate) -> Result<()> {
    let (ckpt, model, data) = restore(&a.data, &a.checkpoint)?;
    let lambda = a.lambda.unwrap_or(ckpt.run.lasso_lambda);
    let report = run_ablation(&model, &data, lambda, ckpt.run.mape_floor)?;
    write_file(&a.report_out, report.to_csv_string().as_bytes())?;
    for row in &report.rows {
        println!("{:<6} MAE {:.4}", row.combo.label(), row.metrics.mae);
    }
    Ok(())
}

fn grad_check(a: GradCheck) -> Result<()> {
    let report = full_loss_grad_check(a.seed, a.step)?;
    println!("max relative error {:.3e} over {} values", report.max_rel_error, report.checked);
    if report.max_rel_error < 1e-4 {
        Ok(())
    } else {
        let worst = report.worst.map(|(n, i)| format!(" at {n}[{i}]")).unwrap_or_default();
        Err(Error::Validation(format!("gradient check failed{worst}")))
    }
}

fn plot(a: Plot) -> Result<()> {
    let actual_series = load_csv(&a.actual_csv, None)?;
    let sensor = actual_series
        .sensor_ids()
        .get(a.location)
        .cloned()
        .ok_or_else(|| Error::Validation(format!("location {} out of range", a.location)))?;
    let by_time: HashMap<i64, usize> =
        (0..actual_series.steps()).map(|s| (actual_series.timestamp(s), s)).collect();

    let mut reader = csv::Reader::from_path(&a.pred_csv)?;
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["t", "sensor_id", "predicted", "actual"] {
        return Err(Error::Ingestion(format!(
            "{}: header must be `t,sensor_id,predicted,actual`",
            a.pred_csv.display()
        )));
    }
    let (mut predicted, mut actual) = (Vec::new(), Vec::new());
    for record in reader.records() {
        let record = record?;
        if record[1] != sensor {
            continue;
        }
        let ts = parse_timestamp(&record[0])
            .ok_or_else(|| Error::Ingestion(format!("bad timestamp `{}`", &record[0])))?;
        let step = by_time.get(&ts).ok_or_else(|| {
            Error::Validation(format!("no observed flow at {} for sensor {sensor}", &record[0]))
        })?;
        let value: f64 = record[2]
            .parse()
            .map_err(|_| Error::Ingestion(format!("bad prediction `{}`", &record[2])))?;
        predicted.push(value);
        actual.push(actual_series.at(a.location, *step));
    }
    render_forecast_svg(&predicted, &actual, &format!("sensor {sensor}"), &a.out)?;
    println!("wrote {} points to {}", predicted.len(), a.out.display());
    Ok(())
}
