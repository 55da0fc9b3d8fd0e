use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};

use super::TrafficSeries;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Reads a long-format `timestamp,sensor_id,flow` file into a dense series.
///
/// Rows may arrive in any order. Sensors are ordered by `order_file` (one id
/// per line, upstream first) when given, otherwise by first appearance.
pub fn load_csv(path: &Path, order_file: Option<&Path>) -> Result<TrafficSeries> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);

    let headers = reader.headers()?.clone();
    let expected = ["timestamp", "sensor_id", "flow"];
    if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(Error::Ingestion(format!(
            "{}: header must be `timestamp,sensor_id,flow`, found `{}`",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut appearance: Vec<String> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut cells: BTreeMap<i64, HashMap<usize, f64>> = BTreeMap::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let row = line + 2;
        let ts = parse_timestamp(&record[0])
            .ok_or_else(|| Error::Ingestion(format!("row {row}: bad timestamp `{}`", &record[0])))?;
        let sensor = record[1].to_string();
        let flow: f64 = record[2]
            .parse()
            .map_err(|_| Error::Ingestion(format!("row {row}: bad flow `{}`", &record[2])))?;
        if !flow.is_finite() || flow < 0.0 {
            return Err(Error::Validation(format!(
                "row {row}: flow {flow} for sensor {sensor} must be non-negative"
            )));
        }
        let idx = *seen.entry(sensor.clone()).or_insert_with(|| {
            appearance.push(sensor.clone());
            appearance.len() - 1
        });
        if cells.entry(ts).or_default().insert(idx, flow).is_some() {
            return Err(Error::Ingestion(format!(
                "row {row}: duplicate reading for sensor {sensor} at {}",
                &record[0]
            )));
        }
    }
    if cells.len() < 2 {
        return Err(Error::Validation(
            "need at least two timestamps to infer the sampling interval".into(),
        ));
    }

    let order = match order_file {
        Some(p) => read_order(p, &appearance)?,
        None => appearance.clone(),
    };

    let stamps: Vec<i64> = cells.keys().copied().collect();
    let interval = stamps[1] - stamps[0];
    if let Some(w) = stamps.windows(2).find(|w| w[1] - w[0] != interval) {
        return Err(Error::Validation(format!(
            "irregular interval: {}s between {} and {}, expected {interval}s",
            w[1] - w[0],
            format_timestamp(w[0]),
            format_timestamp(w[1])
        )));
    }

    let steps = stamps.len();
    let mut values = Tensor::zeros(&[order.len(), steps]);
    for (col, ts) in stamps.iter().enumerate() {
        let row = &cells[ts];
        for (loc, sensor) in order.iter().enumerate() {
            let flow = row.get(&seen[sensor]).ok_or_else(|| {
                Error::Ingestion(format!(
                    "missing reading for sensor {sensor} at {}",
                    format_timestamp(*ts)
                ))
            })?;
            values.set(loc, col, *flow);
        }
    }
    TrafficSeries::new(values, order, stamps[0], interval)
}

fn read_order(path: &Path, appearance: &[String]) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let order: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect();
    for id in appearance {
        if !order.contains(id) {
            return Err(Error::Ingestion(format!(
                "sensor {id} is missing from order file {}",
                path.display()
            )));
        }
    }
    if let Some(id) = order.iter().find(|id| !appearance.contains(id)) {
        return Err(Error::Ingestion(format!("order file lists unknown sensor {id}")));
    }
    Ok(order)
}

/// Writes the series in long format, sensors in corridor order per timestamp.
pub fn write_csv(series: &TrafficSeries, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["timestamp", "sensor_id", "flow"])?;
    for step in 0..series.steps() {
        let ts = format_timestamp(series.timestamp(step));
        for (loc, id) in series.sensor_ids().iter().enumerate() {
            w.write_record([ts.as_str(), id, &series.at(loc, step).to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Accepts integer epoch seconds, RFC 3339, or a naive ISO-8601 date-time (UTC).
pub fn parse_timestamp(raw: &str) -> Option<i64> {
    if let Ok(secs) = raw.parse::<i64>() {
        return Some(secs);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt.timestamp());
    }
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(raw, f).ok())
        .map(|dt| dt.and_utc().timestamp())
}

pub fn format_timestamp(secs: i64) -> String {
    DateTime::from_timestamp(secs, 0)
        .map(|dt| dt.format("%Y-%m-%dT%H:%M:%SZ").to_string())
        .unwrap_or_else(|| secs.to_string())
}
