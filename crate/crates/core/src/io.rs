//! CSV, JSON and PGM persistence.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{Partition, TraceStats};
use crate::boosting::{Ensemble, TraceMatrix};
use crate::data::{Dataset, DomainBox, Label, LabeledPoint, Setting};
use crate::error::{Error, Result};
use crate::field::FieldRaster;
use crate::sampling::LearningCurve;
use crate::scalar::Scalar;

/// Seed record stored next to a dataset CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSidecar {
    pub setting: Setting,
    pub n: usize,
    pub seed: u64,
}

/// `data.csv` → `data.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn parse_error(row: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        row,
        message: message.into(),
    }
}

/// Full-precision scientific notation.
fn fixed<T: Scalar>(v: T) -> String {
    format!("{:.16e}", v.to_f64_lossy())
}

/// Shortest representation that parses back to the same value.
fn exact<T: Scalar>(v: T) -> String {
    format!("{v:e}")
}

fn parse_field<T: Scalar>(raw: &str, row: usize, column: &str) -> Result<T> {
    raw.trim()
        .parse::<T>()
        .map_err(|_| parse_error(row, format!("column `{column}`: cannot parse `{raw}`")))
}

fn check_header(reader: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let header = reader.headers()?;
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != expected {
        return Err(parse_error(0, format!("expected header `{}`, found `{}`", expected.join(","), got.join(","))));
    }
    Ok(())
}

pub fn write_dataset<T: Scalar>(data: &Dataset<T>, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x1", "x2", "y"])?;
    for p in &data.points {
        w.write_record([fixed(p.x[0]), fixed(p.x[1]), p.y.sign().to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `x1,x2,y` rows; rows are numbered from 1 after the header.
pub fn read_dataset_points<T: Scalar>(input: impl Read) -> Result<Vec<LabeledPoint<T>>> {
    let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    check_header(&mut r, &["x1", "x2", "y"])?;
    let mut points = Vec::new();
    for (i, record) in r.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| parse_error(row, e.to_string()))?;
        if record.len() != 3 {
            return Err(parse_error(row, format!("expected 3 fields, found {}", record.len())));
        }
        let x1 = parse_field(&record[0], row, "x1")?;
        let x2 = parse_field(&record[1], row, "x2")?;
        let y: i64 = record[2]
            .trim()
            .parse()
            .map_err(|_| parse_error(row, format!("column `y`: cannot parse `{}`", &record[2])))?;
        let y = Label::from_sign(y).map_err(|e| parse_error(row, e.to_string()))?;
        points.push(LabeledPoint::new([x1, x2], y).map_err(|e| parse_error(row, e.to_string()))?);
    }
    if points.is_empty() {
        return Err(parse_error(0, "dataset has no rows"));
    }
    Ok(points)
}

pub fn save_dataset<T: Scalar>(data: &Dataset<T>, sidecar: &DatasetSidecar, path: &Path) -> Result<()> {
    write_dataset(data, BufWriter::new(File::create(path)?))?;
    save_json(sidecar, &sidecar_path(path))
}

/// Loads a dataset CSV. The domain is the setting's box when a sidecar
/// naming a bounded setting sits next to the file, else the bounding box.
pub fn load_dataset<T: Scalar>(path: &Path) -> Result<(Dataset<T>, Option<DatasetSidecar>)> {
    let points = read_dataset_points(File::open(path)?)?;
    let side = sidecar_path(path);
    let sidecar: Option<DatasetSidecar> = if side.exists() { Some(load_json(&side)?) } else { None };
    let domain = match sidecar.and_then(|s| s.setting.domain::<T>()) {
        Some(d) if points.iter().all(|p| d.contains(&p.x)) => d,
        _ => DomainBox::bounding(points.iter().map(|p| p.x))?,
    };
    Ok((Dataset::new(points, domain), sidecar))
}

pub fn write_trace<T: Scalar>(trace: &TraceMatrix<T>, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((0..trace.n_points()).map(|i| format!("w_{i}")));
    w.write_record(&header)?;
    for (t, row) in trace.rows().enumerate() {
        let mut rec = vec![(t + 1).to_string()];
        rec.extend(row.iter().map(|v| exact(*v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace<T: Scalar>(input: impl Read) -> Result<TraceMatrix<T>> {
    let mut r = csv::Reader::from_reader(input);
    let n = r.headers()?.len().saturating_sub(1);
    let mut rows = Vec::new();
    for (i, record) in r.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| parse_error(row, e.to_string()))?;
        let values = record
            .iter()
            .skip(1)
            .map(|v| parse_field(v, row, "w"))
            .collect::<Result<Vec<T>>>()?;
        if values.len() != n {
            return Err(parse_error(row, format!("expected {n} weights, found {}", values.len())));
        }
        rows.push(values);
    }
    TraceMatrix::from_rows(rows)
}

pub fn write_ensemble<T: Scalar>(ensemble: &Ensemble<T>, out: impl Write) -> Result<()> {
    serde_json::to_writer(out, &ensemble.members)?;
    Ok(())
}

pub fn read_ensemble<T: Scalar>(input: impl Read) -> Result<Ensemble<T>> {
    Ensemble::new(serde_json::from_reader(input)?)
}

/// One row of the per-point statistics table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatsRow<T> {
    pub point_id: usize,
    pub stats: TraceStats<T>,
    pub easy: bool,
}

pub fn write_stats<T: Scalar>(stats: &[TraceStats<T>], partition: &Partition<T>, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["point_id", "mean", "entropy", "ks_D", "ks_p", "partition"])?;
    for (i, s) in stats.iter().enumerate() {
        w.write_record([
            i.to_string(),
            exact(s.mean),
            exact(s.entropy),
            exact(s.ks_d),
            exact(s.ks_p),
            (if partition.is_easy(i) { "easy" } else { "hard" }).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_stats<T: Scalar>(input: impl Read) -> Result<Vec<StatsRow<T>>> {
    let mut r = csv::Reader::from_reader(input);
    check_header(&mut r, &["point_id", "mean", "entropy", "ks_D", "ks_p", "partition"])?;
    let mut rows = Vec::new();
    for (i, record) in r.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| parse_error(row, e.to_string()))?;
        let point_id = record[0]
            .trim()
            .parse()
            .map_err(|_| parse_error(row, format!("column `point_id`: cannot parse `{}`", &record[0])))?;
        let easy = match record[5].trim() {
            "easy" => true,
            "hard" => false,
            other => return Err(parse_error(row, format!("column `partition`: unknown value `{other}`"))),
        };
        rows.push(StatsRow {
            point_id,
            stats: TraceStats {
                mean: parse_field(&record[1], row, "mean")?,
                entropy: parse_field(&record[2], row, "entropy")?,
                ks_d: parse_field(&record[3], row, "ks_D")?,
                ks_p: parse_field(&record[4], row, "ks_p")?,
            },
            easy,
        });
    }
    Ok(rows)
}

pub fn write_raster_csv<T: Scalar>(raster: &FieldRaster<T>, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x1", "x2", "H"])?;
    for j in 0..raster.ny {
        for i in 0..raster.nx {
            let c = raster.cell_center(i, j);
            w.write_record([exact(c[0]), exact(c[1]), exact(raster.get(i, j))])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Binary 8-bit PGM, top row = largest `x2`, levels scaled min to max.
pub fn write_raster_pgm<T: Scalar>(raster: &FieldRaster<T>, mut out: impl Write) -> Result<()> {
    let lo = raster.min().to_f64_lossy();
    let hi = raster.max().to_f64_lossy();
    write!(out, "P5\n{} {}\n255\n", raster.nx, raster.ny)?;
    let mut bytes = Vec::with_capacity(raster.len());
    for j in (0..raster.ny).rev() {
        for i in 0..raster.nx {
            let v = raster.get(i, j).to_f64_lossy();
            let level = if hi > lo { ((v - lo) / (hi - lo) * 255.0).round() } else { 0.0 };
            bytes.push(level.clamp(0.0, 255.0) as u8);
        }
    }
    out.write_all(&bytes)?;
    out.flush()?;
    Ok(())
}

pub fn write_curve(curve: &LearningCurve, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["strategy", "repetition", "budget", "error"])?;
    let name = curve.strategy.to_string();
    for rep in &curve.repetitions {
        for (budget, error) in curve.budgets.iter().zip(&rep.errors) {
            w.write_record([name.clone(), rep.repetition.to_string(), budget.to_string(), exact(*error)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Mean and standard error per `(strategy, budget)` over unflagged
/// repetitions.
pub fn write_summary(curves: &[LearningCurve], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["strategy", "budget", "mean", "stderr", "repetitions"])?;
    for curve in curves {
        let name = curve.strategy.to_string();
        let n = curve.repetitions.len() - curve.flagged_count();
        for ((budget, mean), se) in curve.budgets.iter().zip(curve.mean_errors()).zip(curve.standard_errors()) {
            w.write_record([name.clone(), budget.to_string(), exact(mean), exact(se), n.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_json<S: Serialize + ?Sized>(value: &S, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn load_json<D: for<'de> Deserialize<'de>>(path: &Path) -> Result<D> {
    Ok(serde_json::from_reader(File::open(path)?)?)
}
