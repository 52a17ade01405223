//! CSV ingestion and emission of paired samples and angle lists.
//!
//! Row numbers in parse errors are file line numbers, so the header is row 1
//! and the first data row is row 2.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::circle::{Angle, CircularSample};
use crate::error::{Error, Result};
use crate::frechet_lc::PairedSample;
use crate::metric::{MetricSpace, ResponsePoint, SpaceKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleUnit {
    #[default]
    Radians,
    Degrees,
}

impl AngleUnit {
    pub fn angle(self, v: f64) -> Angle {
        match self {
            AngleUnit::Radians => Angle::new(v),
            AngleUnit::Degrees => Angle::from_degrees(v),
        }
    }

    fn value(self, a: Angle) -> f64 {
        match self {
            AngleUnit::Radians => a.radians(),
            AngleUnit::Degrees => a.radians().to_degrees(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseEncoding {
    /// One numeric column per coordinate.
    Euclidean { columns: Vec<String> },
    /// One angle column, in the schema's angle unit.
    Arc { column: String },
    /// Columns `q1..qQ`; `None` takes every consecutive `q<k>` in the header.
    Quantiles { levels: Option<usize> },
}

impl ResponseEncoding {
    /// Default column layout for a space: `y` (or `y1..yd`), `y`, `q1..qQ`.
    pub fn for_space(space: &MetricSpace) -> Self {
        match space.kind {
            SpaceKind::EuclideanReal { dim: 1 } => ResponseEncoding::Euclidean { columns: vec!["y".into()] },
            SpaceKind::EuclideanReal { dim } => ResponseEncoding::Euclidean {
                columns: (1..=dim).map(|i| format!("y{i}")).collect(),
            },
            SpaceKind::CircleArc => ResponseEncoding::Arc { column: "y".into() },
            SpaceKind::Wasserstein1D { levels } => ResponseEncoding::Quantiles { levels: Some(levels) },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub predictor_column: String,
    #[serde(default)]
    pub angle_unit: AngleUnit,
    pub response: ResponseEncoding,
    #[serde(default = "default_delimiter")]
    pub delimiter: u8,
}

fn default_delimiter() -> u8 {
    b','
}

impl DatasetSchema {
    pub fn for_space(space: &MetricSpace) -> Self {
        DatasetSchema {
            predictor_column: "x".into(),
            angle_unit: AngleUnit::Radians,
            response: ResponseEncoding::for_space(space),
            delimiter: b',',
        }
    }

    pub fn with_unit(mut self, unit: AngleUnit) -> Self {
        self.angle_unit = unit;
        self
    }

    pub fn with_delimiter(mut self, delimiter: u8) -> Self {
        self.delimiter = delimiter;
        self
    }

    fn response_columns(&self, header: &csv::StringRecord) -> Result<Vec<String>> {
        match &self.response {
            ResponseEncoding::Euclidean { columns } => Ok(columns.clone()),
            ResponseEncoding::Arc { column } => Ok(vec![column.clone()]),
            ResponseEncoding::Quantiles { levels: Some(q) } => Ok((1..=*q).map(|i| format!("q{i}")).collect()),
            ResponseEncoding::Quantiles { levels: None } => {
                let cols: Vec<String> = (1..)
                    .map(|i| format!("q{i}"))
                    .take_while(|c| header.iter().any(|h| h == c))
                    .collect();
                if cols.is_empty() {
                    return Err(parse_error("missing quantile columns", 1, "q1"));
                }
                Ok(cols)
            }
        }
    }
}

fn parse_error(message: impl Into<String>, row: u64, column: &str) -> Error {
    Error::Parse {
        message: message.into(),
        row,
        column: column.to_string(),
    }
}

/// `{:.16e}`: 17 significant digits, enough to round-trip any double.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn column_index(header: &csv::StringRecord, name: &str) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| parse_error(format!("missing column `{name}`"), 1, name))
}

fn cell(record: &csv::StringRecord, idx: usize, row: u64, column: &str) -> Result<f64> {
    let raw = record.get(idx).unwrap_or("");
    let v: f64 = raw
        .parse()
        .map_err(|_| parse_error(format!("non-numeric cell `{raw}`"), row, column))?;
    if !v.is_finite() {
        return Err(parse_error(format!("non-finite cell `{raw}`"), row, column));
    }
    Ok(v)
}

fn reader<R: Read>(input: R, delimiter: u8) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input)
}

fn csv_error(e: csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => parse_error(format!("malformed csv: {other:?}"), row, ""),
    }
}

/// Reads a paired sample from any reader. An input with a header and no
/// rows is rejected as an empty sample.
pub fn read_paired_dataset<R: Read>(input: R, schema: &DatasetSchema) -> Result<PairedSample> {
    let mut rdr = reader(input, schema.delimiter);
    let header = rdr.headers().map_err(csv_error)?.clone();
    if header.is_empty() {
        return Err(Error::EmptySample);
    }
    let x_idx = column_index(&header, &schema.predictor_column)?;
    let names = schema.response_columns(&header)?;
    let idx: Vec<usize> = names.iter().map(|c| column_index(&header, c)).collect::<Result<_>>()?;

    let mut angles = Vec::new();
    let mut responses = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let row = rec.position().map_or(0, |p| p.line());
        angles.push(schema.angle_unit.angle(cell(&rec, x_idx, row, &schema.predictor_column)?));
        let values: Vec<f64> = idx
            .iter()
            .zip(&names)
            .map(|(&i, c)| cell(&rec, i, row, c))
            .collect::<Result<_>>()?;
        let point = match &schema.response {
            ResponseEncoding::Euclidean { .. } => ResponsePoint::Euclidean(values),
            ResponseEncoding::Arc { .. } => ResponsePoint::Arc(schema.angle_unit.angle(values[0])),
            ResponseEncoding::Quantiles { .. } => {
                if let Some(i) = values.windows(2).position(|w| w[1] < w[0]) {
                    return Err(parse_error("non-monotone quantiles", row, &names[i + 1]));
                }
                ResponsePoint::Quantiles(values)
            }
        };
        responses.push(point);
    }
    PairedSample::new(CircularSample::new(angles), responses)
}

pub fn load_paired_dataset(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<PairedSample> {
    read_paired_dataset(File::open(path)?, schema)
}

/// Reads one angle column.
pub fn read_angles<R: Read>(input: R, column: &str, unit: AngleUnit, delimiter: u8) -> Result<CircularSample> {
    let mut rdr = reader(input, delimiter);
    let header = rdr.headers().map_err(csv_error)?.clone();
    let idx = column_index(&header, column)?;
    let mut angles = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let row = rec.position().map_or(0, |p| p.line());
        angles.push(unit.angle(cell(&rec, idx, row, column)?));
    }
    if angles.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(CircularSample::new(angles))
}

pub fn load_angles(path: impl AsRef<Path>, column: &str, unit: AngleUnit) -> Result<CircularSample> {
    read_angles(File::open(path)?, column, unit, b',')
}

/// Writes a sample in the layout `schema` reads back.
pub fn write_paired_dataset<W: Write>(out: W, sample: &PairedSample, schema: &DatasetSchema) -> Result<()> {
    let mut out = BufWriter::new(out);
    let d = schema.delimiter as char;
    let names: Vec<String> = match &schema.response {
        ResponseEncoding::Euclidean { columns } => columns.clone(),
        ResponseEncoding::Arc { column } => vec![column.clone()],
        ResponseEncoding::Quantiles { levels } => {
            let q = levels.unwrap_or_else(|| sample.responses().first().map_or(0, |p| p.components().len()));
            (1..=q).map(|i| format!("q{i}")).collect()
        }
    };
    let mut header = vec![schema.predictor_column.clone()];
    header.extend(names.iter().cloned());
    writeln!(out, "{}", header.join(&d.to_string()))?;
    for (x, y) in sample.predictors().angles().iter().zip(sample.responses()) {
        let payload = match y {
            ResponsePoint::Arc(a) => vec![schema.angle_unit.value(*a)],
            other => other.components(),
        };
        if payload.len() != names.len() {
            return Err(Error::TypeMismatch(format!(
                "response has {} values, schema has {} columns",
                payload.len(),
                names.len()
            )));
        }
        let mut fields = vec![format_f64(schema.angle_unit.value(*x))];
        fields.extend(payload.into_iter().map(format_f64));
        writeln!(out, "{}", fields.join(&d.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_paired_dataset(path: impl AsRef<Path>, sample: &PairedSample, schema: &DatasetSchema) -> Result<()> {
    write_paired_dataset(File::create(path)?, sample, schema)
}

pub fn write_angles<W: Write>(out: W, column: &str, sample: &CircularSample) -> Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "{column}")?;
    for a in sample.angles() {
        writeln!(out, "{}", format_f64(a.radians()))?;
    }
    out.flush()?;
    Ok(())
}
