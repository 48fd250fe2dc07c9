//! CSV ingestion and output.
//!
//! Datasets have a one-line header: `x,y,value` for planar data and
//! `lon,lat,value` for great-circle data. Numbers are written with 17
//! significant digits so that files round-trip bit for bit.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geo::{Dataset, Location, Metric};

/// Column names expected for `metric`.
pub fn header_for(metric: Metric) -> [&'static str; 3] {
    match metric {
        Metric::Euclidean => ["x", "y", "value"],
        Metric::GreatCircle { .. } => ["lon", "lat", "value"],
    }
}

/// Full-precision formatting used for every number the tool writes.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Locations plus optional values read from a CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub locations: Vec<Location>,
    pub values: Option<Vec<f64>>,
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Read a location table. The value column is required when
/// `require_values` is set and optional otherwise.
pub fn parse_table<R: Read>(reader: R, metric: Metric, require_values: bool) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let want = header_for(metric);
    let headers = rdr
        .headers()
        .map_err(|e| parse_error(1, e.to_string()))?
        .clone();
    let cols: Vec<&str> = headers.iter().collect();
    if cols.len() < 2 || cols[0] != want[0] || cols[1] != want[1] {
        return Err(parse_error(
            1,
            format!("expected header `{}`, found `{}`", want.join(","), cols.join(",")),
        ));
    }
    let has_values = match cols.get(2) {
        Some(&c) if c == want[2] => true,
        None if !require_values => false,
        _ => {
            return Err(parse_error(
                1,
                format!("missing `{}` column; expected header `{}`", want[2], want.join(",")),
            ))
        }
    };
    if cols.len() > 3 {
        return Err(parse_error(1, format!("unexpected extra columns in `{}`", cols.join(","))));
    }

    let ncols = if has_values { 3 } else { 2 };
    let mut locations = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != ncols {
            return Err(parse_error(line, format!("expected {ncols} fields, found {}", rec.len())));
        }
        let num = |k: usize| -> Result<f64> {
            rec[k]
                .parse::<f64>()
                .map_err(|_| parse_error(line, format!("`{}` is not a number", &rec[k])))
        };
        let loc = Location::new(num(0)?, num(1)?);
        metric
            .validate(&loc)
            .map_err(|e| parse_error(line, e.to_string()))?;
        locations.push(loc);
        if has_values {
            let v = num(2)?;
            if !v.is_finite() {
                return Err(parse_error(line, "value is not finite"));
            }
            values.push(v);
        }
    }
    if locations.is_empty() {
        return Err(parse_error(2, "no data rows"));
    }
    Ok(Table {
        locations,
        values: has_values.then_some(values),
    })
}

pub fn parse_dataset<R: Read>(reader: R, metric: Metric) -> Result<Dataset> {
    let t = parse_table(reader, metric, true)?;
    Dataset::new(t.locations, t.values.expect("required"), metric)
}

pub fn read_dataset(path: &Path, metric: Metric) -> Result<Dataset> {
    let f = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_dataset(std::io::BufReader::new(f), metric)
}

pub fn read_table(path: &Path, metric: Metric) -> Result<Table> {
    let f = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_table(std::io::BufReader::new(f), metric, false)
}

pub fn write_dataset<W: Write>(mut w: W, ds: &Dataset) -> Result<()> {
    writeln!(w, "{}", header_for(ds.metric()).join(","))?;
    for (l, v) in ds.locations().iter().zip(ds.observations()) {
        writeln!(w, "{},{},{}", fmt_f64(l.x), fmt_f64(l.y), fmt_f64(*v))?;
    }
    Ok(())
}

pub fn write_predictions<W: Write>(mut w: W, locations: &[Location], predictions: &[f64]) -> Result<()> {
    writeln!(w, "x,y,prediction")?;
    for (l, p) in locations.iter().zip(predictions) {
        writeln!(w, "{},{},{}", fmt_f64(l.x), fmt_f64(l.y), fmt_f64(*p))?;
    }
    Ok(())
}
