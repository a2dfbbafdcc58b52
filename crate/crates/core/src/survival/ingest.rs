//! Counting-process CSV input and output.
//!
//! One row per interval with a header line. Rows of a subject may appear anywhere; they
//! are grouped by id in order of first appearance and sorted by start time. An empty
//! mediator cell means no measurement at that interval start.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Interval, Subject, SurvivalDataset, SurvivalError};

/// Which CSV columns hold which fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub id: String,
    pub start: String,
    pub stop: String,
    pub event: String,
    pub treatment: String,
    #[serde(default)]
    pub covariates: Vec<String>,
    #[serde(default)]
    pub mediator: Option<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            id: "id".into(),
            start: "start".into(),
            stop: "stop".into(),
            event: "event".into(),
            treatment: "treatment".into(),
            covariates: Vec::new(),
            mediator: None,
        }
    }
}

pub fn read_csv_path(path: &Path, map: &ColumnMap) -> Result<SurvivalDataset, SurvivalError> {
    let file = std::fs::File::open(path).map_err(|e| SurvivalError::Io(format!("{}: {e}", path.display())))?;
    read_csv(file, map)
}

pub fn read_csv<R: Read>(reader: R, map: &ColumnMap) -> Result<SurvivalDataset, SurvivalError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| SurvivalError::Row { row: 1, message: e.to_string() })?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| SurvivalError::MissingColumn(name.to_string()));
    let (c_id, c_start, c_stop, c_event, c_trt) =
        (col(&map.id)?, col(&map.start)?, col(&map.stop)?, col(&map.event)?, col(&map.treatment)?);
    let c_cov: Vec<usize> = map.covariates.iter().map(|c| col(c)).collect::<Result<_, _>>()?;
    let c_med = map.mediator.as_deref().map(col).transpose()?;

    let mut order: Vec<String> = Vec::new();
    // Per id: treatment, row where it was first seen, and numbered intervals.
    type Pending = (u8, usize, Vec<(usize, Interval)>);
    let mut subjects: HashMap<String, Pending> = HashMap::new();
    for (k, record) in rdr.records().enumerate() {
        let row = k + 2;
        let record = record.map_err(|e| SurvivalError::Row { row, message: e.to_string() })?;
        let field = |c: usize| record.get(c).unwrap_or("");
        let num = |c: usize| -> Result<f64, SurvivalError> {
            let cell = field(c);
            let v: f64 = cell.parse().map_err(|_| SurvivalError::Row {
                row,
                message: format!("column `{}`: `{cell}` is not a number", &headers[c]),
            })?;
            if !v.is_finite() {
                return Err(SurvivalError::Row { row, message: format!("column `{}` is not finite", &headers[c]) });
            }
            Ok(v)
        };
        let flag = |c: usize| -> Result<u8, SurvivalError> {
            match field(c) {
                "0" => Ok(0),
                "1" => Ok(1),
                other => Err(SurvivalError::Row { row, message: format!("column `{}`: `{other}` is not 0 or 1", &headers[c]) }),
            }
        };
        let id = field(c_id).to_string();
        let (start, stop, event, a) = (num(c_start)?, num(c_stop)?, flag(c_event)? == 1, flag(c_trt)?);
        if start >= stop {
            return Err(SurvivalError::Row { row, message: format!("start {start} is not before stop {stop}") });
        }
        let z = c_cov.iter().map(|&c| num(c)).collect::<Result<Vec<_>, _>>()?;
        let mediator = match c_med {
            Some(c) if !field(c).is_empty() && field(c) != "NA" => Some(num(c)?),
            _ => None,
        };
        let entry = subjects.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            (a, row, Vec::new())
        });
        if entry.0 != a {
            return Err(SurvivalError::Row {
                row,
                message: format!("treatment of subject `{id}` changes (first set on row {})", entry.1),
            });
        }
        entry.2.push((row, Interval { start, stop, event, z, mediator }));
    }
    if order.is_empty() {
        return Err(SurvivalError::Empty);
    }
    let mut out = Vec::with_capacity(order.len());
    for id in order {
        let (treatment, _, mut rows) = subjects.remove(&id).expect("recorded");
        rows.sort_by(|a, b| a.1.start.total_cmp(&b.1.start));
        for w in rows.windows(2) {
            if w[0].1.stop > w[1].1.start {
                return Err(SurvivalError::Row { row: w[1].0, message: format!("interval overlaps row {}", w[0].0) });
            }
            if w[0].1.event {
                return Err(SurvivalError::Row { row: w[0].0, message: "event is not in the subject's last interval".into() });
            }
        }
        out.push(Subject { id, treatment, intervals: rows.into_iter().map(|r| r.1).collect() });
    }
    SurvivalDataset::new(map.covariates.clone(), map.mediator.clone(), out)
}

/// Writes a dataset back in the layout understood by [`read_csv`] with default column
/// names, covariates under their own names and the mediator last.
pub fn write_csv<W: Write>(ds: &SurvivalDataset, writer: W) -> Result<(), SurvivalError> {
    let io = |e: csv::Error| SurvivalError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_string(), "start".into(), "stop".into(), "event".into(), "treatment".into()];
    header.extend(ds.covariate_names().iter().cloned());
    if let Some(m) = ds.mediator_name() {
        header.push(m.to_string());
    }
    w.write_record(&header).map_err(io)?;
    for s in ds.subjects() {
        for iv in &s.intervals {
            let mut rec = vec![
                s.id.clone(),
                format_float(iv.start),
                format_float(iv.stop),
                (iv.event as u8).to_string(),
                s.treatment.to_string(),
            ];
            rec.extend(iv.z.iter().map(|&v| format_float(v)));
            if ds.mediator_name().is_some() {
                rec.push(iv.mediator.map(format_float).unwrap_or_default());
            }
            w.write_record(&rec).map_err(io)?;
        }
    }
    w.flush().map_err(|e| SurvivalError::Io(e.to_string()))
}

/// Shortest decimal form that parses back to the same value.
pub fn format_float(v: f64) -> String {
    format!("{v}")
}
