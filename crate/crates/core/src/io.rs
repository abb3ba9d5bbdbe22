//! CSV ingestion and export for features, labels and layouts.
//!
//! Feature files have a header `id,f0,f1,...`; label files `id,label`; layout files `id,x,y`.
//! Floats are written with Rust's shortest round-trip formatting, so a written file parses
//! back to bit-identical values.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::data::{FeatureMatrix, ItemId, LabelMap, Layout2D};
use crate::error::{Error, Result};

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

/// Loads a feature file and, optionally, a label file joined by id.
pub fn load_dataset(
    features_path: impl AsRef<Path>,
    labels_path: Option<&Path>,
) -> Result<(FeatureMatrix, Option<LabelMap>)> {
    let features = read_features(open(features_path.as_ref())?)?;
    let labels = match labels_path {
        Some(p) => Some(read_labels(open(p)?, &features)?),
        None => None,
    };
    Ok((features, labels))
}

pub fn read_features(reader: impl Read) -> Result<FeatureMatrix> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    if headers.get(0).map(str::trim) != Some("id") {
        return Err(Error::Parse {
            line: 1,
            message: "feature header must start with `id`".into(),
        });
    }
    let d = headers.len() - 1;
    let mut ids = Vec::new();
    let mut values = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let raw_id = record.get(0).unwrap_or("").trim();
        let id = ItemId::new(raw_id).map_err(|_| Error::Parse {
            line,
            message: "empty id".into(),
        })?;
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId {
                line,
                id: raw_id.to_owned(),
            });
        }
        for (k, field) in record.iter().skip(1).enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                line,
                message: format!("non-numeric value {field:?} in column f{k}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("non-finite value {field:?} in column f{k}"),
                });
            }
            values.push(v);
        }
        ids.push(id);
    }
    let n = ids.len();
    let data = DMatrix::from_row_slice(n, d, &values);
    FeatureMatrix::new(ids, data)
}

/// Reads `id,label` rows; every feature id must receive exactly one label.
pub fn read_labels(reader: impl Read, features: &FeatureMatrix) -> Result<LabelMap> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    if headers.len() != 2 || headers.get(0).map(str::trim) != Some("id") {
        return Err(Error::Parse {
            line: 1,
            message: "label header must be `id,label`".into(),
        });
    }
    let mut labels = LabelMap::new();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let raw_id = record.get(0).unwrap_or("").trim();
        if features.index_of(raw_id).is_none() {
            return Err(Error::UnknownId {
                line,
                id: raw_id.to_owned(),
            });
        }
        let id = ItemId::new(raw_id).expect("known ids are non-empty");
        let label = record.get(1).unwrap_or("").trim().to_owned();
        if labels.insert(id, label).is_some() {
            return Err(Error::DuplicateId {
                line,
                id: raw_id.to_owned(),
            });
        }
    }
    if let Some(missing) = features.ids().iter().find(|id| labels.get(id).is_none()) {
        return Err(Error::MissingLabel(missing.as_str().to_owned()));
    }
    Ok(labels)
}

fn io_write(e: std::io::Error) -> Error {
    Error::io("<writer>", e)
}

pub fn write_features(features: &FeatureMatrix, mut w: impl Write) -> Result<()> {
    let mut header = String::from("id");
    for k in 0..features.d() {
        header.push_str(&format!(",f{k}"));
    }
    writeln!(w, "{header}").map_err(io_write)?;
    for (i, id) in features.ids().iter().enumerate() {
        let mut line = id.as_str().to_owned();
        for k in 0..features.d() {
            line.push_str(&format!(",{}", features.data()[(i, k)]));
        }
        writeln!(w, "{line}").map_err(io_write)?;
    }
    Ok(())
}

pub fn write_labels(labels: &LabelMap, mut w: impl Write) -> Result<()> {
    writeln!(w, "id,label").map_err(io_write)?;
    for (id, label) in labels.iter() {
        writeln!(w, "{id},{label}").map_err(io_write)?;
    }
    Ok(())
}

pub fn write_layout(layout: &Layout2D, mut w: impl Write) -> Result<()> {
    writeln!(w, "id,x,y").map_err(io_write)?;
    for (id, [x, y]) in layout.points() {
        writeln!(w, "{id},{x},{y}").map_err(io_write)?;
    }
    Ok(())
}

pub fn read_layout(reader: impl Read) -> Result<Layout2D> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let mut ids = Vec::new();
    let mut pts = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 3 {
            return Err(Error::Parse {
                line,
                message: "layout rows must be `id,x,y`".into(),
            });
        }
        let coord = |k: usize| -> Result<f64> {
            record[k].trim().parse().map_err(|_| Error::Parse {
                line,
                message: format!("non-numeric coordinate {:?}", &record[k]),
            })
        };
        pts.push([coord(1)?, coord(2)?]);
        ids.push(ItemId::new(record[0].trim()).map_err(|_| Error::Parse {
            line,
            message: "empty id".into(),
        })?);
    }
    Layout2D::from_points(ids, &pts)
}
