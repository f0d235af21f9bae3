use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{Dataset, Filtered, MIN_ROWS};
use crate::error::{Error, Result};

/// Load a comma-separated file with a header row.
///
/// The optional group column is read as opaque strings and the optional time
/// column as integers; every other column must hold reals. Rows where any
/// field fails to parse, or parses to a non-finite value, are dropped and
/// counted in [`Filtered::dropped`].
pub fn load_csv(path: impl AsRef<Path>, group_col: Option<&str>, time_col: Option<&str>) -> Result<Filtered> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    read_csv(file, group_col, time_col)
}

pub fn read_csv<R: Read>(reader: R, group_col: Option<&str>, time_col: Option<&str>) -> Result<Filtered> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();

    let mut seen = HashSet::new();
    for h in &header {
        if !seen.insert(h.as_str()) {
            return Err(Error::DuplicateColumn(h.clone()));
        }
    }
    let find = |name: &str| header.iter().position(|h| h == name).ok_or_else(|| Error::UnknownColumn(name.to_string()));
    let group_idx = group_col.map(find).transpose()?;
    let time_idx = time_col.map(find).transpose()?;
    if let (Some(g), Some(t)) = (group_idx, time_idx) {
        if g == t {
            return Err(Error::NameCollision(header[g].clone()));
        }
    }
    let numeric: Vec<usize> = (0..header.len()).filter(|&j| Some(j) != group_idx && Some(j) != time_idx).collect();
    if numeric.is_empty() {
        return Err(Error::InvalidDataset("no numeric columns".into()));
    }

    let mut values = Vec::new();
    let mut groups = Vec::new();
    let mut times = Vec::new();
    let mut kept = 0usize;
    let mut dropped = 0usize;
    let mut row = Vec::with_capacity(numeric.len());
    for record in rdr.records() {
        let record = record?;
        row.clear();
        let parsed = numeric.iter().all(|&j| match record[j].trim().parse::<f64>() {
            Ok(v) if v.is_finite() => {
                row.push(v);
                true
            }
            _ => false,
        });
        let time = match time_idx {
            Some(t) => record[t].trim().parse::<i64>().ok(),
            None => Some(0),
        };
        match (parsed, time) {
            (true, Some(t)) => {
                values.extend_from_slice(&row);
                if let Some(g) = group_idx {
                    groups.push(record[g].to_string());
                }
                times.push(t);
                kept += 1;
            }
            _ => dropped += 1,
        }
    }
    if kept < MIN_ROWS {
        return Err(Error::InsufficientRows { found: kept, required: MIN_ROWS });
    }
    if dropped > 0 {
        log::info!("dropped {dropped} rows with missing or non-numeric values");
    }

    let columns = numeric.iter().map(|&j| header[j].clone()).collect();
    let mut dataset = Dataset::new(columns, values)?;
    if let Some(g) = group_idx {
        dataset = dataset.with_groups(header[g].clone(), groups)?;
    }
    if let Some(t) = time_idx {
        dataset = dataset.with_time(header[t].clone(), times)?;
    }
    Ok(Filtered { dataset, dropped })
}

/// Write a dataset as CSV: group column first, then time column, then the
/// numeric columns. Reals use the shortest representation that round-trips.
pub fn write_csv<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = Vec::new();
    if let Some(g) = ds.groups() {
        header.push(&g.name);
    }
    if let Some(t) = ds.time() {
        header.push(&t.name);
    }
    header.extend(ds.column_names().iter().map(String::as_str));
    w.write_record(&header)?;

    let mut fields: Vec<String> = Vec::with_capacity(header.len());
    for i in 0..ds.n_rows() {
        fields.clear();
        if let Some(g) = ds.groups() {
            fields.push(g.labels[i].clone());
        }
        if let Some(t) = ds.time() {
            fields.push(t.index[i].to_string());
        }
        fields.extend(ds.row(i).iter().map(|v| v.to_string()));
        w.write_record(&fields)?;
    }
    w.flush().map_err(|source| Error::Io { path: "<output>".into(), source })?;
    Ok(())
}
