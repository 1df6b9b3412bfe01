use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use bsqlens_core::{write_table, Cell};
use serde_json::{Map, Value};

use crate::{Failure, TableFormat};

/// A buffered writer on `path`, or on stdout when no path is given.
pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| with_path(e, p))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    let mut w = sink(path)?;
    w.write_all(bytes)?;
    w.flush()?;
    Ok(())
}

pub fn with_path(e: io::Error, path: &Path) -> Failure {
    Failure::new(
        "io",
        anyhow::Error::new(e).context(path.display().to_string()),
    )
}

pub fn table_bytes(
    schema: &[&str],
    rows: &[Vec<Cell>],
    format: TableFormat,
) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    match format {
        TableFormat::Csv => write_table(schema, rows, &mut buf)?,
        TableFormat::Json => {
            let records: Vec<Value> = rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = schema
                        .iter()
                        .zip(row)
                        .map(|(k, c)| (k.to_string(), json_cell(c)))
                        .collect();
                    Value::Object(obj)
                })
                .collect();
            serde_json::to_writer_pretty(&mut buf, &records).map_err(io::Error::from)?;
            buf.push(b'\n');
        }
    }
    Ok(buf)
}

fn json_cell(c: &Cell) -> Value {
    match c {
        Cell::Text(s) => Value::String(s.clone()),
        Cell::Int(n) => Value::from(*n),
        Cell::Bsq(a) => Value::String(a.to_string()),
        Cell::Ratio(r) => Value::from(*r),
    }
}

pub fn write_csv(path: &Path, schema: &[&str], rows: &[Vec<Cell>]) -> Result<(), Failure> {
    emit(Some(path), &table_bytes(schema, rows, TableFormat::Csv)?)
}
