//! Writes a [`ResultSet`] to a directory: one CSV per table, one JSON per
//! grid, `metadata.json`, and `trace.jsonl` when the run produced a trace.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::json;
use thiserror::Error;

use qsim_core::des::trace_to_json_lines;

use crate::results::{Cell, ResultSet, Table};

#[derive(Debug, Error)]
#[error("{}: {source}", path.display())]
pub struct ExportError {
    pub path: PathBuf,
    pub source: std::io::Error,
}

/// Scientific notation with 17 significant digits, enough to round-trip.
pub fn format_number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn cell_text(cell: &Cell) -> String {
    match cell {
        Cell::Int(i) => i.to_string(),
        Cell::Num(x) => format_number(*x),
        Cell::Text(s) => s.clone(),
        Cell::Null => String::new(),
    }
}

/// RFC 4180 CSV: header row, CRLF line ends, quotes only where required.
pub fn write_table_csv<W: Write>(table: &Table, out: W) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(out);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(cell_text))?;
    }
    w.flush()
}

/// File-name stem safe on every platform.
pub fn file_stem(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn write_file(path: PathBuf, bytes: &[u8]) -> Result<PathBuf, ExportError> {
    std::fs::write(&path, bytes).map_err(|source| ExportError { path: path.clone(), source })?;
    Ok(path)
}

pub fn export_results(rs: &ResultSet, dir: &Path) -> Result<Vec<PathBuf>, ExportError> {
    std::fs::create_dir_all(dir).map_err(|source| ExportError { path: dir.to_owned(), source })?;
    let mut written = Vec::new();
    for (name, table) in &rs.tables {
        let mut buf = Vec::new();
        write_table_csv(table, &mut buf).expect("writing to memory cannot fail");
        written.push(write_file(dir.join(format!("{}.csv", file_stem(name))), &buf)?);
    }
    for (name, grid) in &rs.grids {
        let text = serde_json::to_vec(grid).expect("grids serialize");
        written.push(write_file(dir.join(format!("{}.json", file_stem(name))), &text)?);
    }
    if !rs.traces.is_empty() {
        written.push(write_file(dir.join("trace.jsonl"), trace_to_json_lines(&rs.traces).as_bytes())?);
    }
    let meta = json!({
        "run_id": rs.run_id,
        "metadata": rs.metadata,
        "warnings": rs.warnings,
        "tables": rs.tables.keys().collect::<Vec<_>>(),
        "grids": rs.grids.keys().collect::<Vec<_>>(),
    });
    let text = serde_json::to_vec_pretty(&meta).expect("metadata serializes");
    written.push(write_file(dir.join("metadata.json"), &text)?);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(format_number(0.1), "1.0000000000000001e-1");
        assert_eq!(format_number(-2.5), "-2.5000000000000000e0");
        for x in [std::f64::consts::PI, 1.0 / 3.0, 4.836679380373205e-9, f64::MIN_POSITIVE] {
            assert_eq!(format_number(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_quotes_only_when_needed() {
        let mut t = Table::new(&["name", "value"]);
        t.push(vec!["a,b".into(), 1usize.into()]);
        t.push(vec!["say \"hi\"".into(), Cell::Null]);
        let mut buf = Vec::new();
        write_table_csv(&t, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "name,value\r\n\"a,b\",1\r\n\"say \"\"hi\"\"\",\r\n");
    }

    #[test]
    fn stems_are_sanitized() {
        assert_eq!(file_stem("jdr/after encoding"), "jdr_after_encoding");
    }
}
