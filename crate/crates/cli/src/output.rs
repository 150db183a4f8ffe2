use std::io::{self, Write};

use serde::Serialize;

use crate::config::Format;

/// A report record that can be written in every output format.
pub trait Record: Serialize {
    fn csv_header(params: &[String]) -> Vec<String>;
    fn csv_rows(&self, params: &[String]) -> Vec<Vec<String>>;
    fn text(&self) -> String;
}

pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        // shortest round-trip form, same as the JSON output
        serde_json::to_string(&v).unwrap_or_default()
    } else {
        String::new()
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn write_records<R: Record, W: Write>(out: W, format: Format, params: &[String], records: &[R]) -> io::Result<()> {
    match format {
        Format::Json => {
            let mut out = io::BufWriter::new(out);
            for r in records {
                serde_json::to_writer(&mut out, r)?;
                out.write_all(b"\n")?;
            }
            out.flush()
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(R::csv_header(params))?;
            for r in records {
                for row in r.csv_rows(params) {
                    w.write_record(row)?;
                }
            }
            w.flush()
        }
        Format::Text => {
            let mut out = io::BufWriter::new(out);
            for r in records {
                writeln!(out, "{}", r.text())?;
            }
            out.flush()
        }
    }
}
