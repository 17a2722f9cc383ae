use std::io::Write;

use clap::ValueEnum;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Tsv,
}

/// A flat record for delimited output: `(column, value)` pairs.
pub type Row = Vec<(&'static str, String)>;

pub fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Prints `json` as pretty JSON, or `rows` as a delimited table whose
/// header is taken from the first row.
pub fn emit<T: Serialize>(
    out: &mut impl Write,
    format: Format,
    json: &T,
    rows: &[Row],
) -> bernoulli_ras::Result<()> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, json)?;
            writeln!(out)?;
        }
        Format::Csv | Format::Tsv => {
            let delim = if format == Format::Csv { b',' } else { b'\t' };
            let mut w = csv::WriterBuilder::new().delimiter(delim).from_writer(out);
            if let Some(first) = rows.first() {
                w.write_record(first.iter().map(|(k, _)| *k))?;
            }
            for row in rows {
                w.write_record(row.iter().map(|(_, v)| v.as_str()))?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
