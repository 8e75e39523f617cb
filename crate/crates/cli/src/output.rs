use std::fs::File;
use std::io::{self, BufWriter, Write};

use serde::Serialize;

use crate::{Failure, Format, RunConfig};

pub const FORMAT_VERSION: &str = "sgt-output/1";

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    format_version: &'static str,
    config: &'a RunConfig,
    result: &'a T,
}

/// A finished result in both renderings; the caller picks one.
pub struct Report<T: Serialize> {
    pub result: T,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

fn io_failure(e: impl std::fmt::Display) -> Failure {
    Failure::Input(format!("cannot write output: {e}"))
}

pub fn emit<T: Serialize>(config: &RunConfig, report: &Report<T>) -> Result<(), Failure> {
    let sink: Box<dyn Write> = match &config.out {
        Some(path) => Box::new(File::create(path).map_err(io_failure)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut sink = BufWriter::new(sink);
    let config_json = serde_json::to_string(config).map_err(io_failure)?;
    match config.format.unwrap_or(Format::Json) {
        Format::Json => {
            let envelope = Envelope {
                format_version: FORMAT_VERSION,
                config,
                result: &report.result,
            };
            serde_json::to_writer_pretty(&mut sink, &envelope).map_err(io_failure)?;
            writeln!(sink).map_err(io_failure)?;
        }
        Format::Csv => {
            writeln!(sink, "# format_version: {FORMAT_VERSION}").map_err(io_failure)?;
            writeln!(sink, "# config: {config_json}").map_err(io_failure)?;
            let mut writer = csv::Writer::from_writer(&mut sink);
            writer.write_record(&report.header).map_err(io_failure)?;
            for row in &report.rows {
                writer.write_record(row).map_err(io_failure)?;
            }
            writer.flush().map_err(io_failure)?;
        }
    }
    sink.flush().map_err(io_failure)
}

/// Space-separated signed integers, the CSV rendering of a cylinder key.
pub fn key_text(key: &[i64]) -> String {
    key.iter()
        .map(|k| k.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Shortest round-trip rendering, matching the JSON output.
pub fn num(x: f64) -> String {
    serde_json::to_string(&x).unwrap_or_default()
}
