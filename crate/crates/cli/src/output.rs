//! Report serialization: JSON with 17 significant digits, versioned CSV.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::config::{CommandKind, RunConfig};
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const CSV_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema_version: u32,
    pub version: String,
    pub command: CommandKind,
    pub seed: Option<u64>,
    pub config: RunConfig,
    pub results: serde_json::Value,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(config: &RunConfig, results: serde_json::Value, warnings: Vec<String>) -> Report {
        Report {
            schema_version: SCHEMA_VERSION,
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: config.command.expect("resolved config carries its command"),
            seed: config.seed,
            config: config.clone(),
            results,
            warnings,
        }
    }
}

/// Pretty JSON where every float is printed with 17 significant digits.
struct Sig17<'a>(PrettyFormatter<'a>);

impl Formatter for Sig17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(fmt_f64(v).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, v as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// `d.dddddddddddddddde±x`; non-finite values print as `NaN`, `inf`, `-inf`
/// (JSON output maps them to `null` before reaching here).
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .map_err(|e| CliError::numerical(format!("serializing report: {e}")))?;
    buf.push(b'\n');
    Ok(buf)
}

/// Serializes through `serde_json::Value`, which turns non-finite floats
/// into `null`.
pub fn to_value<T: Serialize>(value: &T) -> Result<serde_json::Value, CliError> {
    serde_json::to_value(value).map_err(|e| CliError::numerical(format!("serializing results: {e}")))
}

/// CSV with a leading `schema_version` column.
pub struct CsvTable {
    writer: csv::Writer<Vec<u8>>,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Result<CsvTable, CliError> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["schema_version"];
        header.extend_from_slice(columns);
        writer.write_record(&header).map_err(csv_err)?;
        Ok(CsvTable { writer })
    }

    pub fn row(&mut self, cells: &[String]) -> Result<(), CliError> {
        let mut rec = vec![CSV_VERSION.to_string()];
        rec.extend_from_slice(cells);
        self.writer.write_record(&rec).map_err(csv_err)
    }

    pub fn finish(self) -> Result<Vec<u8>, CliError> {
        self.writer.into_inner().map_err(|e| CliError::numerical(format!("csv: {e}")))
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::numerical(format!("csv: {e}"))
}

/// `-` is standard output.
pub fn write_output(path: &str, bytes: &[u8]) -> Result<(), CliError> {
    if path == "-" {
        let mut out = io::stdout().lock();
        out.write_all(bytes).and_then(|_| out.flush())
    } else {
        std::fs::write(path, bytes)
    }
    .map_err(|e| CliError::input(format!("--out: cannot write {path}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        let v = serde_json::json!({"a": 0.1, "b": 12.0, "c": f64::NAN, "n": 3});
        let s = String::from_utf8(to_json(&v).unwrap()).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("1.2000000000000000e1"), "{s}");
        assert!(s.contains("\"c\": null"), "{s}");
        assert!(s.contains("\"n\": 3"), "{s}");
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"].as_f64(), Some(0.1));
    }
}
