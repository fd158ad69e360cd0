use std::collections::BTreeMap;
use std::io::{self, Write};

use clap::ValueEnum;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Jsonl,
    Csv,
}

/// One result line. `stderr` is present exactly when the method is statistical.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub target: String,
    pub method: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    pub meta: BTreeMap<String, String>,
}

impl ReportRow {
    pub fn new(target: impl Into<String>, method: impl Into<String>, value: f64) -> Self {
        ReportRow { target: target.into(), method: method.into(), value, stderr: None, meta: BTreeMap::new() }
    }

    pub fn stderr(mut self, stderr: f64) -> Self {
        self.stderr = Some(stderr);
        self
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }
}

pub fn write_rows(rows: &[ReportRow], format: Format, out: &mut dyn Write) -> io::Result<()> {
    match format {
        Format::Jsonl => {
            for row in rows {
                serde_json::to_writer(&mut *out, row)?;
                writeln!(out)?;
            }
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["target", "method", "value", "stderr", "meta"])?;
            for row in rows {
                let meta: Vec<String> = row.meta.iter().map(|(k, v)| format!("{k}={v}")).collect();
                w.write_record([
                    row.target.clone(),
                    row.method.clone(),
                    row.value.to_string(),
                    row.stderr.map(|s| s.to_string()).unwrap_or_default(),
                    meta.join(";"),
                ])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_omits_missing_stderr() {
        let rows =
            vec![ReportRow::new("d", "exact", 1.75), ReportRow::new("d", "sampler", 1.7).stderr(0.01).meta("seed", 7)];
        let mut buf = Vec::new();
        write_rows(&rows, Format::Jsonl, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], r#"{"target":"d","method":"exact","value":1.75,"meta":{}}"#);
        assert_eq!(lines[1], r#"{"target":"d","method":"sampler","value":1.7,"stderr":0.01,"meta":{"seed":"7"}}"#);
    }

    #[test]
    fn csv_quotes_subset_targets() {
        let rows = vec![ReportRow::new("{v,d}", "exact", 1.5).meta("a", 1).meta("b", 2)];
        let mut buf = Vec::new();
        write_rows(&rows, Format::Csv, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "target,method,value,stderr,meta\n\"{v,d}\",exact,1.5,,a=1;b=2\n");
    }
}
