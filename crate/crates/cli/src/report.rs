//! The report envelope and its JSON / CSV renderings.

use std::io::Write;

use anyhow::Result;
use apxbsp_core::report::Status;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub config: Value,
    pub results: Value,
    pub status: Status,
    /// Seconds.
    pub wall_time: f64,
}

/// What a command hands back before the envelope is filled in.
pub struct Output {
    pub results: Value,
    /// One CSV row per profile point; `None` flattens `results` into a single row.
    pub rows: Option<Vec<Value>>,
    pub status: Status,
}

impl Output {
    pub fn new(results: Value, status: Status) -> Self {
        Self {
            results,
            rows: None,
            status,
        }
    }

    pub fn with_rows(mut self, rows: Vec<Value>) -> Self {
        self.rows = Some(rows);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

pub fn write_json(report: &Report, out: &mut dyn Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, report)?;
    writeln!(out)?;
    Ok(())
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&key(k), x, out);
            }
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Array(_) => out.push((prefix.to_string(), v.to_string())),
        _ => out.push((prefix.to_string(), v.to_string())),
    }
}

pub fn write_csv(rows: &[Value], results: &Value, out: &mut dyn Write) -> Result<()> {
    let flat: Vec<Vec<(String, String)>> = if rows.is_empty() {
        let mut scalars = Map::new();
        if let Value::Object(m) = results {
            for (k, v) in m {
                if !v.is_array() {
                    scalars.insert(k.clone(), v.clone());
                }
            }
        }
        let mut row = Vec::new();
        flatten("", &Value::Object(scalars), &mut row);
        vec![row]
    } else {
        rows.iter()
            .map(|r| {
                let mut row = Vec::new();
                flatten("", r, &mut row);
                row
            })
            .collect()
    };
    // union of keys in first-seen order
    let mut header: Vec<String> = Vec::new();
    for row in &flat {
        for (k, _) in row {
            if !header.contains(k) {
                header.push(k.clone());
            }
        }
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&header)?;
    for row in &flat {
        let record: Vec<&str> = header
            .iter()
            .map(|h| row.iter().find(|(k, _)| k == h).map(|(_, v)| v.as_str()).unwrap_or(""))
            .collect();
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}
