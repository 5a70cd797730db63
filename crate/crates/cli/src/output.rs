use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use clap::ValueEnum;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Writes `records` to `out`, or to stdout when no path is given.
pub fn write_records(records: &[Value], format: Format, out: Option<&Path>) -> io::Result<()> {
    let mut sink: Box<dyn Write> = match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    };
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut sink, records)?;
            writeln!(sink)?;
        }
        Format::Csv => write_csv(records, &mut sink)?,
    }
    sink.flush()
}

/// One CSV row per record after a `# schema_version` comment line, which
/// replaces the per-record field. Nested objects become dotted column names;
/// the columns are the union over all records in first-seen order.
fn write_csv(records: &[Value], sink: &mut dyn Write) -> io::Result<()> {
    writeln!(sink, "# schema_version: {}", gigwalk::SCHEMA_VERSION)?;
    let rows: Vec<Vec<(String, String)>> = records
        .iter()
        .map(|r| {
            let mut cells = Vec::new();
            flatten("", r, &mut cells);
            cells.retain(|(k, _)| k != "schema_version");
            cells
        })
        .collect();
    let mut columns: Vec<String> = Vec::new();
    for row in &rows {
        for (key, _) in row {
            if !columns.contains(key) {
                columns.push(key.clone());
            }
        }
    }
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(&columns)?;
    for row in &rows {
        writer.write_record(
            columns
                .iter()
                .map(|c| row.iter().find(|(k, _)| k == c).map(|(_, v)| v.as_str()).unwrap_or("")),
        )?;
    }
    writer.flush()
}

fn flatten(prefix: &str, value: &Value, cells: &mut Vec<(String, String)>) {
    let key = |name: &str| {
        if prefix.is_empty() {
            name.to_string()
        } else {
            format!("{prefix}.{name}")
        }
    };
    match value {
        Value::Object(map) => {
            for (name, v) in map {
                flatten(&key(name), v, cells);
            }
        }
        Value::Null => cells.push((prefix.to_string(), String::new())),
        Value::String(s) => cells.push((prefix.to_string(), s.clone())),
        Value::Array(items) => {
            let joined: Vec<String> = items
                .iter()
                .map(|v| match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect();
            cells.push((prefix.to_string(), joined.join(";")));
        }
        other => cells.push((prefix.to_string(), other.to_string())),
    }
}

/// Serializes `record` and sets its `runtime_ms` field.
pub fn to_record<T: serde::Serialize>(record: &T, runtime_ms: Option<u64>) -> Value {
    let mut value = serde_json::to_value(record).expect("records serialize");
    if let Value::Object(map) = &mut value {
        map.insert("runtime_ms".into(), runtime_ms.map_or(Value::Null, Value::from));
    } else {
        let mut map = Map::new();
        map.insert("value".into(), value);
        map.insert("runtime_ms".into(), runtime_ms.map_or(Value::Null, Value::from));
        value = Value::Object(map);
    }
    value
}
