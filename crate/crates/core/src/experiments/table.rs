//! Column-oriented result tables with CSV and JSON emission.
//!
//! Numbers are written with 12 significant digits (C `%.12g` style) so a
//! table that is emitted, parsed back and emitted again reproduces the same
//! bytes.

use std::io::Write;

use serde_json::{Map, Number, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Usage(format!("unknown format `{other}` (csv|json)"))),
        }
    }
}

/// Ordered key/value header identifying where a table came from.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Provenance {
    pub entries: Vec<(String, String)>,
}

impl Provenance {
    pub fn new(command: &str, config_digest: &str, master_seed: u64) -> Self {
        Self {
            entries: vec![
                ("command".into(), command.into()),
                ("config_digest".into(), config_digest.into()),
                ("master_seed".into(), master_seed.to_string()),
                (
                    "artifact_version".into(),
                    format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
                ),
            ],
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn push(&mut self, key: &str, value: impl Into<String>) {
        self.entries.push((key.to_string(), value.into()));
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub provenance: Provenance,
    pub columns: Vec<Column>,
}

impl ResultTable {
    pub fn new(provenance: Provenance, names: &[&str]) -> Self {
        Self {
            provenance,
            columns: names
                .iter()
                .map(|n| Column {
                    name: n.to_string(),
                    values: Vec::new(),
                })
                .collect(),
        }
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Dimension(format!(
                "row has {} values for {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        for (c, &v) in self.columns.iter_mut().zip(row) {
            c.values.push(v);
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.values.len())
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_rows();
        match self.columns.iter().find(|c| c.values.len() != n) {
            Some(c) => Err(Error::Dimension(format!(
                "column `{}` has {} rows, expected {n}",
                c.name,
                c.values.len()
            ))),
            None => Ok(()),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.provenance.entries {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        let header: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for r in 0..self.n_rows() {
            let row: Vec<String> = self.columns.iter().map(|c| format_number(c.values[r])).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let provenance: Map<String, Value> = self
            .provenance
            .entries
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect();
        let columns: Map<String, Value> = self
            .columns
            .iter()
            .map(|c| {
                let values = c
                    .values
                    .iter()
                    .map(|&v| {
                        // store exactly what the CSV would show
                        let rounded: f64 = format_number(v).parse().unwrap_or(f64::NAN);
                        Number::from_f64(rounded).map_or(Value::Null, Value::Number)
                    })
                    .collect();
                (c.name.clone(), Value::Array(values))
            })
            .collect();
        let mut root = Map::new();
        root.insert("provenance".into(), Value::Object(provenance));
        root.insert("columns".into(), Value::Object(columns));
        let mut s = serde_json::to_string_pretty(&Value::Object(root)).expect("JSON serialization");
        s.push('\n');
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut provenance = Provenance::default();
        let mut lines = text.lines();
        let header = loop {
            let line = lines
                .next()
                .ok_or_else(|| Error::Usage("CSV has no header row".into()))?;
            match line.strip_prefix("# ") {
                Some(entry) => {
                    let (k, v) = entry
                        .split_once(": ")
                        .ok_or_else(|| Error::Usage(format!("bad provenance line `{line}`")))?;
                    provenance.push(k, v);
                }
                None => break line,
            }
        };
        let names: Vec<&str> = header.split(',').collect();
        let mut table = ResultTable::new(provenance, &names);
        for line in lines.filter(|l| !l.is_empty()) {
            let row = line
                .split(',')
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| Error::Usage(format!("bad number `{v}` in CSV")))
                })
                .collect::<Result<Vec<_>>>()?;
            table.push_row(&row)?;
        }
        Ok(table)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let root: Value =
            serde_json::from_str(text).map_err(|e| Error::Usage(format!("bad JSON table: {e}")))?;
        let provenance = Provenance {
            entries: root["provenance"]
                .as_object()
                .ok_or_else(|| Error::Usage("JSON table lacks provenance".into()))?
                .iter()
                .map(|(k, v)| (k.clone(), v.as_str().unwrap_or_default().to_string()))
                .collect(),
        };
        let columns = root["columns"]
            .as_object()
            .ok_or_else(|| Error::Usage("JSON table lacks columns".into()))?
            .iter()
            .map(|(name, values)| Column {
                name: name.clone(),
                values: values
                    .as_array()
                    .map(|a| a.iter().map(|v| v.as_f64().unwrap_or(f64::NAN)).collect())
                    .unwrap_or_default(),
            })
            .collect();
        let table = ResultTable {
            provenance,
            columns,
        };
        table.validate()?;
        Ok(table)
    }
}

pub fn emit(table: &ResultTable, format: Format, sink: &mut dyn Write) -> Result<()> {
    table.validate()?;
    let text = match format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(),
    };
    sink.write_all(text.as_bytes())?;
    sink.flush()?;
    Ok(())
}

/// `%.12g`-style rendering: 12 significant digits, trailing zeros removed,
/// scientific notation outside `1e-5 <= |x| < 1e12`.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..12).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (11 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
