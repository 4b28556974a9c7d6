//! CSV tables and JSON documents carrying a schema version and config hash.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use num_complex::Complex64;

pub const SCHEMA_VERSION: u32 = 1;

/// Shortest representation that parses back to the same bits.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("not a number: `{s}`")))
}

/// `[re, im]` cells for a complex number.
pub fn fmt_c64(z: Complex64) -> [String; 2] {
    [fmt_f64(z.re), fmt_f64(z.im)]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Parse(format!(
                "row has {} cells, table has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "lowercase")]
pub enum Payload {
    Table(CsvTable),
    Document(Value),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportRecord {
    pub schema_version: u32,
    pub command: String,
    pub config_hash: String,
    pub payload: Payload,
}

impl ExportRecord {
    pub fn table(command: &str, config_hash: &str, table: CsvTable) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            config_hash: config_hash.into(),
            payload: Payload::Table(table),
        }
    }

    pub fn document(command: &str, config_hash: &str, doc: Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            config_hash: config_hash.into(),
            payload: Payload::Document(doc),
        }
    }

    /// Tables become CSV with `# key=value` header lines; documents become JSON.
    pub fn render(&self) -> Result<String> {
        match &self.payload {
            Payload::Table(t) => {
                let mut out = format!(
                    "# schema_version={}\n# command={}\n# config_hash={}\n",
                    self.schema_version, self.command, self.config_hash
                );
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&t.columns).map_err(csv_err)?;
                for r in &t.rows {
                    w.write_record(r).map_err(csv_err)?;
                }
                let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
                out.push_str(&String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))?);
                Ok(out)
            }
            Payload::Document(_) => {
                serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
            }
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            return serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()));
        }
        let mut schema_version = None;
        let mut command = None;
        let mut config_hash = None;
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            let Some((k, v)) = line[1..].trim().split_once('=') else { continue };
            match k {
                "schema_version" => {
                    schema_version = Some(v.parse().map_err(|_| Error::Parse(format!("schema_version `{v}`")))?)
                }
                "command" => command = Some(v.to_string()),
                "config_hash" => config_hash = Some(v.to_string()),
                _ => {}
            }
        }
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let columns = rdr.headers().map_err(csv_err)?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            rows.push(rec.map_err(csv_err)?.iter().map(String::from).collect());
        }
        let missing = |k: &str| Error::Parse(format!("missing `{k}` header line"));
        Ok(Self {
            schema_version: schema_version.ok_or_else(|| missing("schema_version"))?,
            command: command.ok_or_else(|| missing("command"))?,
            config_hash: config_hash.ok_or_else(|| missing("config_hash"))?,
            payload: Payload::Table(CsvTable { columns, rows }),
        })
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn float_format_round_trips() {
        for x in [0.0, -0.0, 1.0, 0.1, 1e-4, 9.99e-5, 1e15, -3.25e-300, 2.0f64.sqrt(), f64::MAX, f64::MIN_POSITIVE] {
            let s = fmt_f64(x);
            assert_eq!(parse_f64(&s).unwrap().to_bits(), x.to_bits(), "{x} -> {s}");
        }
        assert_eq!(fmt_f64(1e-5), "1e-5");
        assert_eq!(fmt_f64(0.25), "0.25");
    }

    #[test]
    fn table_round_trip() {
        let mut t = CsvTable::new(["n", "re", "status"]);
        t.push(vec!["2".into(), fmt_f64(-1.05), "ok".into()]).unwrap();
        t.push(vec!["4".into(), fmt_f64(1e-20), "needs, quoting".into()]).unwrap();
        assert!(t.push(vec!["x".into()]).is_err());
        let r = ExportRecord::table("eps", "abc", t);
        let text = r.render().unwrap();
        assert!(text.starts_with("# schema_version=1\n# command=eps\n# config_hash=abc\n"));
        assert_eq!(ExportRecord::parse(&text).unwrap(), r);
    }

    #[test]
    fn document_round_trip() {
        let r = ExportRecord::document("holonomy", "h", json!({"m": [[0.1, -1e-300]], "ok": true}));
        let text = r.render().unwrap();
        assert_eq!(ExportRecord::parse(&text).unwrap(), r);
    }
}
